#include "slicedrift/drift.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "slicedrift/error.hpp"
#include "slicedrift/stats.hpp"

namespace slicedrift {

using nlohmann::ordered_json;

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string to_string(Goal g) {
    return g == Goal::distribution_change ? "distribution_change" : "mcr_degradation";
}

Goal goal_from_string(const std::string& s) {
    if (s == "distribution_change") return Goal::distribution_change;
    if (s == "mcr_degradation") return Goal::mcr_degradation;
    throw ConfigError("unknown goal: " + s);
}

DriftTestCore drift_test_core(const SliceSet& s, const Dataset& d2, Goal goal, bool continuity) {
    if (s.rules.empty()) throw EmptySliceSetError("slice set has no rules");
    d2.validate();

    std::vector<SliceRule> rules;
    rules.reserve(s.rules.size());
    for (const auto& bs : s.rules) rules.push_back(bs.rule);

    // Label-free: the deployment indicator column is never consulted.
    auto mapped = map_slices(rules, d2, /*use_theta=*/false);

    const std::uint64_t N1 = s.N;
    const std::uint64_t N2 = d2.num_rows();
    const auto alternative = goal == Goal::distribution_change ? stats::Alternative::two_sided
                                                               : stats::Alternative::greater;

    DriftTestCore core;
    core.per_slice.resize(s.rules.size());
    for (std::size_t i = 0; i < s.rules.size(); ++i) {
        auto& r = core.per_slice[i];
        r.rule_id = s.rules[i].rule.id;
        r.n1 = s.rules[i].n;
        r.N1 = N1;
        r.n2 = mapped[i].n;
        r.N2 = N2;
        r.pi_hat1 = N1 == 0 ? 0.0 : static_cast<double>(r.n1) / static_cast<double>(N1);
        r.pi_hat2 = mapped[i].pi_hat;
        stats::ProportionTestInput inp;
        inp.n1 = r.n1;
        inp.N1 = N1;
        inp.n2 = r.n2;
        inp.N2 = N2;
        inp.alternative = alternative;
        inp.continuity_corrected = continuity;
        r.p_value = stats::two_proportion_test(inp);
        r.cohens_h = stats::cohens_h(r.pi_hat1, r.pi_hat2);
    }
    return core;
}

DriftReport apply_holm(const DriftTestCore& core, Goal goal, double alpha, bool continuity) {
    std::vector<double> p;
    p.reserve(core.per_slice.size());
    for (const auto& r : core.per_slice) p.push_back(r.p_value);
    auto holm = stats::holm_bonferroni(p, alpha);

    DriftReport report;
    report.goal = goal;
    report.alpha = alpha;
    report.continuity_corrected = continuity;
    report.per_slice = core.per_slice;
    for (std::size_t i = 0; i < report.per_slice.size(); ++i) {
        report.per_slice[i].holm_rejected = holm.rejected[i];
    }
    report.num_rejected = holm.num_rejected;
    report.drift_detected = holm.num_rejected >= 1;
    return report;
}

DriftReport detect_drift(const SliceSet& s, const Dataset& d2, Goal goal, double alpha,
                         bool continuity) {
    return apply_holm(drift_test_core(s, d2, goal, continuity), goal, alpha, continuity);
}

std::string DriftReport::to_json_string(int indent) const {
    ordered_json j;
    j["format"] = "driftreport/v1";
    j["goal"] = to_string(goal);
    j["alpha"] = alpha;
    j["continuity_corrected"] = continuity_corrected;
    j["drift_detected"] = drift_detected;
    j["num_rejected"] = num_rejected;
    j["per_slice"] = ordered_json::array();
    for (const auto& r : per_slice) {
        ordered_json e;
        e["id"] = r.rule_id;
        e["n1"] = r.n1;
        e["N1"] = r.N1;
        e["n2"] = r.n2;
        e["N2"] = r.N2;
        e["pi_hat1"] = r.pi_hat1;
        e["pi_hat2"] = r.pi_hat2;
        e["p_value"] = r.p_value;
        e["cohens_h"] = r.cohens_h;
        e["holm_rejected"] = r.holm_rejected;
        j["per_slice"].push_back(std::move(e));
    }
    return j.dump(indent);
}

void DriftReport::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write drift report: " + path);
    out << to_json_string() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

std::string DriftReport::summary_line() const {
    return "DRIFT goal=" + to_string(goal) + " alpha=" + format_double(alpha) +
           " rejected=" + std::to_string(num_rejected) + "/" + std::to_string(per_slice.size());
}

}  // namespace slicedrift
