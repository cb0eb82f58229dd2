#include "slicedrift/slice.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "slicedrift/error.hpp"
#include "slicedrift/parallel.hpp"
#include "slicedrift/stats.hpp"

namespace slicedrift {

using nlohmann::ordered_json;

namespace {

std::string format_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

// --- bitmaps: one bit per row ---

using Mask = std::vector<std::uint64_t>;

std::size_t mask_words(std::size_t n_rows) { return (n_rows + 63) / 64; }

Mask full_mask(std::size_t n_rows) {
    Mask m(mask_words(n_rows), ~0ULL);
    if (n_rows % 64 != 0 && !m.empty()) m.back() = (1ULL << (n_rows % 64)) - 1;
    return m;
}

void and_into(Mask& dst, const Mask& src) {
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] &= src[i];
}

std::uint64_t popcount(const Mask& m) {
    std::uint64_t c = 0;
    for (auto w : m) c += static_cast<std::uint64_t>(std::popcount(w));
    return c;
}

std::uint64_t popcount_and(const Mask& a, const Mask& b) {
    std::uint64_t c = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
        c += static_cast<std::uint64_t>(std::popcount(a[i] & b[i]));
    return c;
}

Mask constraint_mask(const FeatureConstraint& fc, const Column& col, std::size_t n_rows) {
    Mask m(mask_words(n_rows), 0);
    if (fc.kind == FeatureKind::numeric) {
        for (std::size_t i = 0; i < n_rows; ++i) {
            if (fc.matches_numeric(col.numeric[i])) m[i / 64] |= 1ULL << (i % 64);
        }
    } else {
        for (std::size_t i = 0; i < n_rows; ++i) {
            if (fc.matches_code(col.codes[i])) m[i / 64] |= 1ULL << (i % 64);
        }
    }
    return m;
}

Mask theta_mask(const Dataset& d) {
    Mask m(mask_words(d.num_rows()), 0);
    for (std::size_t i = 0; i < d.num_rows(); ++i) {
        if (d.theta[i]) m[i / 64] |= 1ULL << (i % 64);
    }
    return m;
}

std::size_t checked_feature_index(const Dataset& d, const FeatureConstraint& fc) {
    std::size_t idx = d.schema.feature_index(fc.feature);
    if (idx == FeatureSchema::npos) throw SchemaError("rule names unknown feature: " + fc.feature);
    if (d.schema.features[idx].kind != fc.kind)
        throw SchemaError("rule constraint kind mismatch on feature: " + fc.feature);
    return idx;
}

Mask rule_mask(const SliceRule& rule, const Dataset& d) {
    const std::size_t n = d.num_rows();
    Mask m = full_mask(n);
    for (const auto& fc : rule.constraints) {
        std::size_t idx = checked_feature_index(d, fc);
        and_into(m, constraint_mask(fc, d.columns[idx], n));
    }
    return m;
}

// weakness test m/n > M/N without division
bool weaker_than_overall(std::uint64_t m, std::uint64_t n, std::uint64_t M, std::uint64_t N) {
    return static_cast<unsigned __int128>(m) * N > static_cast<unsigned __int128>(M) * n;
}

std::uint64_t fnv1a(const Mask& m) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::uint64_t w : m) {
        for (int b = 0; b < 8; ++b) {
            h ^= (w >> (b * 8)) & 0xff;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

}  // namespace

bool FeatureConstraint::matches_numeric(double v) const {
    return !std::isnan(v) && v >= lo && v <= hi;
}

bool FeatureConstraint::matches_code(std::int32_t code) const {
    if (code == kMissingCode) return false;
    return std::binary_search(values.begin(), values.end(), code);
}

std::string SliceRule::canonical_id(const std::vector<FeatureConstraint>& constraints) {
    std::vector<const FeatureConstraint*> sorted;
    sorted.reserve(constraints.size());
    for (const auto& c : constraints) sorted.push_back(&c);
    std::sort(sorted.begin(), sorted.end(),
              [](const auto* a, const auto* b) { return a->feature < b->feature; });
    std::string id;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        if (i) id += '&';
        const auto& c = *sorted[i];
        id += c.feature;
        if (c.kind == FeatureKind::numeric) {
            id += ":[" + format_double(c.lo) + "," + format_double(c.hi) + "]";
        } else {
            id += ":{";
            for (std::size_t v = 0; v < c.values.size(); ++v) {
                if (v) id += ',';
                id += std::to_string(c.values[v]);
            }
            id += '}';
        }
    }
    return id;
}

SliceRule SliceRule::make(std::vector<FeatureConstraint> constraints) {
    std::sort(constraints.begin(), constraints.end(),
              [](const auto& a, const auto& b) { return a.feature < b.feature; });
    for (auto& c : constraints) {
        if (c.kind == FeatureKind::categorical) {
            std::sort(c.values.begin(), c.values.end());
            c.values.erase(std::unique(c.values.begin(), c.values.end()), c.values.end());
        }
    }
    SliceRule r;
    r.id = canonical_id(constraints);
    r.constraints = std::move(constraints);
    return r;
}

void SliceRule::validate(int max_order) const {
    if (constraints.empty()) throw ConfigError("slice rule has no constraints");
    if (static_cast<int>(constraints.size()) > max_order)
        throw ConfigError("slice rule order exceeds max_order: " + id);
    std::unordered_set<std::string> names;
    for (const auto& c : constraints) {
        if (!names.insert(c.feature).second)
            throw ConfigError("slice rule repeats feature: " + c.feature);
        if (c.kind == FeatureKind::numeric) {
            if (!(c.lo <= c.hi)) throw ConfigError("interval lo > hi on feature: " + c.feature);
        } else if (c.values.empty()) {
            throw ConfigError("empty value set on feature: " + c.feature);
        }
    }
}

MappedSlice map_slice(const SliceRule& rule, const Dataset& d, bool use_theta) {
    rule.validate();
    Mask m = rule_mask(rule, d);
    MappedSlice res;
    res.rule_id = rule.id;
    res.n = popcount(m);
    if (use_theta) res.m = popcount_and(m, theta_mask(d));
    res.pi_hat = d.num_rows() == 0
                     ? 0.0
                     : static_cast<double>(res.n) / static_cast<double>(d.num_rows());
    return res;
}

std::vector<MappedSlice> map_slices(const std::vector<SliceRule>& rules, const Dataset& d,
                                    bool use_theta) {
    for (const auto& r : rules) {
        r.validate();
        for (const auto& fc : r.constraints) checked_feature_index(d, fc);
    }
    std::vector<MappedSlice> out(rules.size());
    const Mask tm = use_theta ? theta_mask(d) : Mask{};
    parallel_for(rules.size(), [&](std::size_t i) {
        Mask m = rule_mask(rules[i], d);
        out[i].rule_id = rules[i].id;
        out[i].n = popcount(m);
        if (use_theta) out[i].m = popcount_and(m, tm);
        out[i].pi_hat = d.num_rows() == 0
                            ? 0.0
                            : static_cast<double>(out[i].n) / static_cast<double>(d.num_rows());
    });
    return out;
}

namespace ref {

MappedSlice map_slice(const SliceRule& rule, const Dataset& d, bool use_theta) {
    rule.validate();
    std::vector<std::size_t> idx;
    idx.reserve(rule.constraints.size());
    for (const auto& fc : rule.constraints) idx.push_back(checked_feature_index(d, fc));

    MappedSlice res;
    res.rule_id = rule.id;
    std::uint64_t n = 0, m = 0;
    for (std::size_t row = 0; row < d.num_rows(); ++row) {
        bool ok = true;
        for (std::size_t c = 0; c < idx.size() && ok; ++c) {
            const auto& fc = rule.constraints[c];
            const auto& col = d.columns[idx[c]];
            ok = fc.kind == FeatureKind::numeric ? fc.matches_numeric(col.numeric[row])
                                                 : fc.matches_code(col.codes[row]);
        }
        if (ok) {
            ++n;
            if (use_theta && d.theta[row]) ++m;
        }
    }
    res.n = n;
    if (use_theta) res.m = m;
    res.pi_hat =
        d.num_rows() == 0 ? 0.0 : static_cast<double>(n) / static_cast<double>(d.num_rows());
    return res;
}

std::vector<MappedSlice> map_slices(const std::vector<SliceRule>& rules, const Dataset& d,
                                    bool use_theta) {
    std::vector<MappedSlice> out;
    out.reserve(rules.size());
    for (const auto& r : rules) out.push_back(ref::map_slice(r, d, use_theta));
    return out;
}

}  // namespace ref

std::uint64_t SliceFinderConfig::resolve_min_support(std::uint64_t N) const {
    if (min_support > 0) return min_support;
    return std::max<std::uint64_t>(
        20, static_cast<std::uint64_t>(std::ceil(0.005 * static_cast<double>(N))));
}

void SliceFinderConfig::validate() const {
    if (!(filter_alpha > 0.0 && filter_alpha < 1.0))
        throw ConfigError("filter_alpha must be in (0,1)");
    if (max_order < 1) throw ConfigError("max_order must be >= 1");
    if (num_bins < 1) throw ConfigError("num_bins must be >= 1");
    if (max_bin_run < 1) throw ConfigError("max_bin_run must be >= 1");
}

namespace {

struct Candidate {
    std::vector<FeatureConstraint> constraints;
    std::string max_feature;  // lexicographically largest feature in the rule
    Mask mask;
    std::uint64_t n = 0;
    std::uint64_t m = 0;
    bool survived = false;
};

// Quantile edges of the non-missing values: index floor(q*(cnt-1)) of the
// sorted values at q = i/num_bins, deduplicated.
std::vector<double> quantile_edges(const std::vector<double>& column, int num_bins) {
    std::vector<double> vals;
    vals.reserve(column.size());
    for (double v : column) {
        if (!std::isnan(v)) vals.push_back(v);
    }
    if (vals.empty()) return {};
    std::sort(vals.begin(), vals.end());
    std::vector<double> edges;
    for (int i = 0; i <= num_bins; ++i) {
        std::size_t idx = (vals.size() - 1) * static_cast<std::size_t>(i) /
                          static_cast<std::size_t>(num_bins);
        double e = vals[idx];
        if (edges.empty() || e != edges.back()) edges.push_back(e);
    }
    return edges;
}

}  // namespace

SliceSet find_weak_slices(const Dataset& d, const SliceFinderConfig& config,
                          const std::string& source_name) {
    d.validate();
    config.validate();
    const std::uint64_t N = d.num_rows();
    const std::uint64_t M = d.misclassified_count();
    if (M == 0) throw NoErrorsError("dataset has no misclassified rows; weak slices undefined");
    const std::uint64_t min_support = config.resolve_min_support(N);
    if (N < min_support)
        throw DegenerateInputError("dataset smaller than min_support (" +
                                   std::to_string(min_support) + " rows needed)");

    const Mask tm = theta_mask(d);

    auto evaluate = [&](std::vector<Candidate>& cands) {
        parallel_for(cands.size(), [&](std::size_t i) {
            auto& cand = cands[i];
            if (cand.mask.empty()) {
                cand.mask = full_mask(N);
                for (const auto& fc : cand.constraints) {
                    std::size_t idx = d.schema.feature_index(fc.feature);
                    and_into(cand.mask, constraint_mask(fc, d.columns[idx], N));
                }
            }
            cand.n = popcount(cand.mask);
            cand.m = popcount_and(cand.mask, tm);
            cand.survived = cand.n >= min_support && weaker_than_overall(cand.m, cand.n, M, N) &&
                            stats::hypergeom_sf(N, M, cand.n, cand.m) < config.filter_alpha;
        });
        std::erase_if(cands, [](const Candidate& c) { return !c.survived; });
    };

    // 1-way candidates
    std::vector<Candidate> one_way;
    for (std::size_t fi = 0; fi < d.schema.features.size(); ++fi) {
        const auto& f = d.schema.features[fi];
        if (f.kind == FeatureKind::numeric) {
            auto edges = quantile_edges(d.columns[fi].numeric, config.num_bins);
            if (edges.empty()) continue;
            if (edges.size() == 1) edges.push_back(edges.front());  // constant column
            const int bins = static_cast<int>(edges.size()) - 1;
            for (int len = 1; len <= std::min(config.max_bin_run, bins); ++len) {
                for (int start = 0; start + len <= bins; ++start) {
                    FeatureConstraint fc;
                    fc.feature = f.name;
                    fc.kind = FeatureKind::numeric;
                    fc.lo = edges[static_cast<std::size_t>(start)];
                    fc.hi = edges[static_cast<std::size_t>(start + len)];
                    Candidate cand;
                    cand.constraints = {fc};
                    cand.max_feature = f.name;
                    one_way.push_back(std::move(cand));
                }
            }
        } else {
            // per-code support and error counts
            std::unordered_map<std::int32_t, std::pair<std::uint64_t, std::uint64_t>> counts;
            for (std::size_t row = 0; row < N; ++row) {
                std::int32_t code = d.columns[fi].codes[row];
                if (code == kMissingCode) continue;
                auto& [cn, cm] = counts[code];
                ++cn;
                cm += d.theta[row];
            }
            std::vector<std::int32_t> codes;
            codes.reserve(counts.size());
            for (const auto& [code, _] : counts) codes.push_back(code);
            std::sort(codes.begin(), codes.end());
            std::vector<std::int32_t> weak_union;
            for (std::int32_t code : codes) {
                FeatureConstraint fc;
                fc.feature = f.name;
                fc.kind = FeatureKind::categorical;
                fc.values = {code};
                Candidate cand;
                cand.constraints = {fc};
                cand.max_feature = f.name;
                one_way.push_back(std::move(cand));
                const auto& [cn, cm] = counts[code];
                if (weaker_than_overall(cm, cn, M, N)) weak_union.push_back(code);
            }
            if (weak_union.size() >= 2) {
                FeatureConstraint fc;
                fc.feature = f.name;
                fc.kind = FeatureKind::categorical;
                fc.values = weak_union;
                Candidate cand;
                cand.constraints = {fc};
                cand.max_feature = f.name;
                one_way.push_back(std::move(cand));
            }
        }
    }
    evaluate(one_way);

    std::vector<Candidate> survivors = one_way;
    std::vector<Candidate> frontier = one_way;
    for (int order = 2; order <= config.max_order; ++order) {
        std::vector<Candidate> next;
        for (const auto& base : frontier) {
            for (const auto& ext : one_way) {
                // extend by a strictly larger feature so each combination is
                // generated exactly once
                if (ext.max_feature <= base.max_feature) continue;
                Candidate cand;
                cand.constraints = base.constraints;
                cand.constraints.push_back(ext.constraints.front());
                cand.max_feature = ext.max_feature;
                cand.mask = base.mask;
                and_into(cand.mask, ext.mask);
                next.push_back(std::move(cand));
            }
        }
        evaluate(next);
        survivors.insert(survivors.end(), next.begin(), next.end());
        frontier = std::move(next);
        if (frontier.empty()) break;
    }

    // Deduplicate identical matched row sets; keep the smallest id.
    struct Entry {
        std::string id;
        const Candidate* cand;
    };
    std::unordered_map<std::uint64_t, std::vector<Entry>> by_hash;
    for (const auto& cand : survivors) {
        std::string id = SliceRule::canonical_id(cand.constraints);
        auto& bucket = by_hash[fnv1a(cand.mask)];
        bool merged = false;
        for (auto& e : bucket) {
            if (e.cand->mask == cand.mask) {
                if (id < e.id) e = {std::move(id), &cand};
                merged = true;
                break;
            }
        }
        if (!merged) bucket.push_back({std::move(id), &cand});
    }

    SliceSet set;
    set.source = source_name;
    set.N = N;
    set.M = M;
    for (auto& [_, bucket] : by_hash) {
        for (auto& e : bucket) {
            BaselineSlice bs;
            bs.rule = SliceRule::make(e.cand->constraints);
            bs.n = e.cand->n;
            bs.m = e.cand->m;
            set.rules.push_back(std::move(bs));
        }
    }
    std::sort(set.rules.begin(), set.rules.end(),
              [](const BaselineSlice& a, const BaselineSlice& b) { return a.rule.id < b.rule.id; });
    return set;
}

SliceSummary slice_summary(const SliceSet& s, const Dataset& d) {
    d.validate();
    const std::uint64_t M = d.misclassified_count();
    if (M == 0) throw NoErrorsError("dataset has no misclassified rows");

    SliceSummary sum;
    sum.num_slices = s.rules.size();
    if (s.rules.empty()) return sum;

    const std::size_t N = d.num_rows();
    Mask covered(mask_words(N), 0);
    std::unordered_set<std::string> feats_any, feats_1, feats_2;
    std::size_t one_feat = 0, two_feat = 0;
    for (const auto& bs : s.rules) {
        Mask m = rule_mask(bs.rule, d);
        for (std::size_t w = 0; w < covered.size(); ++w) covered[w] |= m[w];
        const std::size_t order = bs.rule.constraints.size();
        if (order == 1) ++one_feat;
        if (order == 2) ++two_feat;
        for (const auto& fc : bs.rule.constraints) {
            feats_any.insert(fc.feature);
            if (order == 1) feats_1.insert(fc.feature);
            if (order == 2) feats_2.insert(fc.feature);
        }
    }
    and_into(covered, theta_mask(d));
    const double K = static_cast<double>(s.rules.size());
    const double F = static_cast<double>(d.schema.features.size());
    sum.pct_1feat = 100.0 * static_cast<double>(one_feat) / K;
    sum.pct_2feat = 100.0 * static_cast<double>(two_feat) / K;
    sum.pct_error_coverage = 100.0 * static_cast<double>(popcount(covered)) / static_cast<double>(M);
    sum.pct_features_in_any_slice = 100.0 * static_cast<double>(feats_any.size()) / F;
    sum.pct_features_in_1feat_slice = 100.0 * static_cast<double>(feats_1.size()) / F;
    sum.pct_features_in_2feat_slice = 100.0 * static_cast<double>(feats_2.size()) / F;
    return sum;
}

// --- SliceSet JSON ---

namespace {

ordered_json constraint_to_json(const FeatureConstraint& fc) {
    ordered_json j;
    j["feature"] = fc.feature;
    if (fc.kind == FeatureKind::numeric) {
        ordered_json interval = ordered_json::array();
        interval.push_back(std::isinf(fc.lo) ? ordered_json(nullptr) : ordered_json(fc.lo));
        interval.push_back(std::isinf(fc.hi) ? ordered_json(nullptr) : ordered_json(fc.hi));
        j["interval"] = interval;
    } else {
        j["values"] = fc.values;
    }
    return j;
}

FeatureConstraint constraint_from_json(const ordered_json& j) {
    FeatureConstraint fc;
    fc.feature = j.at("feature").get<std::string>();
    if (j.contains("interval")) {
        fc.kind = FeatureKind::numeric;
        const auto& iv = j.at("interval");
        if (iv.size() != 2) throw ParseError("interval must have two entries", 0);
        fc.lo = iv[0].is_null() ? -std::numeric_limits<double>::infinity() : iv[0].get<double>();
        fc.hi = iv[1].is_null() ? std::numeric_limits<double>::infinity() : iv[1].get<double>();
    } else {
        fc.kind = FeatureKind::categorical;
        fc.values = j.at("values").get<std::vector<std::int32_t>>();
    }
    return fc;
}

}  // namespace

std::string SliceSet::to_json_string(int indent) const {
    ordered_json j;
    j["format"] = "sliceset/v1";
    j["source"] = source;
    j["N"] = N;
    j["M"] = M;
    j["rules"] = ordered_json::array();
    for (const auto& bs : rules) {
        ordered_json r;
        r["id"] = bs.rule.id;
        r["constraints"] = ordered_json::array();
        for (const auto& fc : bs.rule.constraints) r["constraints"].push_back(constraint_to_json(fc));
        r["n"] = bs.n;
        r["m"] = bs.m;
        j["rules"].push_back(std::move(r));
    }
    return j.dump(indent);
}

SliceSet SliceSet::from_json_string(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("slice set JSON parse failure: ") + e.what());
    }
    SliceSet s;
    try {
        s.source = j.value("source", std::string{});
        s.N = j.at("N").get<std::uint64_t>();
        s.M = j.at("M").get<std::uint64_t>();
        for (const auto& r : j.at("rules")) {
            std::vector<FeatureConstraint> cs;
            for (const auto& c : r.at("constraints")) cs.push_back(constraint_from_json(c));
            BaselineSlice bs;
            bs.rule = SliceRule::make(std::move(cs));
            bs.n = r.at("n").get<std::uint64_t>();
            bs.m = r.at("m").get<std::uint64_t>();
            bs.rule.validate();
            s.rules.push_back(std::move(bs));
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("slice set JSON structure: ") + e.what());
    }
    std::sort(s.rules.begin(), s.rules.end(),
              [](const BaselineSlice& a, const BaselineSlice& b) { return a.rule.id < b.rule.id; });
    return s;
}

void SliceSet::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write slice set: " + path);
    out << to_json_string() << '\n';
    if (!out) throw IoError("write failed: " + path);
}

SliceSet SliceSet::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read slice set: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return from_json_string(text);
}

}  // namespace slicedrift
