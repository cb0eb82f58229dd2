#include "slicedrift/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "slicedrift/drift.hpp"
#include "slicedrift/error.hpp"
#include "slicedrift/parallel.hpp"
#include "slicedrift/rng.hpp"

namespace slicedrift {

using nlohmann::ordered_json;

namespace {

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double_or_throw(const std::string& s, const std::string& what) {
    double v;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw IoError("report CSV: bad " + what + ": '" + s + "'");
    return v;
}

void check_probability_list(const std::vector<double>& vals, const std::string& name,
                            bool allow_above_one) {
    if (vals.empty()) throw ConfigError(name + " must not be empty");
    for (double v : vals) {
        if (!(v > 0.0) || (!allow_above_one && v > 1.0))
            throw ConfigError(name + " values must lie in (0,1]");
    }
}

SliceFinderConfig slice_finder_from_json(const ordered_json& j) {
    SliceFinderConfig cfg;
    cfg.min_support = j.value("min_support", cfg.min_support);
    cfg.filter_alpha = j.value("filter_alpha", cfg.filter_alpha);
    cfg.max_order = j.value("max_order", cfg.max_order);
    cfg.num_bins = j.value("num_bins", cfg.num_bins);
    cfg.max_bin_run = j.value("max_bin_run", cfg.max_bin_run);
    return cfg;
}

ordered_json slice_finder_to_json(const SliceFinderConfig& cfg) {
    ordered_json j;
    j["min_support"] = cfg.min_support;
    j["filter_alpha"] = cfg.filter_alpha;
    j["max_order"] = cfg.max_order;
    j["num_bins"] = cfg.num_bins;
    j["max_bin_run"] = cfg.max_bin_run;
    return j;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read file: " + path);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

void Goal1ExperimentConfig::validate() const {
    if (data_path.empty() || schema_path.empty())
        throw ConfigError("goal1 config needs data and schema paths");
    if (num_splits_total == 0 || num_splits_selected == 0 || num_resamples == 0)
        throw ConfigError("goal1 split/resample counts must be >= 1");
    if (num_splits_selected > num_splits_total)
        throw ConfigError("num_splits_selected exceeds num_splits_total");
    check_probability_list(grid_r, "grid_r", false);
    check_probability_list(grid_c, "grid_c", false);
    check_probability_list(alphas, "alphas", false);
    for (double a : alphas) {
        if (a >= 1.0) throw ConfigError("alpha must be in (0,1)");
    }
    if (settings.empty()) throw ConfigError("settings must not be empty");
    slice_finder.validate();
}

std::string Goal1ExperimentConfig::to_json_string(int indent) const {
    ordered_json j;
    j["data"] = data_path;
    j["schema"] = schema_path;
    j["num_splits_total"] = num_splits_total;
    j["num_splits_selected"] = num_splits_selected;
    j["num_resamples"] = num_resamples;
    j["grid_r"] = grid_r;
    j["grid_c"] = grid_c;
    ordered_json st = ordered_json::array();
    for (auto s : settings) st.push_back(to_string(s));
    j["settings"] = st;
    j["alphas"] = alphas;
    j["master_seed"] = master_seed;
    j["slice_finder"] = slice_finder_to_json(slice_finder);
    j["continuity_corrected"] = continuity_corrected;
    j["force_different"] = force_different;
    j["drop_low_variance"] = drop_low_variance;
    return j.dump(indent);
}

Goal1ExperimentConfig Goal1ExperimentConfig::from_json_string(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("goal1 config parse failure: ") + e.what());
    }
    Goal1ExperimentConfig cfg;
    try {
        cfg.data_path = j.at("data").get<std::string>();
        cfg.schema_path = j.at("schema").get<std::string>();
        cfg.num_splits_total = j.value("num_splits_total", cfg.num_splits_total);
        cfg.num_splits_selected = j.value("num_splits_selected", cfg.num_splits_selected);
        cfg.num_resamples = j.value("num_resamples", cfg.num_resamples);
        if (j.contains("grid_r")) cfg.grid_r = j.at("grid_r").get<std::vector<double>>();
        if (j.contains("grid_c")) cfg.grid_c = j.at("grid_c").get<std::vector<double>>();
        if (j.contains("settings")) {
            cfg.settings.clear();
            for (const auto& s : j.at("settings"))
                cfg.settings.push_back(permutation_setting_from_string(s.get<std::string>()));
        }
        if (j.contains("alphas")) cfg.alphas = j.at("alphas").get<std::vector<double>>();
        cfg.master_seed = j.value("master_seed", cfg.master_seed);
        if (j.contains("slice_finder")) cfg.slice_finder = slice_finder_from_json(j.at("slice_finder"));
        cfg.continuity_corrected = j.value("continuity_corrected", cfg.continuity_corrected);
        cfg.force_different = j.value("force_different", cfg.force_different);
        cfg.drop_low_variance = j.value("drop_low_variance", cfg.drop_low_variance);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("goal1 config structure: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

Goal1ExperimentConfig Goal1ExperimentConfig::load(const std::string& path) {
    return from_json_string(read_file(path));
}

void Goal2ExperimentConfig::validate() const {
    if (data_path.empty() || schema_path.empty())
        throw ConfigError("goal2 config needs data and schema paths");
    if (num_splits == 0) throw ConfigError("num_splits must be >= 1");
    if (multipliers.empty()) throw ConfigError("multipliers must not be empty");
    for (double k : multipliers) {
        if (!(k > 0.0)) throw ConfigError("multipliers must be positive");
    }
    check_probability_list(alphas, "alphas", false);
    for (double a : alphas) {
        if (a >= 1.0) throw ConfigError("alpha must be in (0,1)");
    }
    slice_finder.validate();
}

std::string Goal2ExperimentConfig::to_json_string(int indent) const {
    ordered_json j;
    j["data"] = data_path;
    j["schema"] = schema_path;
    j["num_splits"] = num_splits;
    j["multipliers"] = multipliers;
    j["alphas"] = alphas;
    j["master_seed"] = master_seed;
    j["slice_finder"] = slice_finder_to_json(slice_finder);
    j["continuity_corrected"] = continuity_corrected;
    j["drop_low_variance"] = drop_low_variance;
    return j.dump(indent);
}

Goal2ExperimentConfig Goal2ExperimentConfig::from_json_string(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("goal2 config parse failure: ") + e.what());
    }
    Goal2ExperimentConfig cfg;
    try {
        cfg.data_path = j.at("data").get<std::string>();
        cfg.schema_path = j.at("schema").get<std::string>();
        cfg.num_splits = j.value("num_splits", cfg.num_splits);
        if (j.contains("multipliers"))
            cfg.multipliers = j.at("multipliers").get<std::vector<double>>();
        if (j.contains("alphas")) cfg.alphas = j.at("alphas").get<std::vector<double>>();
        cfg.master_seed = j.value("master_seed", cfg.master_seed);
        if (j.contains("slice_finder")) cfg.slice_finder = slice_finder_from_json(j.at("slice_finder"));
        cfg.continuity_corrected = j.value("continuity_corrected", cfg.continuity_corrected);
        cfg.drop_low_variance = j.value("drop_low_variance", cfg.drop_low_variance);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("goal2 config structure: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

Goal2ExperimentConfig Goal2ExperimentConfig::load(const std::string& path) {
    return from_json_string(read_file(path));
}

namespace {

Dataset load_for_experiment(const std::string& data_path, const std::string& schema_path,
                            std::uint64_t drop_low_var) {
    auto schema = FeatureSchema::load(schema_path);
    Dataset d = load_dataset(data_path, schema);
    if (drop_low_var > 0) d = drop_low_variance(d, drop_low_var);
    return d;
}

struct SplitWork {
    std::uint64_t split_index = 0;
    bool ok = false;
    std::string fail_reason;
    SplitPair pair;
    SliceSet slices;
};

// Split + find slices for each requested split index; failures are recorded
// instead of thrown so the run continues with the remaining splits.
std::vector<SplitWork> prepare_splits(const Dataset& ds, const std::vector<std::uint64_t>& indices,
                                      std::uint64_t master_seed, const SliceFinderConfig& finder) {
    std::vector<SplitWork> work(indices.size());
    parallel_for(indices.size(), [&](std::size_t i) {
        auto& w = work[i];
        w.split_index = indices[i];
        try {
            const std::uint64_t seed =
                rng::derive_seed(master_seed, {seed_tags::kSplit, w.split_index});
            w.pair = stratified_split(ds, seed, w.split_index);
            w.slices = find_weak_slices(w.pair.baseline, finder,
                                        "split-" + std::to_string(w.split_index));
            if (w.slices.rules.empty()) {
                w.fail_reason = "no weak slices found on baseline";
            } else {
                w.ok = true;
            }
        } catch (const Error& e) {
            w.fail_reason = e.what();
        }
    });
    return work;
}

}  // namespace

DetectionGrid run_goal1(const Goal1ExperimentConfig& cfg) {
    cfg.validate();
    return run_goal1(cfg, load_for_experiment(cfg.data_path, cfg.schema_path, cfg.drop_low_variance));
}

DetectionGrid run_goal1(const Goal1ExperimentConfig& cfg, const Dataset& ds) {
    cfg.validate();
    ds.validate();

    // Random subset of the splits, processed in ascending order.
    rng::Engine select_eng(rng::derive_seed(cfg.master_seed, {seed_tags::kSelect}));
    auto chosen =
        rng::sample_without_replacement(cfg.num_splits_total, cfg.num_splits_selected, select_eng);
    std::sort(chosen.begin(), chosen.end());
    std::vector<std::uint64_t> indices(chosen.begin(), chosen.end());

    auto work = prepare_splits(ds, indices, cfg.master_seed, cfg.slice_finder);

    DetectionGrid grid;
    grid.goal = "goal1";
    grid.axes = {"setting", "c", "r", "alpha"};
    for (const auto& w : work) {
        if (!w.ok) grid.skipped.push_back({w.split_index, w.fail_reason});
    }

    // Cell layout: the resample-only baseline first, then settings x c x r,
    // each at every alpha.
    struct CellSpec {
        std::string setting;  // "none" or E-name
        int setting_idx = -1;  // index into cfg.settings; -1 = resample-only
        double c = 0.0, r = 0.0;
    };
    std::vector<CellSpec> specs;
    specs.push_back({"none", -1, 0.0, 0.0});
    for (std::size_t si = 0; si < cfg.settings.size(); ++si) {
        for (double c : cfg.grid_c) {
            for (double r : cfg.grid_r) {
                specs.push_back({to_string(cfg.settings[si]), static_cast<int>(si), c, r});
            }
        }
    }

    std::vector<SplitWork*> good;
    for (auto& w : work) {
        if (w.ok) good.push_back(&w);
    }

    const std::size_t units = good.size() * cfg.num_resamples;
    // detections[unit][spec] in {0,1}; -1 marks a skipped comparison
    std::vector<std::vector<std::vector<signed char>>> detections(
        units, std::vector<std::vector<signed char>>(specs.size(),
                                                     std::vector<signed char>(cfg.alphas.size(), 0)));

    parallel_for(units, [&](std::size_t u) {
        const SplitWork& w = *good[u / cfg.num_resamples];
        const std::uint64_t rep = u % cfg.num_resamples;
        const Dataset resampled = resample_rows(
            w.pair.deployment,
            rng::derive_seed(cfg.master_seed, {seed_tags::kResample, w.split_index, rep}));
        for (std::size_t s = 0; s < specs.size(); ++s) {
            const auto& spec = specs[s];
            try {
                const Dataset* target = &resampled;
                Dataset distorted;
                if (spec.setting_idx >= 0) {
                    auto pcfg = PermutationConfig::from_setting(
                        cfg.settings[static_cast<std::size_t>(spec.setting_idx)], spec.r, spec.c,
                        cfg.force_different,
                        rng::derive_seed(cfg.master_seed,
                                         {seed_tags::kPermute, w.split_index, rep,
                                          static_cast<std::uint64_t>(spec.setting_idx),
                                          rng::tag_bits(spec.r), rng::tag_bits(spec.c)}));
                    distorted = permute_distort(resampled, pcfg);
                    target = &distorted;
                }
                auto core = drift_test_core(w.slices, *target, Goal::distribution_change,
                                            cfg.continuity_corrected);
                for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
                    auto report = apply_holm(core, Goal::distribution_change, cfg.alphas[a],
                                             cfg.continuity_corrected);
                    detections[u][s][a] = report.drift_detected ? 1 : 0;
                }
            } catch (const Error&) {
                for (std::size_t a = 0; a < cfg.alphas.size(); ++a) detections[u][s][a] = -1;
            }
        }
    });

    const std::size_t num_features = ds.schema.features.size();
    for (std::size_t s = 0; s < specs.size(); ++s) {
        const auto& spec = specs[s];
        bool pure_row_perm = false;
        if (spec.setting_idx >= 0) {
            auto pcfg = PermutationConfig::from_setting(
                cfg.settings[static_cast<std::size_t>(spec.setting_idx)], spec.r, spec.c, true, 0);
            pure_row_perm = pcfg.pure_row_permutation(num_features);
        }
        for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
            DetectionCell cell;
            cell.setting = spec.setting;
            cell.c = spec.c;
            cell.r = spec.r;
            cell.alpha = cfg.alphas[a];
            cell.pure_row_permutation = pure_row_perm;
            for (std::size_t u = 0; u < units; ++u) {
                if (detections[u][s][a] < 0) continue;  // skipped comparison
                ++cell.comparisons;
                cell.detected += static_cast<std::uint64_t>(detections[u][s][a]);
            }
            grid.cells.push_back(cell);
        }
    }
    return grid;
}

DetectionGrid run_goal2(const Goal2ExperimentConfig& cfg) {
    cfg.validate();
    return run_goal2(cfg, load_for_experiment(cfg.data_path, cfg.schema_path, cfg.drop_low_variance));
}

DetectionGrid run_goal2(const Goal2ExperimentConfig& cfg, const Dataset& ds) {
    cfg.validate();
    ds.validate();

    std::vector<std::uint64_t> indices(cfg.num_splits);
    for (std::size_t i = 0; i < cfg.num_splits; ++i) indices[i] = i;
    auto work = prepare_splits(ds, indices, cfg.master_seed, cfg.slice_finder);

    DetectionGrid grid;
    grid.goal = "goal2";
    grid.axes = {"k", "alpha"};
    for (const auto& w : work) {
        if (!w.ok) grid.skipped.push_back({w.split_index, w.fail_reason});
    }

    std::vector<SplitWork*> good;
    for (auto& w : work) {
        if (w.ok) good.push_back(&w);
    }

    std::vector<std::vector<std::vector<signed char>>> detections(
        good.size(),
        std::vector<std::vector<signed char>>(cfg.multipliers.size(),
                                              std::vector<signed char>(cfg.alphas.size(), 0)));

    parallel_for(good.size(), [&](std::size_t u) {
        const SplitWork& w = *good[u];
        for (std::size_t ki = 0; ki < cfg.multipliers.size(); ++ki) {
            try {
                RebalanceConfig rcfg;
                rcfg.k = cfg.multipliers[ki];
                rcfg.seed = rng::derive_seed(
                    cfg.master_seed,
                    {seed_tags::kRebalance, w.split_index, rng::tag_bits(cfg.multipliers[ki])});
                const Dataset rebalanced = rebalance_mcr(w.pair.deployment, rcfg);
                auto core = drift_test_core(w.slices, rebalanced, Goal::mcr_degradation,
                                            cfg.continuity_corrected);
                for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
                    auto report = apply_holm(core, Goal::mcr_degradation, cfg.alphas[a],
                                             cfg.continuity_corrected);
                    detections[u][ki][a] = report.drift_detected ? 1 : 0;
                }
            } catch (const Error&) {
                for (std::size_t a = 0; a < cfg.alphas.size(); ++a) detections[u][ki][a] = -1;
            }
        }
    });

    for (std::size_t ki = 0; ki < cfg.multipliers.size(); ++ki) {
        for (std::size_t a = 0; a < cfg.alphas.size(); ++a) {
            DetectionCell cell;
            cell.k = cfg.multipliers[ki];
            cell.alpha = cfg.alphas[a];
            for (std::size_t u = 0; u < good.size(); ++u) {
                if (detections[u][ki][a] < 0) continue;
                ++cell.comparisons;
                cell.detected += static_cast<std::uint64_t>(detections[u][ki][a]);
            }
            grid.cells.push_back(cell);
        }
    }
    return grid;
}

// --- reports ---

namespace {

ordered_json cell_to_json(const DetectionGrid& grid, const DetectionCell& c) {
    ordered_json j;
    if (grid.goal == "goal1") {
        j["setting"] = c.setting;
        j["c"] = c.c;
        j["r"] = c.r;
    } else {
        j["k"] = c.k;
    }
    j["alpha"] = c.alpha;
    j["detected"] = c.detected;
    j["comparisons"] = c.comparisons;
    j["fraction"] = c.fraction();
    if (grid.goal == "goal1") j["pure_row_permutation"] = c.pure_row_permutation;
    return j;
}

}  // namespace

std::string render_report(const DetectionGrid& grid, ReportFormat format) {
    if (format == ReportFormat::json) {
        ordered_json j;
        j["format"] = "detectiongrid/v1";
        j["goal"] = grid.goal;
        j["axes"] = grid.axes;
        j["cells"] = ordered_json::array();
        for (const auto& c : grid.cells) j["cells"].push_back(cell_to_json(grid, c));
        j["skipped_splits"] = ordered_json::array();
        for (const auto& s : grid.skipped) {
            j["skipped_splits"].push_back({{"split", s.split_index}, {"reason", s.reason}});
        }
        return j.dump(2);
    }

    std::string out;
    if (grid.goal == "goal1") {
        out = "setting,c,r,alpha,detected,comparisons,fraction,pure_row_permutation\n";
        for (const auto& c : grid.cells) {
            out += c.setting + "," + format_double(c.c) + "," + format_double(c.r) + "," +
                   format_double(c.alpha) + "," + std::to_string(c.detected) + "," +
                   std::to_string(c.comparisons) + "," + format_double(c.fraction()) + "," +
                   (c.pure_row_permutation ? "true" : "false") + "\n";
        }
    } else {
        out = "k,alpha,detected,comparisons,fraction\n";
        for (const auto& c : grid.cells) {
            out += format_double(c.k) + "," + format_double(c.alpha) + "," +
                   std::to_string(c.detected) + "," + std::to_string(c.comparisons) + "," +
                   format_double(c.fraction()) + "\n";
        }
    }
    return out;
}

void emit_report(const DetectionGrid& grid, ReportFormat format, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write report: " + path);
    out << render_report(grid, format);
    if (!out) throw IoError("write failed: " + path);
}

DetectionGrid parse_report_json(const std::string& text) {
    ordered_json j;
    try {
        j = ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("report JSON parse failure: ") + e.what());
    }
    DetectionGrid grid;
    try {
        grid.goal = j.at("goal").get<std::string>();
        grid.axes = j.at("axes").get<std::vector<std::string>>();
        for (const auto& c : j.at("cells")) {
            DetectionCell cell;
            if (grid.goal == "goal1") {
                cell.setting = c.at("setting").get<std::string>();
                cell.c = c.at("c").get<double>();
                cell.r = c.at("r").get<double>();
                cell.pure_row_permutation = c.value("pure_row_permutation", false);
            } else {
                cell.k = c.at("k").get<double>();
            }
            cell.alpha = c.at("alpha").get<double>();
            cell.detected = c.at("detected").get<std::uint64_t>();
            cell.comparisons = c.at("comparisons").get<std::uint64_t>();
            grid.cells.push_back(cell);
        }
        if (j.contains("skipped_splits")) {
            for (const auto& s : j.at("skipped_splits")) {
                grid.skipped.push_back(
                    {s.at("split").get<std::uint64_t>(), s.at("reason").get<std::string>()});
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw IoError(std::string("report JSON structure: ") + e.what());
    }
    return grid;
}

DetectionGrid parse_report_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("report CSV is empty");
    // tolerate a trailing \r from CRLF files
    if (!line.empty() && line.back() == '\r') line.pop_back();

    const std::string goal1_header = "setting,c,r,alpha,detected,comparisons,fraction,pure_row_permutation";
    const std::string goal2_header = "k,alpha,detected,comparisons,fraction";
    DetectionGrid grid;
    if (line == goal1_header) {
        grid.goal = "goal1";
        grid.axes = {"setting", "c", "r", "alpha"};
    } else if (line == goal2_header) {
        grid.goal = "goal2";
        grid.axes = {"k", "alpha"};
    } else {
        throw IoError("report CSV: unrecognized header: " + line);
    }

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        while (true) {
            std::size_t pos = line.find(',', start);
            fields.push_back(line.substr(start, pos == std::string::npos ? pos : pos - start));
            if (pos == std::string::npos) break;
            start = pos + 1;
        }
        DetectionCell cell;
        if (grid.goal == "goal1") {
            if (fields.size() != 8) throw IoError("report CSV: wrong field count: " + line);
            cell.setting = fields[0];
            cell.c = parse_double_or_throw(fields[1], "c");
            cell.r = parse_double_or_throw(fields[2], "r");
            cell.alpha = parse_double_or_throw(fields[3], "alpha");
            cell.detected = static_cast<std::uint64_t>(std::stoull(fields[4]));
            cell.comparisons = static_cast<std::uint64_t>(std::stoull(fields[5]));
            cell.pure_row_permutation = fields[7] == "true";
        } else {
            if (fields.size() != 5) throw IoError("report CSV: wrong field count: " + line);
            cell.k = parse_double_or_throw(fields[0], "k");
            cell.alpha = parse_double_or_throw(fields[1], "alpha");
            cell.detected = static_cast<std::uint64_t>(std::stoull(fields[2]));
            cell.comparisons = static_cast<std::uint64_t>(std::stoull(fields[3]));
        }
        grid.cells.push_back(cell);
    }
    return grid;
}

}  // namespace slicedrift
