#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "slicedrift/dataset.hpp"
#include "slicedrift/drift.hpp"
#include "slicedrift/error.hpp"
#include "slicedrift/experiment.hpp"
#include "slicedrift/slice.hpp"

using namespace slicedrift;

namespace {

Dataset load_with_options(const std::string& data, const std::string& schema,
                          std::uint64_t drop_low_var) {
    auto s = FeatureSchema::load(schema);
    Dataset d = load_dataset(data, s);
    if (drop_low_var > 0) d = drop_low_variance(d, drop_low_var);
    return d;
}

// <out>.csv -> <out>.schema.json; anything else gets .schema.json appended
std::string default_sidecar(const std::string& csv_path) {
    if (csv_path.size() > 4 && csv_path.ends_with(".csv")) {
        return csv_path.substr(0, csv_path.size() - 4) + ".schema.json";
    }
    return csv_path + ".schema.json";
}

int run_slice(const std::string& data, const std::string& schema, const std::string& out,
              const SliceFinderConfig& finder, std::uint64_t drop_low_var,
              const std::string& source, bool print_summary) {
    Dataset d = load_with_options(data, schema, drop_low_var);
    auto slices = find_weak_slices(d, finder, source.empty() ? data : source);
    slices.save(out);
    std::cout << "SLICES found=" << slices.rules.size() << " N=" << slices.N << " M=" << slices.M
              << " out=" << out << "\n";
    if (print_summary) {
        auto sum = slice_summary(slices, d);
        std::printf("num_slices            %zu\n", sum.num_slices);
        std::printf("pct_1feat             %.2f\n", sum.pct_1feat);
        std::printf("pct_2feat             %.2f\n", sum.pct_2feat);
        std::printf("pct_error_coverage    %.2f\n", sum.pct_error_coverage);
        std::printf("pct_features_any      %.2f\n", sum.pct_features_in_any_slice);
        std::printf("pct_features_1feat    %.2f\n", sum.pct_features_in_1feat_slice);
        std::printf("pct_features_2feat    %.2f\n", sum.pct_features_in_2feat_slice);
    }
    return 0;
}

int run_detect(const std::string& slices_path, const std::string& data, const std::string& schema,
               const std::string& goal_name, double alpha, bool no_continuity,
               const std::string& out) {
    auto slices = SliceSet::load(slices_path);
    auto schema_obj = FeatureSchema::load(schema);
    Dataset d2 = load_dataset(data, schema_obj);
    auto report = detect_drift(slices, d2, goal_from_string(goal_name), alpha, !no_continuity);
    if (!out.empty()) report.save(out);
    std::cout << report.summary_line() << "\n";
    return report.drift_detected ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weak-slice drift detection over tabular datasets"};
    app.require_subcommand(1);

    // --- slice ---
    auto* slice_cmd = app.add_subcommand("slice", "Find weak slices and save them as JSON");
    std::string sl_data, sl_schema, sl_out = "slices.json", sl_source;
    SliceFinderConfig finder;
    std::uint64_t sl_drop = 0;
    bool sl_summary = false;
    slice_cmd->add_option("--data", sl_data, "dataset CSV")->required();
    slice_cmd->add_option("--schema", sl_schema, "schema sidecar JSON")->required();
    slice_cmd->add_option("--out", sl_out, "output slice-set path");
    slice_cmd->add_option("--source", sl_source, "source label stored in the slice set");
    slice_cmd->add_option("--min-support", finder.min_support,
                          "minimum slice support (0 = max(20, 0.5% of N))");
    slice_cmd->add_option("--filter-alpha", finder.filter_alpha,
                          "hypergeometric filter threshold");
    slice_cmd->add_option("--max-order", finder.max_order, "maximum constraints per rule");
    slice_cmd->add_option("--drop-low-variance", sl_drop,
                          "drop features whose minority count is below this");
    slice_cmd->add_flag("--summary", sl_summary, "print slice summary statistics");

    // --- detect ---
    auto* detect_cmd =
        app.add_subcommand("detect", "Map a slice set onto a dataset and test for drift");
    std::string dt_slices, dt_data, dt_schema, dt_goal = "distribution_change", dt_out;
    double dt_alpha = 0.05;
    bool dt_no_cc = false;
    detect_cmd->add_option("--slices", dt_slices, "slice-set JSON from `slice`")->required();
    detect_cmd->add_option("--data", dt_data, "deployment dataset CSV")->required();
    detect_cmd->add_option("--schema", dt_schema, "schema sidecar JSON")->required();
    detect_cmd->add_option("--goal", dt_goal, "distribution_change | mcr_degradation");
    detect_cmd->add_option("--alpha", dt_alpha, "family-wise significance level");
    detect_cmd->add_flag("--no-continuity", dt_no_cc, "disable the continuity correction");
    detect_cmd->add_option("--out", dt_out, "write the full report JSON here");

    // --- distort permute / rebalance ---
    auto* distort_cmd = app.add_subcommand("distort", "Write a distorted copy of a dataset");
    distort_cmd->require_subcommand(1);
    auto* permute_cmd = distort_cmd->add_subcommand("permute", "Permutation distortion");
    std::string pm_data, pm_schema, pm_out, pm_out_schema, pm_setting = "E1";
    double pm_r = 0.5, pm_c = 0.5;
    std::uint64_t pm_seed = 0;
    bool pm_no_force = false;
    permute_cmd->add_option("--data", pm_data, "dataset CSV")->required();
    permute_cmd->add_option("--schema", pm_schema, "schema sidecar JSON")->required();
    permute_cmd->add_option("--out", pm_out, "output CSV")->required();
    permute_cmd->add_option("--out-schema", pm_out_schema,
                            "output sidecar (default: derived from --out)");
    permute_cmd->add_option("--setting", pm_setting, "E1 | E2 | E3");
    permute_cmd->add_option("--r", pm_r, "row proportion in (0,1]");
    permute_cmd->add_option("--c", pm_c, "column proportion in (0,1]");
    permute_cmd->add_option("--seed", pm_seed, "permutation seed");
    permute_cmd->add_flag("--no-force-different", pm_no_force,
                          "allow permutations that change nothing");

    auto* rebalance_cmd = distort_cmd->add_subcommand("rebalance", "Odds-ratio rebalancing");
    std::string rb_data, rb_schema, rb_out, rb_out_schema;
    double rb_k = 1.0;
    std::uint64_t rb_seed = 0;
    rebalance_cmd->add_option("--data", rb_data, "dataset CSV")->required();
    rebalance_cmd->add_option("--schema", rb_schema, "schema sidecar JSON")->required();
    rebalance_cmd->add_option("--out", rb_out, "output CSV")->required();
    rebalance_cmd->add_option("--out-schema", rb_out_schema,
                              "output sidecar (default: derived from --out)");
    rebalance_cmd->add_option("--k", rb_k, "odds multiplier (> 0)")->required();
    rebalance_cmd->add_option("--seed", rb_seed, "resampling seed");

    // --- experiment goal1 / goal2 ---
    auto* exp_cmd = app.add_subcommand("experiment", "Run a seeded experiment from a config file");
    exp_cmd->require_subcommand(1);
    std::string ex_config, ex_out = "report.json", ex_format = "json";
    std::optional<std::uint64_t> ex_seed;
    auto add_exp_opts = [&](CLI::App* cmd) {
        cmd->add_option("--config", ex_config, "experiment config JSON")->required();
        cmd->add_option("--out", ex_out, "report output path");
        cmd->add_option("--format", ex_format, "json | csv");
        cmd->add_option("--seed", ex_seed, "override the config's master_seed");
    };
    auto* goal1_cmd = exp_cmd->add_subcommand("goal1", "Permutation grid experiment");
    add_exp_opts(goal1_cmd);
    auto* goal2_cmd = exp_cmd->add_subcommand("goal2", "Rebalancing sweep experiment");
    add_exp_opts(goal2_cmd);

    CLI11_PARSE(app, argc, argv);

    try {
        if (*slice_cmd) {
            return run_slice(sl_data, sl_schema, sl_out, finder, sl_drop, sl_source, sl_summary);
        }
        if (*detect_cmd) {
            return run_detect(dt_slices, dt_data, dt_schema, dt_goal, dt_alpha, dt_no_cc, dt_out);
        }
        if (*permute_cmd) {
            Dataset d = load_with_options(pm_data, pm_schema, 0);
            auto cfg = PermutationConfig::from_setting(permutation_setting_from_string(pm_setting),
                                                       pm_r, pm_c, !pm_no_force, pm_seed);
            if (cfg.pure_row_permutation(d.schema.features.size())) {
                std::cerr << "warning: E2 over every column is a pure row permutation; "
                             "slice mappings cannot see it\n";
            }
            auto out = permute_distort(d, cfg);
            save_dataset(out, pm_out,
                         pm_out_schema.empty() ? default_sidecar(pm_out) : pm_out_schema);
            std::cout << "PERMUTED setting=" << pm_setting << " r=" << pm_r << " c=" << pm_c
                      << " out=" << pm_out << "\n";
            return 0;
        }
        if (*rebalance_cmd) {
            Dataset d = load_with_options(rb_data, rb_schema, 0);
            if (d.misclassified_count() == 0) {
                std::cerr << "warning: no misclassified rows; k cannot amplify anything\n";
            }
            RebalanceConfig cfg;
            cfg.k = rb_k;
            cfg.seed = rb_seed;
            auto out = rebalance_mcr(d, cfg);
            save_dataset(out, rb_out,
                         rb_out_schema.empty() ? default_sidecar(rb_out) : rb_out_schema);
            std::cout << "REBALANCED k=" << rb_k << " M=" << out.misclassified_count()
                      << " N=" << out.num_rows() << " out=" << rb_out << "\n";
            return 0;
        }
        if (*goal1_cmd || *goal2_cmd) {
            const auto format = ex_format == "csv" ? ReportFormat::csv : ReportFormat::json;
            if (ex_format != "csv" && ex_format != "json")
                throw ConfigError("unknown report format: " + ex_format);
            DetectionGrid grid;
            if (*goal1_cmd) {
                auto cfg = Goal1ExperimentConfig::load(ex_config);
                if (ex_seed) cfg.master_seed = *ex_seed;
                grid = run_goal1(cfg);
            } else {
                auto cfg = Goal2ExperimentConfig::load(ex_config);
                if (ex_seed) cfg.master_seed = *ex_seed;
                grid = run_goal2(cfg);
            }
            emit_report(grid, format, ex_out);
            std::uint64_t detected = 0, comparisons = 0;
            for (const auto& cell : grid.cells) {
                detected += cell.detected;
                comparisons += cell.comparisons;
            }
            std::cout << "EXPERIMENT goal=" << grid.goal << " cells=" << grid.cells.size()
                      << " detected=" << detected << "/" << comparisons << " skipped_splits="
                      << grid.skipped.size() << " out=" << ex_out << "\n";
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
