#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slicedrift/dataset.hpp"
#include "slicedrift/distortion.hpp"
#include "slicedrift/slice.hpp"

namespace slicedrift {

/// Permutation-grid experiment: split, find slices per baseline, resample
/// each deployment half, distort over the (setting, r, c) grid, detect at
/// each alpha.
struct Goal1ExperimentConfig {
    std::string data_path;
    std::string schema_path;
    std::size_t num_splits_total = 50;
    std::size_t num_splits_selected = 5;
    std::size_t num_resamples = 5;
    std::vector<double> grid_r = {0.1, 0.25, 0.5, 0.75, 1.0};
    std::vector<double> grid_c = {0.1, 0.25, 0.5, 0.75, 1.0};
    std::vector<PermutationSetting> settings = {PermutationSetting::E1, PermutationSetting::E2,
                                                PermutationSetting::E3};
    std::vector<double> alphas = {0.01, 0.05, 0.10};
    std::uint64_t master_seed = 0;
    SliceFinderConfig slice_finder{};
    bool continuity_corrected = true;
    bool force_different = true;
    std::uint64_t drop_low_variance = 0;  // 0 = keep all features

    void validate() const;
    std::string to_json_string(int indent = 2) const;
    static Goal1ExperimentConfig from_json_string(const std::string& text);
    static Goal1ExperimentConfig load(const std::string& path);
};

/// Rebalancing sweep: one rebalanced deployment set per (split, multiplier),
/// detected one-sided at each alpha.
struct Goal2ExperimentConfig {
    std::string data_path;
    std::string schema_path;
    std::size_t num_splits = 50;
    std::vector<double> multipliers = {1.0, 1.25, 1.5, 1.75, 2.0, 3.0, 5.0, 7.5, 10.0};
    std::vector<double> alphas = {0.01, 0.05, 0.10};
    std::uint64_t master_seed = 0;
    SliceFinderConfig slice_finder{};
    bool continuity_corrected = true;
    std::uint64_t drop_low_variance = 0;

    void validate() const;
    std::string to_json_string(int indent = 2) const;
    static Goal2ExperimentConfig from_json_string(const std::string& text);
    static Goal2ExperimentConfig load(const std::string& path);
};

/// One cell of the detection grid. Goal 1 cells carry (setting, c, r, alpha)
/// with setting "none" marking the resample-only baseline; Goal 2 cells
/// carry (k, alpha).
struct DetectionCell {
    std::string setting;  // "E1" | "E2" | "E3" | "none"; empty for goal2
    double c = 0.0;
    double r = 0.0;
    double k = 0.0;
    double alpha = 0.0;
    std::uint64_t detected = 0;
    std::uint64_t comparisons = 0;
    bool pure_row_permutation = false;

    double fraction() const {
        return comparisons == 0 ? 0.0 : static_cast<double>(detected) / static_cast<double>(comparisons);
    }
};

struct SkippedSplit {
    std::uint64_t split_index = 0;
    std::string reason;
};

struct DetectionGrid {
    std::string goal;               // "goal1" | "goal2"
    std::vector<std::string> axes;  // {"setting","c","r","alpha"} or {"k","alpha"}
    std::vector<DetectionCell> cells;
    std::vector<SkippedSplit> skipped;
};

DetectionGrid run_goal1(const Goal1ExperimentConfig& cfg);
DetectionGrid run_goal1(const Goal1ExperimentConfig& cfg, const Dataset& ds);
DetectionGrid run_goal2(const Goal2ExperimentConfig& cfg);
DetectionGrid run_goal2(const Goal2ExperimentConfig& cfg, const Dataset& ds);

enum class ReportFormat { json, csv };

/// Long-format report: one row per cell with all axis labels, numerator,
/// denominator, and fraction, in stable column order.
std::string render_report(const DetectionGrid& grid, ReportFormat format);
void emit_report(const DetectionGrid& grid, ReportFormat format, const std::string& path);
DetectionGrid parse_report_json(const std::string& text);
DetectionGrid parse_report_csv(const std::string& text);

/// Seed-derivation tags used by the harness (documented so runs can be
/// reproduced piecewise): child = derive_seed(master, {tag, indices...}).
namespace seed_tags {
inline constexpr std::uint64_t kSplit = 1;
inline constexpr std::uint64_t kSelect = 2;
inline constexpr std::uint64_t kResample = 3;
inline constexpr std::uint64_t kPermute = 4;
inline constexpr std::uint64_t kRebalance = 5;
}  // namespace seed_tags

}  // namespace slicedrift
