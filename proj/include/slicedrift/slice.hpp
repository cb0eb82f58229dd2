#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "slicedrift/dataset.hpp"

namespace slicedrift {

/// One per-feature constraint: a closed interval on a numeric feature or a
/// value set on a categorical one. Missing values never match.
struct FeatureConstraint {
    std::string feature;
    FeatureKind kind = FeatureKind::numeric;

    // kind == numeric: lo <= x <= hi (either bound may be infinite)
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();

    // kind == categorical: sorted unique codes
    std::vector<std::int32_t> values;

    bool matches_numeric(double v) const;
    bool matches_code(std::int32_t code) const;
};

/// Conjunction of constraints on distinct features.
struct SliceRule {
    std::vector<FeatureConstraint> constraints;  // sorted by feature name
    std::string id;

    /// Canonical text form, e.g. "age:[5,18]&region:{1,3}". Constraints are
    /// sorted by feature name first; the id doubles as the dedup tiebreaker
    /// and the stable output ordering key.
    static std::string canonical_id(const std::vector<FeatureConstraint>& constraints);
    static SliceRule make(std::vector<FeatureConstraint> constraints);

    void validate(int max_order = std::numeric_limits<int>::max()) const;
};

/// A rule's footprint on a dataset: support n, misclassified count m (only
/// when theta was consulted), and relative size n/N.
struct MappedSlice {
    std::string rule_id;
    std::uint64_t n = 0;
    std::optional<std::uint64_t> m;
    double pi_hat = 0.0;
};

struct BaselineSlice {
    SliceRule rule;
    std::uint64_t n = 0;  // support on the source dataset
    std::uint64_t m = 0;  // misclassified rows under the rule on the source
};

/// Weak-slice rules found on a baseline dataset, with the baseline counts
/// needed for deployment-time detection (no baseline data required later).
struct SliceSet {
    std::string source;
    std::uint64_t N = 0;
    std::uint64_t M = 0;
    std::vector<BaselineSlice> rules;  // sorted by rule id

    std::string to_json_string(int indent = 2) const;
    static SliceSet from_json_string(const std::string& text);
    void save(const std::string& path) const;
    static SliceSet load(const std::string& path);
};

struct SliceFinderConfig {
    std::uint64_t min_support = 0;  // 0 -> max(20, ceil(0.005 * N))
    double filter_alpha = 0.05;     // hypergeometric upper-tail threshold
    int max_order = 2;              // constraints per rule
    int num_bins = 10;              // quantile bins per numeric feature
    int max_bin_run = 4;            // longest merged run of adjacent bins

    std::uint64_t resolve_min_support(std::uint64_t N) const;
    void validate() const;
};

struct SliceSummary {
    std::size_t num_slices = 0;
    double pct_1feat = 0.0;
    double pct_2feat = 0.0;
    double pct_error_coverage = 0.0;          // misclassified rows in >=1 slice
    double pct_features_in_any_slice = 0.0;
    double pct_features_in_1feat_slice = 0.0;
    double pct_features_in_2feat_slice = 0.0;
};

/// Count rows of d satisfying every constraint. m is filled only when
/// use_theta is set; with use_theta=false the indicator column is never read.
MappedSlice map_slice(const SliceRule& rule, const Dataset& d, bool use_theta);

/// Batch mapping, parallel over rules; output is index-aligned with input.
std::vector<MappedSlice> map_slices(const std::vector<SliceRule>& rules, const Dataset& d,
                                    bool use_theta);

namespace ref {
/// Serial reference implementations (plain per-row predicate loop, no
/// bitmaps). Kept for equivalence tests and the kernel benchmark.
MappedSlice map_slice(const SliceRule& rule, const Dataset& d, bool use_theta);
std::vector<MappedSlice> map_slices(const std::vector<SliceRule>& rules, const Dataset& d,
                                    bool use_theta);
}  // namespace ref

/// Baseline slice finder over 1- and 2-way (up to max_order) feature
/// combinations. Numeric candidates are merged runs of adjacent quantile
/// bins; categorical candidates are single values plus the union of
/// above-average-error values; higher orders are cross-products of
/// survivors. A candidate survives when support >= min_support, its error
/// rate exceeds the dataset's (m/n > M/N), and the hypergeometric upper tail
/// P(X >= m) is below filter_alpha. Rules with identical matched row sets
/// are deduplicated to the lexicographically smallest id. Output is sorted
/// by rule id and invariant under row permutation of d.
SliceSet find_weak_slices(const Dataset& d, const SliceFinderConfig& config,
                          const std::string& source_name = "");

/// Table of slice-set statistics over a dataset: slice-order percentages,
/// error coverage, and feature participation.
SliceSummary slice_summary(const SliceSet& s, const Dataset& d);

}  // namespace slicedrift
