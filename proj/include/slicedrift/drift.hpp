#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "slicedrift/slice.hpp"

namespace slicedrift {

/// Goal 1: two-sided detection of distribution change in weak regions.
/// Goal 2: one-sided inference of MCR degradation from slice growth.
enum class Goal { distribution_change, mcr_degradation };

std::string to_string(Goal g);
Goal goal_from_string(const std::string& s);

struct SliceTestResult {
    std::string rule_id;
    std::uint64_t n1 = 0, N1 = 0;  // baseline slice support / baseline size
    std::uint64_t n2 = 0, N2 = 0;  // deployment slice support / deployment size
    double pi_hat1 = 0.0, pi_hat2 = 0.0;
    double p_value = 1.0;
    double cohens_h = 0.0;
    bool holm_rejected = false;
};

struct DriftReport {
    Goal goal = Goal::distribution_change;
    double alpha = 0.0;
    bool continuity_corrected = true;
    std::vector<SliceTestResult> per_slice;  // one entry per rule, in rule-id order
    bool drift_detected = false;             // true iff num_rejected >= 1
    std::size_t num_rejected = 0;

    std::string to_json_string(int indent = 2) const;
    void save(const std::string& path) const;

    /// "DRIFT goal=<g> alpha=<a> rejected=<r>/<K>"
    std::string summary_line() const;
};

/// Per-slice mapping, p-values, and effect sizes without a decision level.
/// Lets callers evaluate several alpha levels without re-mapping.
struct DriftTestCore {
    std::vector<SliceTestResult> per_slice;
};

/// Map every rule onto d2 label-free (d2's indicator column is never read),
/// then test each slice's relative size against its baseline size with the
/// pooled two-proportion test (two-sided for Goal 1, greater for Goal 2).
DriftTestCore drift_test_core(const SliceSet& s, const Dataset& d2, Goal goal, bool continuity);

/// Holm-Bonferroni pooling of a core result at level alpha.
DriftReport apply_holm(const DriftTestCore& core, Goal goal, double alpha, bool continuity);

/// drift_test_core + apply_holm. Drift is declared when any slice hypothesis
/// is rejected; the family-wise false-positive rate is bounded by alpha.
DriftReport detect_drift(const SliceSet& s, const Dataset& d2, Goal goal, double alpha,
                         bool continuity = true);

}  // namespace slicedrift
