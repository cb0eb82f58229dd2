#pragma once

#include <cstdint>
#include <vector>

namespace slicedrift::stats {

enum class Alternative {
    two_sided,  // H_A: p2 - p1 != 0
    greater,    // H_A: p2 - p1 > 0
};

/// Input to the pooled two-proportion normal test. n1/N1 and n2/N2 are the
/// two observed proportions.
struct ProportionTestInput {
    std::uint64_t n1 = 0;
    std::uint64_t N1 = 0;
    std::uint64_t n2 = 0;
    std::uint64_t N2 = 0;
    Alternative alternative = Alternative::two_sided;
    bool continuity_corrected = false;
};

/// Standard normal CDF, computed as 0.5 * erfc(-x / sqrt(2)). Absolute error
/// is bounded by that of libm's erfc (well below 1e-12).
double normal_cdf(double x);

/// Pooled-variance normal test for a difference in proportions.
///
/// z = (p2 - p1 -+ cc) / sqrt(p(1-p)(1/N1 + 1/N2)) with p the pooled
/// proportion and cc = (1/N1 + 1/N2)/2 when continuity correction is on.
/// Two-sided: the numerator magnitude shrinks by cc (floored at 0) and
/// p = 2*Phi(-|z|). Greater: the numerator shifts down by cc, floored at 0
/// when it started positive so it never crosses zero, and p = Phi(-z).
/// Either way the corrected p-value is >= the uncorrected one.
///
/// Degenerate case: pooled proportion 0 or 1 has zero variance; returns 1.0
/// when the two proportions are equal, else 0.0.
double two_proportion_test(const ProportionTestInput& inp);

struct HolmResult {
    double alpha = 0.0;
    std::vector<bool> rejected;               // original input order
    std::vector<double> adjusted_thresholds;  // alpha/(K-r+1) per ascending-p rank r
    std::size_t num_rejected = 0;
};

/// Holm-Bonferroni step-down procedure at level alpha. Sorts p-values
/// ascending (ties broken by original index), rejects while
/// p_(r) <= alpha/(K-r+1), and stops at the first failure. Controls the
/// family-wise error rate at alpha.
HolmResult holm_bonferroni(const std::vector<double>& p_values, double alpha);

/// Cohen's effect size for two proportions: arcsin(sqrt(p2)) - arcsin(sqrt(p1)).
double cohens_h(double p1, double p2);

/// Exact hypergeometric upper tail P(X >= m) for X ~ Hypergeometric(N, M, n):
/// m or more marked items among n draws without replacement from a population
/// of N containing M marked. Summed in log space via lgamma.
double hypergeom_sf(std::uint64_t N, std::uint64_t M, std::uint64_t n, std::uint64_t m);

}  // namespace slicedrift::stats
