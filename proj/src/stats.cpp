#include "slicedrift/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "slicedrift/error.hpp"

namespace slicedrift::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double two_proportion_test(const ProportionTestInput& inp) {
    if (inp.N1 == 0 || inp.N2 == 0) throw DomainError("two_proportion_test: N1 and N2 must be >= 1");
    if (inp.n1 > inp.N1 || inp.n2 > inp.N2)
        throw DomainError("two_proportion_test: counts exceed totals");

    const double N1 = static_cast<double>(inp.N1);
    const double N2 = static_cast<double>(inp.N2);
    const double p1 = static_cast<double>(inp.n1) / N1;
    const double p2 = static_cast<double>(inp.n2) / N2;
    const double pooled =
        static_cast<double>(inp.n1 + inp.n2) / static_cast<double>(inp.N1 + inp.N2);

    if (pooled <= 0.0 || pooled >= 1.0) {
        // Zero pooled variance: both proportions are forced equal here, but
        // keep the convention total.
        return p1 == p2 ? 1.0 : 0.0;
    }

    const double se = std::sqrt(pooled * (1.0 - pooled) * (1.0 / N1 + 1.0 / N2));
    double num = p2 - p1;
    if (inp.continuity_corrected) {
        const double cc = 0.5 * (1.0 / N1 + 1.0 / N2);
        if (inp.alternative == Alternative::two_sided) {
            num = std::copysign(std::max(0.0, std::fabs(num) - cc), num);
        } else {
            num = num > 0.0 ? std::max(0.0, num - cc) : num - cc;
        }
    }
    const double z = num / se;
    if (inp.alternative == Alternative::two_sided) {
        return std::min(1.0, 2.0 * normal_cdf(-std::fabs(z)));
    }
    return normal_cdf(-z);
}

HolmResult holm_bonferroni(const std::vector<double>& p_values, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("holm_bonferroni: alpha must be in (0,1)");
    for (double p : p_values) {
        if (!(p >= 0.0 && p <= 1.0)) throw DomainError("holm_bonferroni: p-value outside [0,1]");
    }

    HolmResult res;
    res.alpha = alpha;
    const std::size_t K = p_values.size();
    if (K == 0) return res;

    std::vector<std::size_t> order(K);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });

    res.rejected.assign(K, false);
    res.adjusted_thresholds.resize(K);
    bool failed = false;
    for (std::size_t r = 0; r < K; ++r) {
        const double threshold = alpha / static_cast<double>(K - r);
        res.adjusted_thresholds[r] = threshold;
        if (!failed && p_values[order[r]] <= threshold) {
            res.rejected[order[r]] = true;
            ++res.num_rejected;
        } else {
            failed = true;
        }
    }
    return res;
}

double cohens_h(double p1, double p2) {
    if (!(p1 >= 0.0 && p1 <= 1.0 && p2 >= 0.0 && p2 <= 1.0))
        throw DomainError("cohens_h: proportions must lie in [0,1]");
    return std::asin(std::sqrt(p2)) - std::asin(std::sqrt(p1));
}

namespace {

double lchoose(std::uint64_t n, std::uint64_t k) {
    return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
           std::lgamma(static_cast<double>(n - k) + 1.0);
}

}  // namespace

double hypergeom_sf(std::uint64_t N, std::uint64_t M, std::uint64_t n, std::uint64_t m) {
    if (M > N || n > N || m > n)
        throw DomainError("hypergeom_sf: need 0 <= m <= n <= N and 0 <= M <= N");
    if (m == 0) return 1.0;
    const std::uint64_t hi = std::min(n, M);
    if (m > hi) return 0.0;
    // X >= max(0, n+M-N) always, so start the sum there.
    const std::uint64_t lo = std::max(m, n + M > N ? n + M - N : 0);
    const double log_denom = lchoose(N, n);
    double sum = 0.0;
    double prev = 0.0;
    for (std::uint64_t k = lo; k <= hi; ++k) {
        const double term = std::exp(lchoose(M, k) + lchoose(N - M, n - k) - log_denom);
        sum += term;
        // Past the mode the terms decay geometrically; the remaining tail is
        // negligible once a decreasing term drops this far below the sum.
        if (k > lo && term < prev && term < sum * 1e-18) break;
        prev = term;
    }
    return std::min(1.0, sum);
}

}  // namespace slicedrift::stats
