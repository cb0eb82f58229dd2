#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "slicedrift/distortion.hpp"
#include "slicedrift/error.hpp"
#include "slicedrift/rng.hpp"
#include "support/synthetic.hpp"

using namespace slicedrift;

namespace {

// the worked six-row example: three features, values distinct per column
Dataset fig_dataset() {
    Dataset d;
    d.schema.indicator_column = "mis";
    d.schema.features = {{"X", FeatureKind::numeric},
                         {"Y", FeatureKind::numeric},
                         {"Z", FeatureKind::numeric}};
    d.columns.resize(3);
    for (auto& c : d.columns) c.kind = FeatureKind::numeric;
    d.columns[0].numeric = {10, 11, 12, 13, 14, 15};
    d.columns[1].numeric = {20, 21, 22, 23, 24, 25};
    d.columns[2].numeric = {30, 31, 32, 33, 34, 35};
    d.theta = {0, 1, 0, 1, 0, 1};
    return d;
}

std::multiset<double> column_multiset(const Column& c) {
    return {c.numeric.begin(), c.numeric.end()};
}

std::multiset<std::vector<double>> block_tuples(const Dataset& d,
                                                const std::vector<std::size_t>& rows,
                                                const std::vector<std::size_t>& cols) {
    std::multiset<std::vector<double>> tuples;
    for (std::size_t r : rows) {
        std::vector<double> t;
        for (std::size_t c : cols) t.push_back(d.columns[c].numeric[r]);
        tuples.insert(t);
    }
    return tuples;
}

}  // namespace

TEST_SUITE_BEGIN("distortion");

TEST_CASE("shared permutation moves whole block rows (worked example)") {
    auto d = fig_dataset();
    Dataset out = d;
    // I = rows {2,3,5} (1-based) -> {1,2,4} 0-based; I' = {2,5,3} -> {1,4,2}
    const std::vector<std::size_t> rows = {1, 2, 4};
    const std::vector<std::size_t> perm = {1, 4, 2};
    for (std::size_t ci : {0, 1}) {  // X and Y, not Z
        detail::apply_row_permutation(out.columns[ci], rows, perm);
    }
    // rows 3 and 5 (1-based) swapped in X and Y; row 2 fixed; Z untouched
    CHECK(out.columns[0].numeric == std::vector<double>{10, 11, 14, 13, 12, 15});
    CHECK(out.columns[1].numeric == std::vector<double>{20, 21, 24, 23, 22, 25});
    CHECK(out.columns[2].numeric == d.columns[2].numeric);
    CHECK(out.theta == d.theta);
}

TEST_CASE("smallest r, c select one row and one column; force_different errors") {
    auto d = fig_dataset();
    auto cfg = PermutationConfig::from_setting(PermutationSetting::E1, 0.01, 0.01, true, 5);
    CHECK(cfg.rows_selected(6) == 1);
    CHECK(cfg.cols_selected(3) == 1);
    // a 1-element permutation can never change anything
    CHECK_THROWS_AS(permute_distort(d, cfg), DistortionImpossibleError);
    // without force_different it is a no-op
    auto relaxed = PermutationConfig::from_setting(PermutationSetting::E1, 0.01, 0.01, false, 5);
    CHECK(datasets_equal(permute_distort(d, relaxed), d));
}

TEST_CASE("rounding of selected rows and columns") {
    PermutationConfig cfg;
    cfg.r = 0.5;
    cfg.c = 0.5;
    CHECK(cfg.rows_selected(5) == 3);   // round half away from zero: 2.5 -> 3
    CHECK(cfg.rows_selected(6) == 3);
    CHECK(cfg.cols_selected(13) == 7);  // 6.5 -> 7
    cfg.r = 1.0;
    CHECK(cfg.rows_selected(7326) == 7326);
    cfg.c = 0.1;
    CHECK(cfg.cols_selected(13) == 1);
}

TEST_CASE("full E3 permutation preserves per-column multisets") {
    auto d = synthetic::planted(1000, 50);
    auto cfg = PermutationConfig::from_setting(PermutationSetting::E3, 1.0, 1.0, true, 77);
    auto out = permute_distort(d, cfg);
    REQUIRE(out.num_rows() == d.num_rows());
    for (std::size_t c = 0; c < d.columns.size(); ++c) {
        if (d.columns[c].kind == FeatureKind::numeric) {
            CHECK(column_multiset(out.columns[c]) == column_multiset(d.columns[c]));
        } else {
            std::multiset<std::int32_t> a(d.columns[c].codes.begin(), d.columns[c].codes.end());
            std::multiset<std::int32_t> b(out.columns[c].codes.begin(), out.columns[c].codes.end());
            CHECK(a == b);
        }
    }
    CHECK(out.theta == d.theta);
    CHECK(!datasets_equal(out, d));
}

TEST_CASE("settings differ in how they break within-block tuples") {
    // two perfectly aligned columns: E2 must keep (x,y) pairs intact
    Dataset d;
    d.schema.indicator_column = "mis";
    d.schema.features = {{"x", FeatureKind::numeric}, {"y", FeatureKind::numeric}};
    d.columns.resize(2);
    for (auto& c : d.columns) c.kind = FeatureKind::numeric;
    const std::size_t n = 64;
    for (std::size_t i = 0; i < n; ++i) {
        d.columns[0].numeric.push_back(static_cast<double>(i));
        d.columns[1].numeric.push_back(static_cast<double>(i) + 1000.0);
        d.theta.push_back(i % 7 == 0);
    }
    std::vector<std::size_t> all_rows(n);
    for (std::size_t i = 0; i < n; ++i) all_rows[i] = i;
    const std::vector<std::size_t> both_cols = {0, 1};

    auto e2 = permute_distort(
        d, PermutationConfig::from_setting(PermutationSetting::E2, 1.0, 1.0, true, 3));
    CHECK(block_tuples(e2, all_rows, both_cols) == block_tuples(d, all_rows, both_cols));
    CHECK(!datasets_equal(e2, d));

    // E1 re-permutes each column, so pairs break apart (n is large enough
    // that two independent shuffles almost surely disagree somewhere)
    auto e1 = permute_distort(
        d, PermutationConfig::from_setting(PermutationSetting::E1, 1.0, 1.0, true, 3));
    CHECK(block_tuples(e1, all_rows, both_cols) != block_tuples(d, all_rows, both_cols));
}

TEST_CASE("permute_distort leaves unselected columns and theta bit-identical") {
    auto d = synthetic::planted(500, 51);
    rng::Engine eng(52);
    for (int trial = 0; trial < 30; ++trial) {
        auto setting = static_cast<PermutationSetting>(eng.bounded(3));
        const double r = 0.05 + 0.95 * eng.next_double();
        const double c = 0.05 + 0.55 * eng.next_double();  // keep some columns unselected
        auto cfg = PermutationConfig::from_setting(setting, r, c, true, eng.next_u64());
        auto out = permute_distort(d, cfg);
        CHECK(out.theta == d.theta);
        std::size_t unchanged_cols = 0;
        for (std::size_t ci = 0; ci < d.columns.size(); ++ci) {
            bool same = true;
            if (d.columns[ci].kind == FeatureKind::numeric) {
                same = out.columns[ci].numeric == d.columns[ci].numeric;
                CHECK(column_multiset(out.columns[ci]) == column_multiset(d.columns[ci]));
            } else {
                same = out.columns[ci].codes == d.columns[ci].codes;
            }
            unchanged_cols += same;
        }
        const std::size_t selected = cfg.cols_selected(d.columns.size());
        CHECK(unchanged_cols >= d.columns.size() - selected);
    }
}

TEST_CASE("permutation config validation and flags") {
    PermutationConfig cfg;
    cfg.r = 0.0;
    cfg.c = 0.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.r = 0.5;
    cfg.c = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);

    auto e2full = PermutationConfig::from_setting(PermutationSetting::E2, 0.5, 1.0, true, 0);
    CHECK(e2full.pure_row_permutation(13));
    auto e2part = PermutationConfig::from_setting(PermutationSetting::E2, 0.5, 0.5, true, 0);
    CHECK(!e2part.pure_row_permutation(13));
    auto e1full = PermutationConfig::from_setting(PermutationSetting::E1, 0.5, 1.0, true, 0);
    CHECK(!e1full.pure_row_permutation(13));

    CHECK(PermutationConfig::from_setting(PermutationSetting::E3, 0.5, 0.5, true, 0).setting() ==
          PermutationSetting::E3);
    CHECK(permutation_setting_from_string("E2") == PermutationSetting::E2);
    CHECK_THROWS_AS(permutation_setting_from_string("E9"), ConfigError);
}

TEST_CASE("target_misclassified: identity, worked case, clamps, monotonicity") {
    for (std::uint64_t M : {1ULL, 17ULL, 500ULL}) {
        CHECK(target_misclassified(M, 1000, 1.0) == M);
    }
    CHECK(target_misclassified(1089, 7326, 2.0) == 1896);
    CHECK(target_misclassified(100, 200, 1e6) == 200);  // clamped to N2
    CHECK(target_misclassified(0, 200, 5.0) == 0);      // no errors to amplify
    CHECK_THROWS_AS(target_misclassified(200, 200, 2.0), DegenerateInputError);
    CHECK_THROWS_AS(target_misclassified(10, 200, 0.0), DomainError);
    CHECK_THROWS_AS(target_misclassified(300, 200, 2.0), DomainError);

    rng::Engine eng(61);
    for (int trial = 0; trial < 50; ++trial) {
        const std::uint64_t N = 10 + eng.bounded(10000);
        const std::uint64_t M = eng.bounded(N);
        std::uint64_t prev = 0;
        for (double k = 0.25; k <= 12.0; k += 0.25) {
            const auto t = target_misclassified(M, N, k);
            CHECK(t >= prev);
            prev = t;
        }
    }
}

TEST_CASE("multiplier_to_mcr: identity, worked case, strict growth") {
    CHECK(multiplier_to_mcr(41, 2159, 1.0) == doctest::Approx(41.0 / 2159.0).epsilon(1e-12));
    CHECK(multiplier_to_mcr(41, 2159, 10.0) == doctest::Approx(0.16218354430379747).epsilon(1e-10));
    double prev = 0.0;
    for (double k = 0.5; k <= 20.0; k += 0.5) {
        const double v = multiplier_to_mcr(300, 2000, k);
        CHECK(v > prev);
        prev = v;
    }
    CHECK_THROWS_AS(multiplier_to_mcr(200, 200, 2.0), DomainError);
}

TEST_CASE("target_misclassified tracks the continuous curve within one count") {
    rng::Engine eng(67);
    for (int trial = 0; trial < 50; ++trial) {
        const std::uint64_t N = 20 + eng.bounded(20000);
        const std::uint64_t M = 1 + eng.bounded(N - 1);
        for (int k = 1; k <= 10; ++k) {
            const auto exact = target_misclassified(M, N, static_cast<double>(k));
            const double curve =
                std::round(static_cast<double>(N) * multiplier_to_mcr(M, N, static_cast<double>(k)));
            CHECK(std::fabs(static_cast<double>(exact) - curve) <= 1.0);
        }
    }
}

TEST_CASE("rebalance_mcr: exact counts, strata never mix, determinism") {
    auto d = synthetic::planted(2000, 70);
    const auto N = d.num_rows();
    const auto M = d.misclassified_count();

    RebalanceConfig cfg;
    cfg.k = 1.0;
    cfg.seed = 4;
    auto same = rebalance_mcr(d, cfg);
    CHECK(same.misclassified_count() == M);
    CHECK(same.num_rows() == N);

    cfg.k = 2.0;
    auto doubled = rebalance_mcr(d, cfg);
    CHECK(doubled.misclassified_count() == target_misclassified(M, N, 2.0));
    CHECK(datasets_equal(doubled, rebalance_mcr(d, cfg)));

    // every output row's full record occurs in the source stratum of the
    // same label
    std::set<std::vector<double>> mis_rows, cor_rows;
    for (std::size_t i = 0; i < N; ++i) {
        std::vector<double> key;
        for (const auto& col : d.columns) {
            key.push_back(col.kind == FeatureKind::numeric ? col.numeric[i]
                                                           : static_cast<double>(col.codes[i]));
        }
        (d.theta[i] ? mis_rows : cor_rows).insert(key);
    }
    for (std::size_t i = 0; i < doubled.num_rows(); ++i) {
        std::vector<double> key;
        for (const auto& col : doubled.columns) {
            key.push_back(col.kind == FeatureKind::numeric ? col.numeric[i]
                                                           : static_cast<double>(col.codes[i]));
        }
        CHECK((doubled.theta[i] ? mis_rows : cor_rows).count(key) == 1);
    }
}

TEST_CASE("rebalance_mcr: Adult-like half split at k=2") {
    // 7,326 rows with exactly 1,089 misclassified
    Dataset d;
    d.schema.indicator_column = "mis";
    d.schema.features = {{"x", FeatureKind::numeric}};
    d.columns.resize(1);
    d.columns[0].kind = FeatureKind::numeric;
    for (std::size_t i = 0; i < 7326; ++i) {
        d.columns[0].numeric.push_back(static_cast<double>(i));
        d.theta.push_back(i < 1089);
    }
    RebalanceConfig cfg;
    cfg.k = 2.0;
    cfg.seed = 9;
    auto out = rebalance_mcr(d, cfg);
    CHECK(out.misclassified_count() == 1896);
    CHECK(out.num_rows() == 7326);
    CHECK(out.mcr() == doctest::Approx(0.2588).epsilon(1e-3));
}

TEST_CASE("rebalance_mcr: degenerate strata") {
    auto d = synthetic::planted(100, 71);
    RebalanceConfig cfg;
    cfg.k = 2.0;
    for (auto& t : d.theta) t = 0;
    CHECK_THROWS_AS(rebalance_mcr(d, cfg), DegenerateInputError);
    for (auto& t : d.theta) t = 1;
    CHECK_THROWS_AS(rebalance_mcr(d, cfg), DegenerateInputError);
}

TEST_SUITE_END();
