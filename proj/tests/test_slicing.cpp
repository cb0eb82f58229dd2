#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "slicedrift/error.hpp"
#include "slicedrift/rng.hpp"
#include "slicedrift/slice.hpp"
#include "slicedrift/stats.hpp"
#include "support/synthetic.hpp"

using namespace slicedrift;

namespace {

Dataset six_row_toy() {
    Dataset d;
    d.schema.indicator_column = "mis";
    d.schema.features = {{"x", FeatureKind::numeric}};
    d.columns.resize(1);
    d.columns[0].kind = FeatureKind::numeric;
    d.columns[0].numeric = {1, 2, 3, 4, 5, 6};
    d.theta = {0, 0, 1, 0, 1, 0};
    return d;
}

SliceRule interval_rule(const std::string& feature, double lo, double hi) {
    FeatureConstraint fc;
    fc.feature = feature;
    fc.kind = FeatureKind::numeric;
    fc.lo = lo;
    fc.hi = hi;
    return SliceRule::make({fc});
}

SliceRule value_rule(const std::string& feature, std::vector<std::int32_t> values) {
    FeatureConstraint fc;
    fc.feature = feature;
    fc.kind = FeatureKind::categorical;
    fc.values = std::move(values);
    return SliceRule::make({fc});
}

// random rule over the planted schema
SliceRule random_rule(rng::Engine& eng, int order) {
    static const std::vector<std::string> numeric = {"x0", "x1", "x2", "x3", "x4", "x5"};
    std::vector<FeatureConstraint> cs;
    std::set<std::string> used;
    while (static_cast<int>(cs.size()) < order) {
        FeatureConstraint fc;
        if (eng.bounded(4) < 3) {
            fc.feature = numeric[eng.bounded(numeric.size())];
            fc.kind = FeatureKind::numeric;
            double a = eng.next_double(), b = eng.next_double();
            fc.lo = std::min(a, b);
            fc.hi = std::max(a, b);
        } else {
            fc.feature = eng.bounded(2) == 0 ? "cat0" : "cat1";
            fc.kind = FeatureKind::categorical;
            std::size_t count = 1 + eng.bounded(2);
            for (std::size_t i = 0; i < count; ++i)
                fc.values.push_back(static_cast<std::int32_t>(eng.bounded(3)));
        }
        if (used.insert(fc.feature).second) cs.push_back(std::move(fc));
    }
    return SliceRule::make(std::move(cs));
}

Dataset permute_dataset_rows(const Dataset& d, std::uint64_t seed) {
    std::vector<std::size_t> order(d.num_rows());
    std::iota(order.begin(), order.end(), 0);
    rng::Engine eng(seed);
    rng::shuffle(order, eng);
    return take_rows(d, order);
}

}  // namespace

TEST_SUITE_BEGIN("slicing");

TEST_CASE("map_slice: direct count on a 6-row toy") {
    auto d = six_row_toy();
    auto res = map_slice(interval_rule("x", 2, 4), d, true);
    CHECK(res.n == 3);
    CHECK(res.m.value() == 1);
    CHECK(res.pi_hat == 0.5);
}

TEST_CASE("map_slice: universal constraint excludes only missing rows") {
    auto d = six_row_toy();
    d.columns[0].numeric[1] = std::numeric_limits<double>::quiet_NaN();
    auto res = map_slice(interval_rule("x", 1, 6), d, false);
    CHECK(res.n == 5);
    CHECK(!res.m.has_value());
    auto unbounded = map_slice(interval_rule("x", -std::numeric_limits<double>::infinity(),
                                             std::numeric_limits<double>::infinity()),
                               d, false);
    CHECK(unbounded.n == 5);
}

TEST_CASE("map_slice: schema errors") {
    auto d = six_row_toy();
    CHECK_THROWS_AS(map_slice(interval_rule("nope", 0, 1), d, false), SchemaError);
    CHECK_THROWS_AS(map_slice(value_rule("x", {0}), d, false), SchemaError);  // kind mismatch
}

TEST_CASE("map_slice conjunction example: age interval and region values") {
    Dataset d;
    d.schema.indicator_column = "mis";
    d.schema.features = {{"age", FeatureKind::numeric}, {"region", FeatureKind::categorical}};
    d.schema.categories["region"] = {"mid-west", "west coast", "east coast"};
    d.columns.resize(2);
    d.columns[0].kind = FeatureKind::numeric;
    d.columns[1].kind = FeatureKind::categorical;
    d.columns[0].numeric = {6, 10, 17, 30, 12, 5};
    d.columns[1].codes = {0, 2, 1, 0, 0, kMissingCode};
    d.theta = {0, 0, 0, 0, 0, 0};

    FeatureConstraint age;
    age.feature = "age";
    age.kind = FeatureKind::numeric;
    age.lo = 5;
    age.hi = 18;
    FeatureConstraint region;
    region.feature = "region";
    region.kind = FeatureKind::categorical;
    region.values = {0, 1};  // mid-west, west coast
    auto rule = SliceRule::make({age, region});
    // rows: 0 (6, mid-west), 2 (17, west coast), 4 (12, mid-west); row 1 is
    // east coast, row 3 is out of the age range, row 5 has missing region
    CHECK(map_slice(rule, d, false).n == 3);
}

TEST_CASE("map_slice is label-free when use_theta is off") {
    auto d = synthetic::planted(400, 5);
    auto rule = interval_rule("x0", 0.2, 0.9);
    auto before = map_slice(rule, d, false);
    Dataset garbled = d;
    for (auto& t : garbled.theta) t ^= 1;
    auto after = map_slice(rule, garbled, false);
    CHECK(before.n == after.n);
    CHECK(before.pi_hat == after.pi_hat);
    CHECK(!before.m.has_value());
}

TEST_CASE("conjunction monotonicity: extra constraints never grow a slice") {
    auto d = synthetic::planted(600, 17);
    rng::Engine eng(23);
    for (int trial = 0; trial < 100; ++trial) {
        auto two = random_rule(eng, 2);
        SliceRule one = SliceRule::make({two.constraints[eng.bounded(2)]});
        auto rtwo = map_slice(two, d, true);
        auto rone = map_slice(one, d, true);
        CHECK(rtwo.n <= rone.n);
        CHECK(rtwo.m.value() <= rone.m.value());
    }
}

TEST_CASE("bitmap mapping equals the serial reference") {
    auto d = synthetic::planted(700, 29);
    // add some missing cells so the agreement covers them
    for (int i = 0; i < 40; ++i) {
        d.columns[0].numeric[static_cast<std::size_t>(i) * 7] =
            std::numeric_limits<double>::quiet_NaN();
        d.columns[6].codes[static_cast<std::size_t>(i) * 11] = kMissingCode;
    }
    rng::Engine eng(31);
    std::vector<SliceRule> rules;
    for (int i = 0; i < 60; ++i) rules.push_back(random_rule(eng, 1 + eng.bounded(2)));
    for (bool use_theta : {false, true}) {
        auto fast = map_slices(rules, d, use_theta);
        auto slow = ref::map_slices(rules, d, use_theta);
        REQUIRE(fast.size() == slow.size());
        for (std::size_t i = 0; i < fast.size(); ++i) {
            CHECK(fast[i].n == slow[i].n);
            CHECK(fast[i].pi_hat == slow[i].pi_hat);
            CHECK(fast[i].m == slow[i].m);
        }
    }
}

TEST_CASE("find_weak_slices: planted top-decile errors are found") {
    auto d = synthetic::top_decile_errors(2000, 3);
    SliceFinderConfig cfg;
    cfg.min_support = 10;
    auto s = find_weak_slices(d, cfg, "top-decile");
    REQUIRE(!s.rules.empty());
    const double M_over_N = d.mcr();
    bool found_top_decile = false;
    for (const auto& bs : s.rules) {
        // every rule is genuinely weak on its source
        CHECK(static_cast<double>(bs.m) / static_cast<double>(bs.n) > M_over_N);
        const auto& fc = bs.rule.constraints.front();
        if (fc.lo >= 0.88 && fc.hi <= 1.0) found_top_decile = true;
    }
    CHECK(found_top_decile);
}

TEST_CASE("find_weak_slices: no errors means no slices") {
    auto d = synthetic::planted(500, 11);
    for (auto& t : d.theta) t = 0;
    CHECK_THROWS_AS(find_weak_slices(d, SliceFinderConfig{}, "x"), NoErrorsError);
}

TEST_CASE("find_weak_slices: every rule passes the published contract") {
    auto d = synthetic::planted(4000, 13);
    SliceFinderConfig cfg;
    auto s = find_weak_slices(d, cfg, "contract");
    CHECK(s.N == d.num_rows());
    CHECK(s.M == d.misclassified_count());
    const auto min_support = cfg.resolve_min_support(s.N);
    for (const auto& bs : s.rules) {
        auto remapped = map_slice(bs.rule, d, true);
        CHECK(remapped.n == bs.n);
        CHECK(remapped.m.value() == bs.m);
        CHECK(bs.n >= min_support);
        CHECK(static_cast<double>(bs.m) * static_cast<double>(s.N) >
              static_cast<double>(s.M) * static_cast<double>(bs.n));
        CHECK(stats::hypergeom_sf(s.N, s.M, bs.n, bs.m) < cfg.filter_alpha);
    }
    // sorted by id, no duplicates
    for (std::size_t i = 1; i < s.rules.size(); ++i) {
        CHECK(s.rules[i - 1].rule.id < s.rules[i].rule.id);
    }
}

TEST_CASE("find_weak_slices is invariant under row permutation") {
    auto d = synthetic::planted(1500, 19);
    SliceFinderConfig cfg;
    auto a = find_weak_slices(d, cfg, "src");
    auto b = find_weak_slices(permute_dataset_rows(d, 777), cfg, "src");
    REQUIRE(a.rules.size() == b.rules.size());
    for (std::size_t i = 0; i < a.rules.size(); ++i) {
        CHECK(a.rules[i].rule.id == b.rules[i].rule.id);
        CHECK(a.rules[i].n == b.rules[i].n);
        CHECK(a.rules[i].m == b.rules[i].m);
    }
}

TEST_CASE("slice_summary: full-coverage single rule") {
    auto d = six_row_toy();
    SliceSet s;
    s.source = "toy";
    s.N = 6;
    s.M = 2;
    auto rule = interval_rule("x", 1, 6);
    auto mapped = map_slice(rule, d, true);
    s.rules.push_back({rule, mapped.n, mapped.m.value()});
    auto sum = slice_summary(s, d);
    CHECK(sum.num_slices == 1);
    CHECK(sum.pct_error_coverage == 100.0);
    CHECK(sum.pct_1feat == 100.0);
    CHECK(sum.pct_features_in_any_slice == 100.0);
}

TEST_CASE("slice_summary: two disjoint one-feature rules covering half each") {
    auto d = six_row_toy();  // errors at x=3 and x=5
    SliceSet s;
    s.N = 6;
    s.M = 2;
    for (auto& rule : {interval_rule("x", 3, 3), interval_rule("x", 5, 5)}) {
        auto mapped = map_slice(rule, d, true);
        s.rules.push_back({rule, mapped.n, mapped.m.value()});
    }
    auto sum = slice_summary(s, d);
    CHECK(sum.pct_error_coverage == 100.0);
    CHECK(sum.pct_1feat == 100.0);
    CHECK(sum.pct_2feat == 0.0);
}

TEST_CASE("slice_summary: coverage equals a brute-force union count") {
    auto d = synthetic::planted(800, 37);
    rng::Engine eng(41);
    SliceSet s;
    s.N = d.num_rows();
    s.M = d.misclassified_count();
    std::vector<SliceRule> rules;
    for (int i = 0; i < 3; ++i) rules.push_back(random_rule(eng, 1 + eng.bounded(2)));
    for (const auto& rule : rules) {
        auto mapped = map_slice(rule, d, true);
        s.rules.push_back({rule, mapped.n, mapped.m.value()});
    }

    // brute force: per-row predicate over the union
    std::size_t covered = 0;
    for (std::size_t row = 0; row < d.num_rows(); ++row) {
        if (!d.theta[row]) continue;
        bool in_any = false;
        for (const auto& rule : rules) {
            bool all = true;
            for (const auto& fc : rule.constraints) {
                std::size_t idx = d.schema.feature_index(fc.feature);
                all = fc.kind == FeatureKind::numeric
                          ? fc.matches_numeric(d.columns[idx].numeric[row])
                          : fc.matches_code(d.columns[idx].codes[row]);
                if (!all) break;
            }
            if (all) {
                in_any = true;
                break;
            }
        }
        covered += in_any;
    }
    auto sum = slice_summary(s, d);
    const double want =
        100.0 * static_cast<double>(covered) / static_cast<double>(d.misclassified_count());
    CHECK(sum.pct_error_coverage == doctest::Approx(want).epsilon(1e-12));

    for (auto& t : d.theta) t = 0;
    CHECK_THROWS_AS(slice_summary(s, d), NoErrorsError);
}

TEST_CASE("rules ignore categories that appeared only after slicing") {
    // deployment data may contain labels the baseline never saw; their codes
    // extend the table and cannot collide with stored value sets
    Dataset d;
    d.schema.indicator_column = "mis";
    d.schema.features = {{"region", FeatureKind::categorical}};
    d.schema.categories["region"] = {"north", "south", "east", "west"};
    d.columns.resize(1);
    d.columns[0].kind = FeatureKind::categorical;
    d.columns[0].codes = {0, 1, 4, 5, 1, 4};  // codes 4, 5 are post-baseline labels
    d.theta = {0, 0, 0, 0, 0, 0};
    auto rule = value_rule("region", {0, 1});
    CHECK(map_slice(rule, d, false).n == 3);
}

TEST_CASE("unbounded intervals survive the JSON encoding") {
    auto rule = interval_rule("x", -std::numeric_limits<double>::infinity(), 4.5);
    SliceSet s;
    s.source = "inf";
    s.N = 6;
    s.M = 2;
    s.rules.push_back({rule, 4, 1});
    auto back = SliceSet::from_json_string(s.to_json_string());
    REQUIRE(back.rules.size() == 1);
    CHECK(back.rules[0].rule.constraints[0].lo == -std::numeric_limits<double>::infinity());
    CHECK(back.rules[0].rule.constraints[0].hi == 4.5);
    auto d = six_row_toy();
    CHECK(map_slice(back.rules[0].rule, d, false).n == 4);
}

TEST_CASE("SliceSet JSON round-trip") {
    auto d = synthetic::planted(2500, 43);
    auto s = find_weak_slices(d, SliceFinderConfig{}, "roundtrip-src");
    auto text = s.to_json_string();
    auto back = SliceSet::from_json_string(text);
    CHECK(back.source == s.source);
    CHECK(back.N == s.N);
    CHECK(back.M == s.M);
    REQUIRE(back.rules.size() == s.rules.size());
    for (std::size_t i = 0; i < s.rules.size(); ++i) {
        CHECK(back.rules[i].rule.id == s.rules[i].rule.id);
        CHECK(back.rules[i].n == s.rules[i].n);
        CHECK(back.rules[i].m == s.rules[i].m);
        // constraints survive exactly: remap and compare
        CHECK(map_slice(back.rules[i].rule, d, false).n == map_slice(s.rules[i].rule, d, false).n);
    }
}

TEST_SUITE_END();
