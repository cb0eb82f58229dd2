// Times the OpenMP slice-mapping kernel against the serial reference and the
// slice finder end to end. Counts are checked to agree before timings are
// reported, so the benchmark doubles as a large-input equivalence check.

#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "slicedrift/dataset.hpp"
#include "slicedrift/parallel.hpp"
#include "slicedrift/rng.hpp"
#include "slicedrift/slice.hpp"

using namespace slicedrift;

namespace {

Dataset make_bench_dataset(std::size_t n_rows, std::uint64_t seed) {
    rng::Engine eng(seed);
    Dataset d;
    d.schema.indicator_column = "mis";
    for (int f = 0; f < 8; ++f) {
        d.schema.features.push_back({"f" + std::to_string(f), FeatureKind::numeric});
    }
    d.schema.features.push_back({"cat", FeatureKind::categorical});
    d.schema.categories["cat"] = {"a", "b", "c", "d", "e"};
    d.columns.resize(d.schema.features.size());
    for (std::size_t i = 0; i < d.columns.size(); ++i) d.columns[i].kind = d.schema.features[i].kind;
    for (std::size_t row = 0; row < n_rows; ++row) {
        double first = 0.0;
        for (int f = 0; f < 8; ++f) {
            const double v = f == 1 ? first + 0.05 * eng.next_double() : eng.next_double();
            if (f == 0) first = v;
            d.columns[static_cast<std::size_t>(f)].numeric.push_back(v);
        }
        d.columns[8].codes.push_back(static_cast<std::int32_t>(eng.bounded(5)));
        const bool weak = first > 0.8 || d.columns[8].codes.back() == 4;
        d.theta.push_back(eng.next_double() < (weak ? 0.35 : 0.03) ? 1 : 0);
    }
    return d;
}

std::vector<SliceRule> make_bench_rules(std::size_t count, std::uint64_t seed) {
    rng::Engine eng(seed);
    std::vector<SliceRule> rules;
    for (std::size_t i = 0; i < count; ++i) {
        FeatureConstraint a;
        a.feature = "f" + std::to_string(eng.bounded(8));
        a.kind = FeatureKind::numeric;
        const double lo = eng.next_double() * 0.8;
        a.lo = lo;
        a.hi = lo + 0.05 + 0.3 * eng.next_double();
        FeatureConstraint b;
        b.feature = "cat";
        b.kind = FeatureKind::categorical;
        b.values = {static_cast<std::int32_t>(eng.bounded(5))};
        rules.push_back(eng.bounded(3) == 0 ? SliceRule::make({a})
                                            : SliceRule::make({a, b}));
    }
    return rules;
}

template <typename F>
double time_best_of(int reps, F&& fn) {
    double best = 1e300;
    for (int i = 0; i < reps; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        fn();
        const double dt =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        best = std::min(best, dt);
    }
    return best;
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t n_rows = 200000;
    std::size_t n_rules = 256;
    if (argc > 1) n_rows = static_cast<std::size_t>(std::stoull(argv[1]));
    if (argc > 2) n_rules = static_cast<std::size_t>(std::stoull(argv[2]));

    std::printf("rows=%zu rules=%zu threads=%d\n", n_rows, n_rules, max_threads());
    auto d = make_bench_dataset(n_rows, 1);
    auto rules = make_bench_rules(n_rules, 2);

    std::vector<MappedSlice> fast, slow;
    const double t_fast = time_best_of(3, [&] { fast = map_slices(rules, d, true); });
    const double t_slow = time_best_of(3, [&] { slow = ref::map_slices(rules, d, true); });
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (fast[i].n != slow[i].n || fast[i].m != slow[i].m) {
            std::printf("MISMATCH at rule %zu\n", i);
            return 1;
        }
    }
    std::printf("map_slices   parallel %8.1f ms   serial-ref %8.1f ms   speedup %.2fx\n",
                t_fast * 1e3, t_slow * 1e3, t_slow / t_fast);

    SliceFinderConfig cfg;
    SliceSet found;
    const double t_find = time_best_of(2, [&] { found = find_weak_slices(d, cfg, "bench"); });
    std::printf("find_weak_slices      %8.1f ms   (K=%zu)\n", t_find * 1e3, found.rules.size());
    return 0;
}
