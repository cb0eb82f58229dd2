#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace slicedrift::rng {

// All randomness in the library flows through this engine so that every
// operation is a pure function of (inputs, seed) and replays bit-exactly on
// any platform. The generator is std::mt19937_64 (fully specified by the
// standard); bounded draws use Lemire's multiply-shift rejection method
// instead of std::uniform_int_distribution, whose output is
// implementation-defined.
class Engine {
public:
    explicit Engine(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next_u64() { return gen_(); }

    /// Unbiased draw in [0, n). n must be > 0.
    std::uint64_t bounded(std::uint64_t n);

    /// Draw in [0, 1) with 53 bits of precision.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

private:
    std::mt19937_64 gen_;
};

/// Derive a child seed from a master seed and a tag path. splitmix64-based;
/// deterministic, and distinct tag paths give independent streams. Used for
/// per-split / per-repetition / per-cell seeds in the experiment harness.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path);

std::uint64_t splitmix64(std::uint64_t x);

/// Reinterpret a double's bits as a seed-derivation tag.
std::uint64_t tag_bits(double v);

/// Fisher-Yates shuffle driven by Engine::bounded.
template <typename T>
void shuffle(std::vector<T>& v, Engine& eng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(eng.bounded(i));
        std::swap(v[i - 1], v[j]);
    }
}

/// k distinct values from {0,...,n-1}, in selection order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Engine& eng);

}  // namespace slicedrift::rng
