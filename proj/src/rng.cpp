#include "slicedrift/rng.hpp"

#include <bit>
#include <stdexcept>

namespace slicedrift::rng {

std::uint64_t Engine::bounded(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("Engine::bounded: n must be > 0");
    // Lemire multiply-shift with rejection; unbiased and deterministic.
    unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * n;
    auto lo = static_cast<std::uint64_t>(m);
    if (lo < n) {
        std::uint64_t threshold = (0 - n) % n;
        while (lo < threshold) {
            m = static_cast<unsigned __int128>(next_u64()) * n;
            lo = static_cast<std::uint64_t>(m);
        }
    }
    return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(master ^ 0xa0761d6478bd642fULL);
    for (std::uint64_t tag : path) {
        s = splitmix64(s ^ splitmix64(tag ^ 0xe7037ed1a0b428dbULL));
    }
    return s;
}

std::uint64_t tag_bits(double v) { return std::bit_cast<std::uint64_t>(v); }

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, Engine& eng) {
    if (k > n) throw std::invalid_argument("sample_without_replacement: k > n");
    // Partial Fisher-Yates over the index range.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t j = i + static_cast<std::size_t>(eng.bounded(n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

}  // namespace slicedrift::rng
