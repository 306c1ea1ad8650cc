#pragma once

// Self-contained random primitives. std::mt19937_64 is fully specified by
// the standard, but the std distributions are not, so everything that maps
// raw bits to values lives here. Seeded results are identical across
// platforms and compilers.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace flowpat::rng {

using Engine = std::mt19937_64;

/// Counter-friendly 64-bit generator (Vigna's splitmix64). One instance per
/// sample index gives order-independent streams for data generation.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return ~std::uint64_t{0}; }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// Derives an independent stream seed for (seed, index) pairs.
inline std::uint64_t substream(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 g(seed ^ (0x9e3779b97f4a7c15ull + index * 0xd1342543de82ef95ull));
    return g();
}

/// Uniform in [0, n) without modulo bias.
template <class G>
std::uint64_t below(G& g, std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n + 1) % n;
    std::uint64_t v = g();
    while (v > limit) v = g();
    return v % n;
}

/// Uniform double in [0, 1) with 53 random bits.
template <class G>
double unit(G& g) {
    return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

template <class G>
double uniform(G& g, double lo, double hi) {
    return lo + (hi - lo) * unit(g);
}

/// Log-uniform over [lo, hi], lo > 0.
template <class G>
double log_uniform(G& g, double lo, double hi) {
    return std::exp(uniform(g, std::log(lo), std::log(hi)));
}

/// Fisher-Yates with the bias-free index draw above.
template <class T, class G>
void shuffle(std::vector<T>& v, G& g) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(below(g, i));
        std::swap(v[i - 1], v[j]);
    }
}

} // namespace flowpat::rng
