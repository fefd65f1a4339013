#pragma once

// Seeding policy: every random stream is a SplitMix64 generator whose seed is
// derived from (global seed, purpose label, index). Streams for data
// generation, initialization, training noise and evaluation sampling never
// share state, and a run is reproducible from its global seed alone.

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace edit_suggest {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view bytes);
std::uint64_t hash_values(std::span<const double> values, std::uint64_t basis = 0xcbf29ce484222325ULL);
std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view purpose, std::uint64_t index = 0);
std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t key);

class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed)
        : state_(seed)
    {
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    double uniform();
    double normal();
    std::vector<double> normals(std::size_t n);
    std::size_t index(std::size_t n);
    /// Draws an index with probability proportional to weights.
    std::size_t categorical(std::span<const double> weights);

    template <class It>
    void shuffle(It first, It last)
    {
        for (auto n = last - first; n > 1; --n) {
            std::swap(first[n - 1], first[index(static_cast<std::size_t>(n))]);
        }
    }

private:
    std::uint64_t state_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace edit_suggest
