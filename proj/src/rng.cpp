#include "edit_suggest/rng.hpp"

#include <cstring>
#include <stdexcept>

namespace edit_suggest {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view bytes)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t hash_values(std::span<const double> values, std::uint64_t basis)
{
    std::uint64_t h = basis;
    for (double v : values) {
        unsigned char bytes[sizeof(double)];
        std::memcpy(bytes, &v, sizeof(double));
        for (unsigned char c : bytes) {
            h ^= c;
            h *= 0x100000001b3ULL;
        }
    }
    return h;
}

std::uint64_t derive_seed(std::uint64_t global_seed, std::string_view purpose, std::uint64_t index)
{
    return splitmix64(splitmix64(global_seed ^ fnv1a(purpose)) + splitmix64(index));
}

std::uint64_t combine_seed(std::uint64_t seed, std::uint64_t key)
{
    return splitmix64(seed ^ splitmix64(key));
}

Rng::result_type Rng::operator()()
{
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double Rng::uniform()
{
    // 53 random mantissa bits in [0, 1).
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double Rng::normal()
{
    return normal_(*this);
}

std::vector<double> Rng::normals(std::size_t n)
{
    std::vector<double> out(n);
    for (auto& v : out) {
        v = normal();
    }
    return out;
}

std::size_t Rng::index(std::size_t n)
{
    if (n == 0) {
        throw std::invalid_argument("Rng::index: empty range");
    }
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

std::size_t Rng::categorical(std::span<const double> weights)
{
    double total = 0.0;
    for (double w : weights) {
        if (w < 0.0) {
            throw std::invalid_argument("Rng::categorical: negative weight");
        }
        total += w;
    }
    if (!(total > 0.0)) {
        throw std::invalid_argument("Rng::categorical: weights sum to zero");
    }
    const double u = uniform() * total;
    double acc = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        acc += weights[k];
        if (u < acc) {
            return k;
        }
    }
    // Round-off can leave u == total; fall back to the last positive weight.
    for (std::size_t k = weights.size(); k-- > 0;) {
        if (weights[k] > 0.0) {
            return k;
        }
    }
    return weights.size() - 1;
}

}  // namespace edit_suggest
