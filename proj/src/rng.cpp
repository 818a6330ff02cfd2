#include "spmlab/rng.hpp"

#include <cmath>

namespace spmlab {

namespace {

// splitmix64 finalizer (Steele/Lea/Flood), used as the counter hash.
std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace

std::uint64_t CounterRng::mix(std::uint64_t a, std::uint64_t b) {
    return splitmix64(splitmix64(a) ^ (0x9E3779B97F4A7C15ULL + b));
}

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t key) : base_(mix(seed, key)) {}

std::uint64_t CounterRng::next_u64() {
    return splitmix64(base_ + 0x632BE59BD9B4E019ULL * ++counter_);
}

double CounterRng::next_uniform() {
    // 53 significant bits, shifted into (0,1).
    const std::uint64_t bits = next_u64() >> 11;
    return (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
}

double CounterRng::next_normal() {
    if (have_cached_normal_) {
        have_cached_normal_ = false;
        return cached_normal_;
    }
    const double u1 = next_uniform();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    cached_normal_ = r * std::sin(theta);
    have_cached_normal_ = true;
    return r * std::cos(theta);
}

std::pair<double, double> CounterRng::next_complex_gaussian() {
    const double scale = std::sqrt(0.5);
    const double re = scale * next_normal();
    const double im = scale * next_normal();
    return {re, im};
}

std::uint64_t mode_key(int j1, int j2) {
    const auto enc = [](int j) -> std::uint64_t {
        return static_cast<std::uint64_t>(static_cast<std::uint32_t>(j));
    };
    return (enc(j1) << 32) | enc(j2);
}

}  // namespace spmlab
