#pragma once

#include <cstdint>
#include <utility>

namespace spmlab {

// Counter-based random stream. Each (seed, key) pair owns an independent
// stream whose n-th draw is a pure function of (seed, key, n), so ensembles
// are reproducible and order-independent under parallel sampling.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t key);

    std::uint64_t next_u64();
    // Uniform in (0, 1), never exactly 0 or 1.
    double next_uniform();
    // Standard normal via Box-Muller (two uniforms per pair, no rejection).
    double next_normal();
    // Independent N(0, 1/2) + i N(0, 1/2), i.e. unit-variance complex Gaussian.
    std::pair<double, double> next_complex_gaussian();

    static std::uint64_t mix(std::uint64_t a, std::uint64_t b);

private:
    std::uint64_t base_;
    std::uint64_t counter_ = 0;
    bool have_cached_normal_ = false;
    double cached_normal_ = 0.0;
};

// Stable 64-bit key for a lattice mode index (d <= 2). Encodes signed
// components so that (j1, j2) and (j2, j1) get distinct keys.
std::uint64_t mode_key(int j1, int j2 = 0);

}  // namespace spmlab
