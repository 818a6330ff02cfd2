#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "spmlab/torus_grid.hpp"

namespace spmlab {

enum class NoiseKind { SpaceWhite, Coloured };

// Gaussian noise realization on T^d as a truncated random Fourier series,
// modes k = 2 pi j for integer lattice j with |j| <= K_max. Space white noise
// holds complex unit-variance coefficients (time independent); the coloured
// variant is white in time with colour weights c_k = (1+|k|)^-(d-2+2a') and
// carries per-mode Brownian paths mollified in time.
class SpectralNoise {
public:
    static SpectralNoise sample_space_white(int d, int K_max, std::uint64_t seed);
    static SpectralNoise sample_coloured(int d, int K_max, double alpha_prime, double mollifier_eps,
                                         double path_dt, int path_steps, std::uint64_t seed);
    // Deterministic SpaceWhite realization from prescribed coefficients,
    // row-major over j in [-K, K]^d; must be Hermitian (replay & testing).
    static SpectralNoise from_coefficients(int d, int K_max,
                                           std::span<const std::complex<double>> coeffs);

    NoiseKind kind() const { return kind_; }
    int dimension() const { return d_; }
    int cutoff() const { return K_max_; }
    std::uint64_t seed() const { return seed_; }
    double alpha_prime() const { return alpha_prime_; }
    double mollifier_eps() const { return mollifier_eps_; }
    double path_dt() const { return path_dt_; }
    double time_span() const { return path_dt_ * path_steps_; }

    // Coefficient of mode j (SpaceWhite). The whole lattice is stored, the
    // coefficient at -j is the conjugate of the one at j.
    std::complex<double> coefficient(int j1, int j2 = 0) const;

    // Colour weight c_k for mode j (1 for SpaceWhite).
    double colour_weight(int j1, int j2 = 0) const;

    // Coloured: mollified white-in-time amplitude dB_k^(eps)(t); the series
    // coefficient of e_k at time t is sqrt(c_k) * this.
    std::complex<double> mollified_amplitude(int j1, int j2, double t) const;

    // Coloured: sqrt(c_k) B_k(t) at a path node time (no mollification);
    // the Ito isometry check targets Var = c_k * t.
    std::complex<double> integrated_mode(int j1, int j2, int step) const;

    // Real value of the truncated series at p; constant in t for SpaceWhite.
    // Throws std::out_of_range for Coloured with t outside the path span.
    double evaluate(const SpaceTimePoint& p) const;

    // Renders the realization at time t onto the grid (FFT synthesis);
    // out has grid.points_per_slice() entries. Requires grid.n > 2*K_max.
    void render_slice(double t, const Grid& grid, std::span<double> out) const;

    // sum_k |xi_k|^2 over all stored modes (SpaceWhite Parseval reference).
    double coefficient_energy() const;

    // Binary coefficient dump for replay.
    void save(const std::string& path) const;
    static SpectralNoise load(const std::string& path);

    // Time mollifier rho_eps(s) = rho(s/eps)/eps, unit mass, even, compact.
    static double mollifier_rho(double s);

private:
    SpectralNoise() = default;
    std::size_t mode_index(int j1, int j2) const;
    void fill_spectrum(double t, std::vector<std::complex<double>>& spec, int n) const;

    NoiseKind kind_ = NoiseKind::SpaceWhite;
    int d_ = 2;
    int K_max_ = 1;
    std::uint64_t seed_ = 0;
    double alpha_prime_ = 0.0;
    double mollifier_eps_ = 0.0;
    double path_dt_ = 0.0;
    int path_steps_ = 0;
    int path_pad_ = 0;  // extra increments on each side for the mollifier window

    // SpaceWhite: coefficient per lattice mode, row-major over j in [-K, K]^d.
    std::vector<std::complex<double>> coeffs_;
    // Coloured: Brownian increments per mode and path step (padded grid).
    std::vector<std::complex<double>> increments_;
};

}  // namespace spmlab
