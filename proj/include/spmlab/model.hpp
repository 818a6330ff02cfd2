#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "spmlab/nonlinearity.hpp"
#include "spmlab/spectral_noise.hpp"
#include "spmlab/torus_grid.hpp"

namespace spmlab {

enum class Symbol { Xi, Lolly, Dumb, Cherry, XXi };

const char* symbol_name(Symbol tau);
// Scaling exponent |tau| at noise regularity alpha.
double symbol_homogeneity(Symbol tau, double alpha);
// Blow-up exponent e(tau) in the diffusivity, with the small epsilon knob.
double symbol_a_exponent(Symbol tau, double epsilon);

// Counterterms of the space-white construction, mode sums over the lattice
// disc 0 < |j| <= K_max with k = 2 pi j:
//   c_dumb(a,t)   = t + sum (1 - e^{-a|k|^2 t}) / (a|k|^2)
//   c_cherry(a,t) =     sum (1 - e^{-a|k|^2 t})^2 / (a^2 |k|^2)
//   C(a)          =     sum (a|k|^2)^{-1}
double counterterm_dumb(int d, double a, double t, int K_max);
double counterterm_cherry(int d, double a, double t, int K_max);
double counterterm_C(int d, double a, int K_max);

// Evaluation machinery for the enhanced noise bound to one realization.
// For SpaceWhite everything is an exact truncated Fourier sum; for Coloured
// the heat-flow integral is a per-mode Duhamel quadrature on the path grid.
class ModelEvaluator {
public:
    explicit ModelEvaluator(const SpectralNoise& noise);

    const SpectralNoise& noise() const { return *noise_; }
    int dimension() const { return noise_->dimension(); }

    double xi(const SpaceTimePoint& eval) const;

    // Unrecentered linear evolution U_a(s, y) started from zero at time 0;
    // the model is lolly(base, eval) = U_a(eval) - U_a(base).
    double lolly_unrecentered(double a, const SpaceTimePoint& p, int da_order = 0) const;
    double lolly(double a, const SpaceTimePoint& base, const SpaceTimePoint& eval,
                 int da_order = 0) const;
    // grad_y U_a(s, y); independent of the base point.
    std::array<double, 2> lolly_gradient(double a, const SpaceTimePoint& eval,
                                         int da_order = 0) const;

    double dumb(double a, const SpaceTimePoint& base, const SpaceTimePoint& eval) const;
    double cherry(double a, const SpaceTimePoint& base, const SpaceTimePoint& eval) const;
    std::array<double, 2> xnoise(const SpaceTimePoint& base, const SpaceTimePoint& eval) const;

    // Max |LHS - RHS| of the recentering law for tau over random eval points.
    double recenter_check(Symbol tau, double a, const SpaceTimePoint& x, const SpaceTimePoint& y,
                          int num_eval, std::uint64_t seed) const;

    // FFT synthesis of U_a(s, .) and of its spatial gradient on a grid slice.
    void render_lolly_slice(double a, double s, const Grid& grid, std::span<double> out) const;
    void render_lolly_gradient_slice(double a, double s, const Grid& grid, std::span<double> gx,
                                     std::span<double> gy) const;

private:
    const SpectralNoise* noise_;
    // Duhamel weight for one mode (SpaceWhite closed form or path quadrature).
    std::complex<double> mode_weight(int j1, int j2, double a, double s, int da_order) const;

    friend struct ModelPairing;
};

// Space-time field paired against a rescaled test function by Riemann sums
// with cell weights dt*dx^d on the grid. Throws std::invalid_argument when
// the scale is not resolvable (lambda*n < 8 or lambda^2 < 2*dt).
double pair_field(const std::function<double(const SpaceTimePoint&)>& field,
                  const TestFunction& tf, const Grid& grid);

struct HomogeneityFit {
    double slope = 0.0;
    double stderr_slope = 0.0;
    double expected = 0.0;  // Table value |tau| at the configured alpha
    std::vector<double> lambdas;
    std::vector<double> moments;    // E^(1/2) |<Pi[tau], phi^lambda>|^2
    std::vector<double> sample_sq;  // per-sample squared pairings, ensemble x lambdas
};

struct FitHomogeneityOptions {
    int d = 2;
    int K_max = 32;
    double a = 1.0;
    int ensemble = 100;
    std::vector<double> lambdas{0.5, 0.25, 0.125, 0.0625, 0.03125};
    std::uint64_t seed = 1;
    int grid_n = 256;      // spatial synthesis grid (must exceed 2*K_max)
    int time_nodes = 10;   // Gauss-Legendre nodes across the parabolic window
    double base_time = 0.5;
    double alpha = 0.9;
    int threads = 0;  // 0: use the global default
};

// Least-squares slope of log E^(1/2)|<Pi_x[tau], phi_x^lambda>|^2 against
// log lambda over a fresh ensemble of space-white realizations.
HomogeneityFit fit_homogeneity(Symbol tau, const FitHomogeneityOptions& opt);

struct CountertermConditions {
    double integral_time_independent = 0.0;  // int sup_v |s's (C^a - c_dumb)|
    double integral_dumb_cherry = 0.0;       // int sup_v |s^2/v (c_dumb - a c_cherry)|
    bool finite = false;
};

// Evaluates the two counterterm-closeness integrals over t in (0, T], sup
// over a log-spaced v-sample in [v_min, v_max] (both signs).
CountertermConditions counterterm_conditions(const Nonlinearity& nl, double v_min, double v_max,
                                             double T, int d, int K_max, int v_samples = 48,
                                             int t_panels = 24);

}  // namespace spmlab
