#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "spmlab/nonlinearity.hpp"
#include "spmlab/spectral_noise.hpp"
#include "spmlab/torus_grid.hpp"

namespace spmlab {

// Thrown on NaN/Inf detection or when CFL halving exhausts its budget.
struct NumericalAbort : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Scheme { ExplicitRK2, IMEX };

// Renders the forcing field xi(t, .) onto a grid slice.
using ForcingFn = std::function<void(double t, const Grid&, std::span<double>)>;

ForcingFn zero_forcing();
// Adapter around a noise realization (SpaceWhite is rendered once and held).
ForcingFn make_noise_forcing(const SpectralNoise& noise);
// Deterministic pointwise forcing (manufactured solutions).
ForcingFn make_pointwise_forcing(std::function<double(double t, double x, double y)> f);

struct SolveConfig {
    Grid grid;
    Nonlinearity nl = Nonlinearity::make_constant_diffusion(1.0);
    Scheme scheme = Scheme::ExplicitRK2;
    // Mode cutoff of the renormalization drift C^{a(u)} = S_K / a(u);
    // 0 disables the drift. Matches the noise cutoff in production runs.
    int counterterm_K_max = 0;
    double cfl_safety = 0.25;
    int max_halvings = 16;
    std::uint64_t seed = 0;
    std::string noise_id;
};

class SolutionField {
public:
    Grid grid;
    Scheme scheme = Scheme::ExplicitRK2;
    int counterterm_K_max = 0;
    std::uint64_t seed = 0;
    std::string noise_id;
    std::vector<double> values;  // (n_t + 1) slices, row-major per slice

    std::span<const double> slice(int m) const;
    std::span<double> slice(int m);
    double value(int m, int ix, int iy = 0) const {
        return values[static_cast<std::size_t>(m) * grid.points_per_slice() + grid.site(ix, iy)];
    }

    void save(const std::string& path) const;
    static SolutionField load(const std::string& path);
};

// Time-steps d_t u = div(a(u) grad u) + sigma(u) xi - sigma'(u)sigma(u) C^{a(u)}
// with flux-form spatial differences (arithmetic-mean face diffusivity).
// ExplicitRK2 is Heun with adaptive CFL substepping; IMEX treats a stabilized
// constant-coefficient Laplacian implicitly (FFT solve) and the rest explicitly.
SolutionField solve(std::span<const double> u0, const SolveConfig& config, const ForcingFn& forcing);

struct TraceRow {
    double t = 0.0;
    double mass = 0.0;      // int u dx
    double lp = 0.0;        // int |u|^p dx
    double energy = 0.0;    // int a(u) |grad u|^2 dx (face gradients)
};

std::vector<TraceRow> mass_and_energy_trace(const SolutionField& sol, const Nonlinearity& nl,
                                            double p = 2.0);

// Discrete spatial mean of a slice (flux-form conservation diagnostics).
double slice_mean(const Grid& grid, std::span<const double> values);

}  // namespace spmlab
