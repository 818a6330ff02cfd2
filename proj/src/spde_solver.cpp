#include "spmlab/spde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <memory>

#include "spmlab/fft.hpp"
#include "spmlab/model.hpp"
#include "spmlab/numerics.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>

namespace spmlab {

ForcingFn zero_forcing() {
    return [](double, const Grid&, std::span<double> out) {
        std::fill(out.begin(), out.end(), 0.0);
    };
}

ForcingFn make_noise_forcing(const SpectralNoise& noise) {
    if (noise.kind() == NoiseKind::SpaceWhite) {
        // time independent: render once per grid and hold
        auto cache = std::make_shared<std::map<int, std::vector<double>>>();
        auto mutex = std::make_shared<std::mutex>();
        const SpectralNoise* np = &noise;
        return [cache, mutex, np](double, const Grid& grid, std::span<double> out) {
            std::lock_guard<std::mutex> lock(*mutex);
            auto it = cache->find(grid.n);
            if (it == cache->end()) {
                std::vector<double> field(grid.points_per_slice());
                np->render_slice(0.0, grid, field);
                it = cache->emplace(grid.n, std::move(field)).first;
            }
            std::copy(it->second.begin(), it->second.end(), out.begin());
        };
    }
    const SpectralNoise* np = &noise;
    return [np](double t, const Grid& grid, std::span<double> out) {
        np->render_slice(t, grid, out);
    };
}

ForcingFn make_pointwise_forcing(std::function<double(double, double, double)> f) {
    return [f = std::move(f)](double t, const Grid& grid, std::span<double> out) {
        for (int ix = 0; ix < grid.n; ++ix) {
            if (grid.d == 1) {
                out[ix] = f(t, grid.coord(ix), 0.0);
            } else {
                for (int iy = 0; iy < grid.n; ++iy) {
                    out[grid.site(ix, iy)] = f(t, grid.coord(ix), grid.coord(iy));
                }
            }
        }
    };
}

std::span<const double> SolutionField::slice(int m) const {
    const std::size_t pts = grid.points_per_slice();
    return {values.data() + static_cast<std::size_t>(m) * pts, pts};
}

std::span<double> SolutionField::slice(int m) {
    const std::size_t pts = grid.points_per_slice();
    return {values.data() + static_cast<std::size_t>(m) * pts, pts};
}

namespace {

// Precomputed lattice sum S_K = sum_{0<|j|<=K} |k|^{-2}, so C^a = S_K / a.
double counterterm_lattice_sum(int d, int K) {
    if (K <= 0) return 0.0;
    return counterterm_C(d, 1.0, K);
}

struct Workspace {
    std::vector<double> a_of_u;
    std::vector<double> forcing;
    std::vector<double> rhs1, rhs2, stage;
};

void eval_rhs(const Grid& g, const Nonlinearity& nl, double S_K, std::span<const double> u,
              std::span<const double> forcing, std::vector<double>& a_of_u,
              std::span<double> out) {
    const std::size_t pts = g.points_per_slice();
    for (std::size_t i = 0; i < pts; ++i) a_of_u[i] = nl.a(u[i]);
    const double inv_dx2 = static_cast<double>(g.n) * g.n;
    if (g.d == 1) {
        for (int i = 0; i < g.n; ++i) {
            const int l = g.wrap(i - 1), r = g.wrap(i + 1);
            const double a_r = 0.5 * (a_of_u[i] + a_of_u[r]);
            const double a_l = 0.5 * (a_of_u[i] + a_of_u[l]);
            out[i] = inv_dx2 * (a_r * (u[r] - u[i]) - a_l * (u[i] - u[l]));
        }
    } else {
        for (int ix = 0; ix < g.n; ++ix) {
            const int xl = g.wrap(ix - 1), xr = g.wrap(ix + 1);
            for (int iy = 0; iy < g.n; ++iy) {
                const int yl = g.wrap(iy - 1), yr = g.wrap(iy + 1);
                const std::size_t c = g.site(ix, iy);
                const std::size_t e = g.site(xr, iy), w = g.site(xl, iy);
                const std::size_t nn = g.site(ix, yr), ss = g.site(ix, yl);
                const double ac = a_of_u[c];
                double div = (0.5 * (ac + a_of_u[e])) * (u[e] - u[c]) -
                             (0.5 * (ac + a_of_u[w])) * (u[c] - u[w]);
                div += (0.5 * (ac + a_of_u[nn])) * (u[nn] - u[c]) -
                       (0.5 * (ac + a_of_u[ss])) * (u[c] - u[ss]);
                out[c] = inv_dx2 * div;
            }
        }
    }
    for (std::size_t i = 0; i < pts; ++i) {
        const double s = nl.sigma(u[i]);
        if (s != 0.0) {
            out[i] += s * forcing[i];
            if (S_K > 0.0) {
                const double ss = nl.sigma_prime(u[i]) * s;
                if (ss != 0.0) out[i] -= ss * S_K / a_of_u[i];
            }
        }
    }
}

bool all_finite(std::span<const double> v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

// Implicit constant-coefficient solve (I - dt a_sh Lap_h)^{-1} via FFT, using
// the discrete Laplacian symbol -4 sin^2(pi m / n) / dx^2.
class ImexSolver {
public:
    ImexSolver(const Grid& g) : grid_(g) {
        const std::size_t pts = g.points_per_slice();
        buf_.resize(pts);
        std::lock_guard<std::mutex> lock(mutex_);
        fwd_ = g.d == 1 ? fftw_plan_dft_1d(g.n, reinterpret_cast<fftw_complex*>(buf_.data()),
                                           reinterpret_cast<fftw_complex*>(buf_.data()),
                                           FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED)
                        : fftw_plan_dft_2d(g.n, g.n, reinterpret_cast<fftw_complex*>(buf_.data()),
                                           reinterpret_cast<fftw_complex*>(buf_.data()),
                                           FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
        bwd_ = g.d == 1 ? fftw_plan_dft_1d(g.n, reinterpret_cast<fftw_complex*>(buf_.data()),
                                           reinterpret_cast<fftw_complex*>(buf_.data()),
                                           FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED)
                        : fftw_plan_dft_2d(g.n, g.n, reinterpret_cast<fftw_complex*>(buf_.data()),
                                           reinterpret_cast<fftw_complex*>(buf_.data()),
                                           FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    }
    ~ImexSolver() {
        std::lock_guard<std::mutex> lock(mutex_);
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }

    void apply_inverse(double dt_a, std::span<double> u) {
        const int n = grid_.n;
        const std::size_t pts = grid_.points_per_slice();
        for (std::size_t i = 0; i < pts; ++i) buf_[i] = {u[i], 0.0};
        fftw_execute_dft(fwd_, reinterpret_cast<fftw_complex*>(buf_.data()),
                         reinterpret_cast<fftw_complex*>(buf_.data()));
        const double inv_dx2 = static_cast<double>(n) * n;
        auto symbol = [&](int m) {
            const double s = std::sin(M_PI * m / n);
            return 4.0 * s * s * inv_dx2;
        };
        if (grid_.d == 1) {
            for (int m = 0; m < n; ++m) buf_[m] /= (1.0 + dt_a * symbol(m));
        } else {
            for (int mx = 0; mx < n; ++mx) {
                for (int my = 0; my < n; ++my) {
                    buf_[static_cast<std::size_t>(mx) * n + my] /=
                        (1.0 + dt_a * (symbol(mx) + symbol(my)));
                }
            }
        }
        fftw_execute_dft(bwd_, reinterpret_cast<fftw_complex*>(buf_.data()),
                         reinterpret_cast<fftw_complex*>(buf_.data()));
        const double scale = 1.0 / static_cast<double>(pts);
        for (std::size_t i = 0; i < pts; ++i) u[i] = buf_[i].real() * scale;
    }

private:
    Grid grid_;
    std::vector<std::complex<double>> buf_;
    fftw_plan fwd_, bwd_;
    static std::mutex mutex_;
};

std::mutex ImexSolver::mutex_;

}  // namespace

SolutionField solve(std::span<const double> u0, const SolveConfig& config, const ForcingFn& forcing) {
    const Grid& g = config.grid;
    g.validate();
    const std::size_t pts = g.points_per_slice();
    if (u0.size() != pts) throw std::invalid_argument("solve: initial data size mismatch");
    if (config.scheme == Scheme::ExplicitRK2 && config.counterterm_K_max > 0 &&
        config.nl.a_floor() <= 0.0 && config.nl.sigma_kind() == Nonlinearity::SigmaKind::PowerBump) {
        // degenerate a with renormalization drift needs the regularized family
        throw std::invalid_argument("solve: counterterm drift requires a regularized diffusion (a >= a0 > 0)");
    }

    SolutionField sol;
    sol.grid = g;
    sol.scheme = config.scheme;
    sol.counterterm_K_max = config.counterterm_K_max;
    sol.seed = config.seed;
    sol.noise_id = config.noise_id;
    sol.values.assign(g.num_slices() * pts, 0.0);
    std::copy(u0.begin(), u0.end(), sol.values.begin());

    const double S_K = counterterm_lattice_sum(g.d, config.counterterm_K_max);
    Workspace ws;
    ws.a_of_u.resize(pts);
    ws.forcing.resize(pts);
    ws.rhs1.resize(pts);
    ws.rhs2.resize(pts);
    ws.stage.resize(pts);

    std::unique_ptr<ImexSolver> imex;
    if (config.scheme == Scheme::IMEX) imex = std::make_unique<ImexSolver>(g);

    std::vector<double> u(u0.begin(), u0.end());
    double forcing_time = -1.0;
    auto load_forcing = [&](double t) {
        if (t != forcing_time) {
            forcing(t, g, ws.forcing);
            forcing_time = t;
        }
    };

    for (int m = 0; m < g.n_t; ++m) {
        const double t0 = m * g.dt;
        if (config.scheme == Scheme::ExplicitRK2) {
            double max_a = 0.0;
            for (double v : u) max_a = std::max(max_a, config.nl.a(v));
            max_a = std::max(max_a, 1e-300);
            const double dt_stable = config.cfl_safety * g.dx() * g.dx() / max_a;
            int halvings = 0;
            while ((g.dt / std::ldexp(1.0, halvings)) > dt_stable && halvings <= config.max_halvings) {
                ++halvings;
            }
            if (halvings > config.max_halvings) {
                throw NumericalAbort("solve: CFL halving budget exhausted at t=" + std::to_string(t0));
            }
            const int n_sub = 1 << halvings;
            const double h = g.dt / n_sub;
            for (int sub = 0; sub < n_sub; ++sub) {
                const double t = t0 + sub * h;
                load_forcing(t);
                eval_rhs(g, config.nl, S_K, u, ws.forcing, ws.a_of_u, ws.rhs1);
                for (std::size_t i = 0; i < pts; ++i) ws.stage[i] = u[i] + h * ws.rhs1[i];
                load_forcing(t + h);
                eval_rhs(g, config.nl, S_K, ws.stage, ws.forcing, ws.a_of_u, ws.rhs2);
                for (std::size_t i = 0; i < pts; ++i) {
                    u[i] += 0.5 * h * (ws.rhs1[i] + ws.rhs2[i]);
                }
            }
        } else {
            // stabilized splitting: shift by the current max diffusivity
            double max_a = 0.0;
            for (double v : u) max_a = std::max(max_a, config.nl.a(v));
            max_a = std::max(max_a, config.nl.a_floor());
            load_forcing(t0);
            eval_rhs(g, config.nl, S_K, u, ws.forcing, ws.a_of_u, ws.rhs1);
            const double inv_dx2 = static_cast<double>(g.n) * g.n;
            // rhs1 already contains div(a grad u) + forcing; add the shift
            // -a_sh Lap u explicitly, then invert (I - dt a_sh Lap).
            if (g.d == 1) {
                for (int i = 0; i < g.n; ++i) {
                    const double lap =
                        (u[g.wrap(i + 1)] - 2.0 * u[i] + u[g.wrap(i - 1)]) * inv_dx2;
                    ws.stage[i] = u[i] + g.dt * (ws.rhs1[i] - max_a * lap);
                }
            } else {
                for (int ix = 0; ix < g.n; ++ix) {
                    for (int iy = 0; iy < g.n; ++iy) {
                        const std::size_t c = g.site(ix, iy);
                        const double lap = (u[g.site(g.wrap(ix + 1), iy)] + u[g.site(g.wrap(ix - 1), iy)] +
                                            u[g.site(ix, g.wrap(iy + 1))] + u[g.site(ix, g.wrap(iy - 1))] -
                                            4.0 * u[c]) *
                                           inv_dx2;
                        ws.stage[c] = u[c] + g.dt * (ws.rhs1[c] - max_a * lap);
                    }
                }
            }
            imex->apply_inverse(g.dt * max_a, ws.stage);
            std::copy(ws.stage.begin(), ws.stage.end(), u.begin());
        }
        if (!all_finite(u)) {
            throw NumericalAbort("solve: NaN/Inf detected at t=" + std::to_string(t0 + g.dt));
        }
        std::copy(u.begin(), u.end(), sol.slice(m + 1).begin());
    }
    return sol;
}

std::vector<TraceRow> mass_and_energy_trace(const SolutionField& sol, const Nonlinearity& nl,
                                            double p) {
    const Grid& g = sol.grid;
    const double cell = std::pow(g.dx(), g.d);
    std::vector<TraceRow> rows;
    rows.reserve(g.num_slices());
    for (int m = 0; m <= g.n_t; ++m) {
        auto u = sol.slice(m);
        TraceRow row;
        row.t = m * g.dt;
        PairwiseAccumulator mass, lp, energy;
        const double inv_dx2 = static_cast<double>(g.n) * g.n;
        for (int ix = 0; ix < g.n; ++ix) {
            if (g.d == 1) {
                mass.add(u[ix]);
                lp.add(std::pow(std::abs(u[ix]), p));
                const double du = u[g.wrap(ix + 1)] - u[ix];
                energy.add(0.5 * (nl.a(u[ix]) + nl.a(u[g.wrap(ix + 1)])) * du * du * inv_dx2);
            } else {
                for (int iy = 0; iy < g.n; ++iy) {
                    const std::size_t c = g.site(ix, iy);
                    mass.add(u[c]);
                    lp.add(std::pow(std::abs(u[c]), p));
                    const double dux = u[g.site(g.wrap(ix + 1), iy)] - u[c];
                    const double duy = u[g.site(ix, g.wrap(iy + 1))] - u[c];
                    energy.add(0.5 * (nl.a(u[c]) + nl.a(u[g.site(g.wrap(ix + 1), iy)])) * dux * dux * inv_dx2);
                    energy.add(0.5 * (nl.a(u[c]) + nl.a(u[g.site(ix, g.wrap(iy + 1))])) * duy * duy * inv_dx2);
                }
            }
        }
        row.mass = mass.total() * cell;
        row.lp = lp.total() * cell;
        row.energy = energy.total() * cell;
        rows.push_back(row);
    }
    return rows;
}

double slice_mean(const Grid& grid, std::span<const double> values) {
    PairwiseAccumulator acc;
    for (double v : values) acc.add(v);
    return acc.total() / static_cast<double>(grid.points_per_slice());
}

namespace {
constexpr std::uint64_t kSlabMagic = 0x534c414253504dULL;  // "SLABSPM"
}

void SolutionField::save(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("SolutionField::save: cannot open " + path);
    const std::uint64_t magic = kSlabMagic;
    const std::int32_t d = grid.d, n = grid.n, n_t = grid.n_t;
    const std::int32_t sch = scheme == Scheme::ExplicitRK2 ? 0 : 1;
    const std::int32_t K = counterterm_K_max;
    std::fwrite(&magic, sizeof magic, 1, f);
    std::fwrite(&d, sizeof d, 1, f);
    std::fwrite(&n, sizeof n, 1, f);
    std::fwrite(&grid.dt, sizeof grid.dt, 1, f);
    std::fwrite(&n_t, sizeof n_t, 1, f);
    std::fwrite(&sch, sizeof sch, 1, f);
    std::fwrite(&K, sizeof K, 1, f);
    std::fwrite(&seed, sizeof seed, 1, f);
    const std::uint64_t nv = values.size();
    std::fwrite(&nv, sizeof nv, 1, f);
    std::fwrite(values.data(), sizeof(double), values.size(), f);
    std::fclose(f);
}

SolutionField SolutionField::load(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) throw std::runtime_error("SolutionField::load: cannot open " + path);
    auto read = [&](void* p, std::size_t sz, std::size_t n) {
        if (std::fread(p, sz, n, f) != n) {
            std::fclose(f);
            throw std::runtime_error("SolutionField::load: truncated file " + path);
        }
    };
    std::uint64_t magic = 0;
    read(&magic, sizeof magic, 1);
    if (magic != kSlabMagic) {
        std::fclose(f);
        throw std::runtime_error("SolutionField::load: not a trajectory slab: " + path);
    }
    SolutionField sol;
    std::int32_t d = 0, n = 0, n_t = 0, sch = 0, K = 0;
    read(&d, sizeof d, 1);
    read(&n, sizeof n, 1);
    read(&sol.grid.dt, sizeof sol.grid.dt, 1);
    read(&n_t, sizeof n_t, 1);
    read(&sch, sizeof sch, 1);
    read(&K, sizeof K, 1);
    read(&sol.seed, sizeof sol.seed, 1);
    sol.grid.d = d;
    sol.grid.n = n;
    sol.grid.n_t = n_t;
    sol.scheme = sch == 0 ? Scheme::ExplicitRK2 : Scheme::IMEX;
    sol.counterterm_K_max = K;
    std::uint64_t nv = 0;
    read(&nv, sizeof nv, 1);
    sol.values.resize(nv);
    read(sol.values.data(), sizeof(double), nv);
    std::fclose(f);
    return sol;
}

}  // namespace spmlab
