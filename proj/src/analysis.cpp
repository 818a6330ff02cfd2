#include "spmlab/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spmlab/numerics.hpp"
#include "spmlab/torus_grid.hpp"

namespace spmlab {

namespace {

// 4th-order central difference along one axis.
double fd4(const Grid& g, std::span<const double> u, int ix, int iy, int axis) {
    auto at = [&](int dx, int dy) { return u[g.site(g.wrap(ix + dx), g.wrap(iy + dy))]; };
    const double inv = g.n / 12.0;
    if (axis == 0) return (-at(2, 0) + 8.0 * at(1, 0) - 8.0 * at(-1, 0) + at(-2, 0)) * inv;
    return (-at(0, 2) + 8.0 * at(0, 1) - 8.0 * at(0, -1) + at(0, -2)) * inv;
}

}  // namespace

GubinelliField gubinelli_nu(const SolutionField& sol, const Nonlinearity& nl,
                            const ModelEvaluator* model, int threads) {
    const Grid& g = sol.grid;
    GubinelliField out;
    out.grid = g;
    const std::size_t pts = g.points_per_slice();
    const std::size_t total = g.num_slices() * pts;
    out.nu_x.assign(total, 0.0);
    out.fd_grad_x.assign(total, 0.0);
    out.model_grad_x.assign(total, 0.0);
    if (g.d == 2) {
        out.nu_y.assign(total, 0.0);
        out.fd_grad_y.assign(total, 0.0);
        out.model_grad_y.assign(total, 0.0);
    }
    const bool use_model = model != nullptr && nl.sigma_kind() != Nonlinearity::SigmaKind::Zero;

    parallel_for(
        g.num_slices(),
        [&](std::size_t mi) {
            const int m = static_cast<int>(mi);
            const double t = m * g.dt;
            auto u = sol.slice(m);
            for (int ix = 0; ix < g.n; ++ix) {
                for (int iy = 0; iy < (g.d == 2 ? g.n : 1); ++iy) {
                    const std::size_t c = g.site(ix, iy);
                    const std::size_t idx = out.index(m, c);
                    const double gx = fd4(g, u, ix, iy, 0);
                    const double gy = g.d == 2 ? fd4(g, u, ix, iy, 1) : 0.0;
                    out.fd_grad_x[idx] = gx;
                    if (g.d == 2) out.fd_grad_y[idx] = gy;
                    double mgx = 0.0, mgy = 0.0;
                    if (use_model && t > 0.0) {
                        const double s = nl.sigma(u[c]);
                        if (s != 0.0) {
                            SpaceTimePoint p = SpaceTimePoint::make(t, g.coord(ix), g.d,
                                                                    g.d == 2 ? g.coord(iy) : 0.0);
                            const auto mg = model->lolly_gradient(nl.a(u[c]), p);
                            mgx = mg[0];
                            mgy = mg[1];
                        }
                    }
                    out.model_grad_x[idx] = mgx;
                    if (g.d == 2) out.model_grad_y[idx] = mgy;
                    const double s = use_model ? nl.sigma(u[c]) : 0.0;
                    out.nu_x[idx] = gx - s * mgx;
                    if (g.d == 2) out.nu_y[idx] = gy - s * mgy;
                }
            }
        },
        threads);
    return out;
}

double Shift::norm(const Grid& g) const {
    const double xs[2] = {dj1 * g.dx(), dj2 * g.dx()};
    return parabolic_norm_raw(dm * g.dt, xs, g.d);
}

std::vector<Shift> make_shift_set(const Grid& grid, double R) {
    std::vector<Shift> shifts;
    // purely spatial: dyadic lattice steps
    for (int dj = 1; dj * grid.dx() <= R && dj < grid.n / 2; dj *= 2) {
        shifts.push_back({0, dj, 0});
    }
    // purely temporal
    for (int dm = 1; std::sqrt(dm * grid.dt) <= R && dm <= grid.n_t; dm *= 2) {
        shifts.push_back({dm, 0, 0});
    }
    // diagonal parabolic: dm*dt ~ (dj*dx)^2
    for (int dj = 1; dj * grid.dx() <= R / std::sqrt(2.0) && dj < grid.n / 2; dj *= 2) {
        const int dm = std::max(1, static_cast<int>(std::round(dj * grid.dx() * dj * grid.dx() / grid.dt)));
        if (dm <= grid.n_t) shifts.push_back({dm, dj, grid.d == 2 ? dj : 0});
    }
    return shifts;
}

namespace {

SeminormReport finalize_report(SeminormKind kind, double R, double exponent,
                               std::vector<SeminormSample> samples) {
    SeminormReport report;
    report.kind = kind;
    report.R = R;
    report.exponent = exponent;
    report.samples = std::move(samples);
    std::vector<double> lx, ly;
    for (const auto& s : report.samples) {
        if (s.value > 0.0 && s.magnitude > 0.0) {
            report.sup_ratio = std::max(report.sup_ratio, s.value / std::pow(s.magnitude, exponent));
            lx.push_back(std::log(s.magnitude));
            ly.push_back(std::log(s.value));
        }
    }
    if (lx.size() >= 2) {
        const LineFit fit = fit_line(lx, ly);
        report.fitted_slope = fit.slope;
        report.fitted_stderr = fit.stderr_slope;
    }
    return report;
}

}  // namespace

SeminormReport besov_seminorm(const SolutionField& sol, double alpha, double R,
                              std::span<const Shift> shifts) {
    const Grid& g = sol.grid;
    const double cell = g.dt * std::pow(g.dx(), g.d);
    std::vector<SeminormSample> samples;
    for (const Shift& sh : shifts) {
        const int m_lo = std::max(0, -sh.dm);
        const int m_hi = std::min(g.n_t, g.n_t - sh.dm);
        if (m_lo > m_hi) throw std::invalid_argument("besov_seminorm: empty domain for shift");
        PairwiseAccumulator acc;
        for (int m = m_lo; m <= m_hi; ++m) {
            auto u0 = sol.slice(m);
            auto u1 = sol.slice(m + sh.dm);
            PairwiseAccumulator slice;
            for (int ix = 0; ix < g.n; ++ix) {
                const int jx = g.wrap(ix + sh.dj1);
                if (g.d == 1) {
                    slice.add(std::abs(u1[jx] - u0[ix]));
                } else {
                    for (int iy = 0; iy < g.n; ++iy) {
                        slice.add(std::abs(u1[g.site(jx, g.wrap(iy + sh.dj2))] - u0[g.site(ix, iy)]));
                    }
                }
            }
            acc.add(slice.total());
        }
        samples.push_back({sh.norm(g), acc.total() * cell});
    }
    return finalize_report(SeminormKind::BesovAlpha, R, alpha, std::move(samples));
}

namespace {

struct ModelTermEvaluator {
    const SolutionField& sol;
    const Nonlinearity& nl;
    const ModelEvaluator* model;
    std::optional<double> delta_cutoff;

    bool active() const {
        return model != nullptr && nl.sigma_kind() != Nonlinearity::SigmaKind::Zero;
    }
    // sigma(u(x)) Pi_x[lolly; a(u(x))](x + y), optionally phi^> weighted.
    double operator()(int m, int ix, int iy, const Shift& sh) const {
        if (!active()) return 0.0;
        const Grid& g = sol.grid;
        const double u_base = sol.value(m, ix, iy);
        const double s = nl.sigma(u_base);
        if (s == 0.0) return 0.0;
        const double a = nl.a(u_base);
        double weight = 1.0;
        if (delta_cutoff) {
            weight = phi_greater(a / *delta_cutoff);
            if (weight == 0.0) return 0.0;
        }
        const double t = m * g.dt;
        SpaceTimePoint base = SpaceTimePoint::make(t, g.coord(ix), g.d, g.d == 2 ? g.coord(iy) : 0.0);
        SpaceTimePoint eval = SpaceTimePoint::make(
            t + sh.dm * g.dt, g.coord(ix) + sh.dj1 * g.dx(), g.d,
            g.d == 2 ? g.coord(iy) + sh.dj2 * g.dx() : 0.0);
        return weight * s * model->lolly(a, base, eval);
    }
};

}  // namespace

double modelledness_pointwise(const SolutionField& sol, const Nonlinearity& nl,
                              const ModelEvaluator* model, const GubinelliField& nu, int m, int ix,
                              int iy, const Shift& shift) {
    const Grid& g = sol.grid;
    ModelTermEvaluator term{sol, nl, model, std::nullopt};
    const std::size_t idx = nu.index(m, g.site(ix, iy));
    const double increment = sol.value(m + shift.dm, g.wrap(ix + shift.dj1), g.wrap(iy + shift.dj2)) -
                             sol.value(m, ix, iy);
    double affine = nu.nu_x[idx] * shift.dj1 * g.dx();
    if (g.d == 2) affine += nu.nu_y[idx] * shift.dj2 * g.dx();
    return increment - term(m, ix, iy, shift) - affine;
}

SeminormReport modelledness_seminorm(const SolutionField& sol, const Nonlinearity& nl,
                                     const ModelEvaluator* model, const GubinelliField& nu,
                                     double beta, double R, std::span<const Shift> shifts,
                                     std::optional<double> delta_cutoff, int threads) {
    const Grid& g = sol.grid;
    const double cell = g.dt * std::pow(g.dx(), g.d);
    ModelTermEvaluator term{sol, nl, model, delta_cutoff};
    std::vector<SeminormSample> samples(shifts.size());

    for (const Shift& sh : shifts) {
        if (std::abs(sh.dm) > g.n_t) {
            throw std::invalid_argument("modelledness_seminorm: empty domain for shift");
        }
    }

    // Large-velocity variant: precompute the u^> trajectory and
    // nu^> = grad u^> - sigma(u) phi^>(a/delta) grad Pi, with the same
    // discrete gradient stencil as the plain nu.
    const SolutionField* field = &sol;
    SolutionField greater;
    std::vector<double> nu_gx, nu_gy;
    if (delta_cutoff) {
        const double d = *delta_cutoff;
        greater.grid = g;
        greater.values.resize(sol.values.size());
        parallel_for(
            sol.values.size(),
            [&](std::size_t i) {
                greater.values[i] = sol.values[i] - split_scalar(sol.values[i], nl, d);
            },
            threads);
        field = &greater;
        nu_gx.resize(sol.values.size());
        if (g.d == 2) nu_gy.resize(sol.values.size());
        parallel_for(
            g.num_slices(),
            [&](std::size_t mi) {
                const int m = static_cast<int>(mi);
                auto ug = greater.slice(m);
                for (int ix = 0; ix < g.n; ++ix) {
                    for (int iy = 0; iy < (g.d == 2 ? g.n : 1); ++iy) {
                        const std::size_t idx = nu.index(m, g.site(ix, iy));
                        const double w = phi_greater(nl.a(sol.value(m, ix, iy)) / d);
                        const double sigma_grad_x = nu.fd_grad_x[idx] - nu.nu_x[idx];
                        nu_gx[idx] = fd4(g, ug, ix, iy, 0) - w * sigma_grad_x;
                        if (g.d == 2) {
                            const double sigma_grad_y = nu.fd_grad_y[idx] - nu.nu_y[idx];
                            nu_gy[idx] = fd4(g, ug, ix, iy, 1) - w * sigma_grad_y;
                        }
                    }
                }
            },
            threads);
    }

    parallel_for(
        shifts.size(),
        [&](std::size_t si) {
            const Shift& sh = shifts[si];
            const int m_lo = std::max(0, -sh.dm);
            const int m_hi = std::min(g.n_t, g.n_t - sh.dm);
            PairwiseAccumulator acc;
            for (int m = m_lo; m <= m_hi; ++m) {
                PairwiseAccumulator slice;
                for (int ix = 0; ix < g.n; ++ix) {
                    for (int iy = 0; iy < (g.d == 2 ? g.n : 1); ++iy) {
                        const std::size_t idx = nu.index(m, g.site(ix, iy));
                        const double increment =
                            field->value(m + sh.dm, g.wrap(ix + sh.dj1), g.wrap(iy + sh.dj2)) -
                            field->value(m, ix, iy);
                        double affine;
                        if (!delta_cutoff) {
                            affine = nu.nu_x[idx] * sh.dj1 * g.dx() +
                                     (g.d == 2 ? nu.nu_y[idx] * sh.dj2 * g.dx() : 0.0);
                        } else {
                            affine = nu_gx[idx] * sh.dj1 * g.dx() +
                                     (g.d == 2 ? nu_gy[idx] * sh.dj2 * g.dx() : 0.0);
                        }
                        slice.add(std::abs(increment - term(m, ix, iy, sh) - affine));
                    }
                }
                acc.add(slice.total());
            }
            samples[si] = {sh.norm(g), acc.total() * cell};
        },
        threads);
    return finalize_report(delta_cutoff ? SeminormKind::LargeVel2Alpha : SeminormKind::ModelledBeta,
                           R, beta, std::move(samples));
}

namespace {

// Spatial stencil library for the zeta test: smooth shapes sampled on the
// lattice window and discretely orthogonalized against {1, y_1, .., y_d} so
// the discrete moments vanish to rounding.
struct ZetaStencil {
    int half = 0;  // window [-half, half]^d in lattice units
    std::vector<double> w;
    double quad_weight = 0.0;       // (dx/lambda)^d Riemann weight per node
    double second_moment_x1 = 0.0;  // sum of w * w1^2 * quad_weight (rescaled coords)
};

double radial_unit_bump(double q) { return q < 1.0 ? std::exp(1.0 / (q - 1.0)) : 0.0; }

std::vector<ZetaStencil> make_zeta_library(const Grid& g, double lambda) {
    const int half = std::max(2, static_cast<int>(std::floor(lambda * g.n)));
    const int d = g.d;
    const int side = 2 * half + 1;
    const std::size_t size = d == 1 ? side : static_cast<std::size_t>(side) * side;
    const double dx = g.dx();

    auto offset = [&](std::size_t idx, int axis) {
        const int o = d == 1 ? static_cast<int>(idx) - half
                             : (axis == 0 ? static_cast<int>(idx) / side - half
                                          : static_cast<int>(idx) % side - half);
        return o * dx / lambda;  // rescaled coordinate in [-1, 1]
    };

    auto shape = [&](std::size_t idx, int which) -> double {
        const double w1 = offset(idx, 0);
        const double w2 = d == 2 ? offset(idx, 1) : 0.0;
        const double q = w1 * w1 + w2 * w2;
        auto dil = [&](double c) { return std::pow(c, d) * radial_unit_bump(c * c * q); };
        switch (which) {
            case 0: return dil(2.0) - dil(1.0);
            case 1: return dil(4.0) - dil(2.0);
            case 2: {  // d1^2 of the radial bump
                if (q >= 1.0) return 0.0;
                const double gg = 1.0 / (q - 1.0);
                const double b = radial_unit_bump(q);
                const double b1 = -gg * gg * b;
                const double b2 = (2.0 * gg * gg * gg + gg * gg * gg * gg) * b;
                return 4.0 * w1 * w1 * b2 + 2.0 * b1;
            }
            case 3: {
                if (d == 1) return dil(8.0) - dil(4.0);
                if (q >= 1.0) return 0.0;
                const double gg = 1.0 / (q - 1.0);
                const double b = radial_unit_bump(q);
                const double b1 = -gg * gg * b;
                const double b2 = (2.0 * gg * gg * gg + gg * gg * gg * gg) * b;
                return 4.0 * w2 * w2 * b2 + 2.0 * b1;
            }
            default: {  // mixed second derivative (d=2), higher wavelet (d=1)
                if (d == 1) return dil(16.0) - dil(8.0);
                if (q >= 1.0) return 0.0;
                const double gg = 1.0 / (q - 1.0);
                const double b = radial_unit_bump(q);
                const double b2 = (2.0 * gg * gg * gg + gg * gg * gg * gg) * b;
                return 4.0 * w1 * w2 * b2;
            }
        }
    };

    std::vector<ZetaStencil> library;
    for (int which = 0; which < 5; ++which) {
        ZetaStencil st;
        st.half = half;
        st.w.resize(size);
        for (std::size_t i = 0; i < size; ++i) st.w[i] = shape(i, which);
        // discrete Gram-Schmidt against 1, y_1 (, y_2)
        std::vector<std::vector<double>> basis;
        basis.emplace_back(size, 1.0);
        basis.emplace_back(size);
        for (std::size_t i = 0; i < size; ++i) basis[1][i] = offset(i, 0);
        if (d == 2) {
            basis.emplace_back(size);
            for (std::size_t i = 0; i < size; ++i) basis[2][i] = offset(i, 1);
        }
        for (auto& b : basis) {
            double bb = 0.0, bw = 0.0;
            for (std::size_t i = 0; i < size; ++i) {
                bb += b[i] * b[i];
                bw += b[i] * st.w[i];
            }
            if (bb > 0.0) {
                const double c = bw / bb;
                for (std::size_t i = 0; i < size; ++i) st.w[i] -= c * b[i];
            }
        }
        // orthogonalize later basis vectors against earlier ones is skipped:
        // 1, y1, y2 are already discretely orthogonal on the symmetric window
        double sup = 0.0;
        for (double v : st.w) sup = std::max(sup, std::abs(v));
        if (sup > 0.0) {
            for (double& v : st.w) v /= sup;
        }
        st.quad_weight = std::pow(dx / lambda, d);
        for (std::size_t i = 0; i < size; ++i) {
            const double w1 = offset(i, 0);
            st.second_moment_x1 += st.w[i] * w1 * w1 * st.quad_weight;
        }
        library.push_back(std::move(st));
    }
    return library;
}

}  // namespace

std::vector<double> zeta_library_second_moments(const Grid& grid, double lambda) {
    std::vector<double> moments;
    for (const auto& st : make_zeta_library(grid, lambda)) {
        moments.push_back(st.second_moment_x1);
    }
    return moments;
}

ZetaTestReport zeta_test_seminorm(const SolutionField& sol, const Nonlinearity& nl,
                                  const ModelEvaluator* model, double gamma, double R,
                                  std::span<const double> lambdas, int threads) {
    const Grid& g = sol.grid;
    for (double lambda : lambdas) {
        if (lambda * g.n < 4.0) {
            throw std::invalid_argument("zeta_test_seminorm: scale under-resolved (need lambda*n >= 4)");
        }
    }
    const double cell_st = g.dt * std::pow(g.dx(), g.d);
    const bool with_model = model != nullptr && nl.sigma_kind() != Nonlinearity::SigmaKind::Zero;

    // u_x(z) - u_x(z') differences only ever need U at two points; the base
    // subtraction of the lolly cancels.
    auto recentered_diff = [&](int m, int ix, int iy, const Shift& sh) {
        const double t = m * g.dt;
        const double u_full = sol.value(m + sh.dm, g.wrap(ix + sh.dj1), g.wrap(iy + sh.dj2));
        const double u_spatial = sol.value(m, g.wrap(ix + sh.dj1), g.wrap(iy + sh.dj2));
        double diff = u_full - u_spatial;
        if (with_model) {
            const double ub = sol.value(m, ix, iy);
            const double s = nl.sigma(ub);
            if (s != 0.0) {
                const double a = nl.a(ub);
                SpaceTimePoint full = SpaceTimePoint::make(
                    t + sh.dm * g.dt, g.coord(ix) + sh.dj1 * g.dx(), g.d,
                    g.d == 2 ? g.coord(iy) + sh.dj2 * g.dx() : 0.0);
                SpaceTimePoint spatial = SpaceTimePoint::make(
                    t, g.coord(ix) + sh.dj1 * g.dx(), g.d,
                    g.d == 2 ? g.coord(iy) + sh.dj2 * g.dx() : 0.0);
                diff -= s * (model->lolly_unrecentered(a, full) - model->lolly_unrecentered(a, spatial));
            }
        }
        return diff;
    };

    // term A: shifts with a temporal component
    std::vector<Shift> shifts;
    for (const Shift& sh : make_shift_set(g, R)) {
        if (sh.dm > 0) shifts.push_back(sh);
    }
    std::vector<SeminormSample> a_samples(shifts.size());
    parallel_for(
        shifts.size(),
        [&](std::size_t si) {
            const Shift& sh = shifts[si];
            const int m_hi = g.n_t - sh.dm;
            PairwiseAccumulator acc;
            for (int m = 0; m <= m_hi; ++m) {
                PairwiseAccumulator slice;
                for (int ix = 0; ix < g.n; ++ix) {
                    for (int iy = 0; iy < (g.d == 2 ? g.n : 1); ++iy) {
                        slice.add(std::abs(recentered_diff(m, ix, iy, sh)));
                    }
                }
                acc.add(slice.total());
            }
            a_samples[si] = {sh.norm(g), acc.total() * cell_st};
        },
        threads);

    // term B: spatial pairings against the moment-killed library
    std::vector<SeminormSample> b_samples(lambdas.size());
    parallel_for(
        lambdas.size(),
        [&](std::size_t li) {
            const double lambda = lambdas[li];
            const auto library = make_zeta_library(g, lambda);
            const double cell = std::pow(g.dx(), g.d);
            double best = 0.0;
            for (const auto& st : library) {
                PairwiseAccumulator acc;
                const int side = 2 * st.half + 1;
                for (int m = 0; m <= g.n_t; ++m) {
                    const double t = m * g.dt;
                    auto u = sol.slice(m);
                    PairwiseAccumulator slice;
                    for (int ix = 0; ix < g.n; ++ix) {
                        for (int iy = 0; iy < (g.d == 2 ? g.n : 1); ++iy) {
                            // <u_x(t, .), zeta_x^lambda> with u_x recentring:
                            // the lolly enters at per-base (a, sigma)
                            const double ub = u[g.site(ix, iy)];
                            const double s = with_model ? nl.sigma(ub) : 0.0;
                            const double a = s != 0.0 ? nl.a(ub) : 1.0;
                            double pairing = 0.0;
                            for (int o1 = -st.half; o1 <= st.half; ++o1) {
                                for (int o2 = -(g.d == 2 ? st.half : 0); o2 <= (g.d == 2 ? st.half : 0); ++o2) {
                                    const double w =
                                        g.d == 1 ? st.w[o1 + st.half]
                                                 : st.w[static_cast<std::size_t>(o1 + st.half) * side +
                                                        (o2 + st.half)];
                                    if (w == 0.0) continue;
                                    double val = u[g.site(g.wrap(ix + o1), g.wrap(iy + o2))];
                                    if (s != 0.0 && t > 0.0) {
                                        SpaceTimePoint p = SpaceTimePoint::make(
                                            t, g.coord(ix) + o1 * g.dx(), g.d,
                                            g.d == 2 ? g.coord(iy) + o2 * g.dx() : 0.0);
                                        val -= s * model->lolly_unrecentered(a, p);
                                    }
                                    pairing += w * val;
                                }
                            }
                            slice.add(std::abs(pairing) * st.quad_weight * cell);
                        }
                    }
                    acc.add(slice.total() * g.dt);
                }
                best = std::max(best, acc.total());
            }
            b_samples[li] = {lambda, best};
        },
        threads);

    ZetaTestReport report;
    report.time_increments =
        finalize_report(SeminormKind::ZetaTest, R, gamma, std::move(a_samples));
    report.spatial_pairings =
        finalize_report(SeminormKind::ZetaTest, R, gamma, std::move(b_samples));
    return report;
}

double renormalized_measure_identity(const SolutionField& sol, const Nonlinearity& nl,
                                     const GubinelliField& nu, int counterterm_K_max) {
    const Grid& g = sol.grid;
    double worst = 0.0;
    for (int m = 0; m <= g.n_t; ++m) {
        const double t = m * g.dt;
        auto u = sol.slice(m);
        for (std::size_t c = 0; c < g.points_per_slice(); ++c) {
            const std::size_t idx = nu.index(m, c);
            const double a = nl.a(u[c]);
            const double s = nl.sigma(u[c]);
            const double cch = counterterm_K_max > 0 && s != 0.0
                                   ? counterterm_cherry(g.d, a, t, counterterm_K_max)
                                   : 0.0;
            const double gx = nu.fd_grad_x[idx];
            const double gy = g.d == 2 ? nu.fd_grad_y[idx] : 0.0;
            const double nx = nu.nu_x[idx];
            const double ny = g.d == 2 ? nu.nu_y[idx] : 0.0;
            const double px = nu.model_grad_x[idx];
            const double py = g.d == 2 ? nu.model_grad_y[idx] : 0.0;
            const double lhs = a * ((gx * gx + gy * gy) - s * s * cch);
            const double rhs = a * (nx * nx + ny * ny) + 2.0 * a * s * (px * nx + py * ny) +
                               a * s * s * ((px * px + py * py) - cch);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
    }
    return worst;
}

EnergyLedger energy_report(const SolutionField& sol, const Nonlinearity& nl,
                           const ModelEvaluator* model, const GubinelliField& nu, double p,
                           const ForcingFn& forcing, int counterterm_K_max) {
    if (!(p > 1.0)) throw std::invalid_argument("energy_report: requires p > 1");
    const Grid& g = sol.grid;
    const double cell = std::pow(g.dx(), g.d);
    const bool with_model = model != nullptr && nl.sigma_kind() != Nonlinearity::SigmaKind::Zero;

    auto g_prime = [p](double v) { return std::pow(std::abs(v), p - 2.0); };
    auto g_fn = [p](double v) {
        return (v >= 0.0 ? 1.0 : -1.0) * std::pow(std::abs(v), p - 1.0) / (p - 1.0);
    };
    auto G_fn = [p](double v) { return std::pow(std::abs(v), p) / (p * (p - 1.0)); };

    EnergyLedger ledger;
    {
        PairwiseAccumulator gi, gf;
        auto u0 = sol.slice(0);
        auto uT = sol.slice(g.n_t);
        for (std::size_t c = 0; c < g.points_per_slice(); ++c) {
            gi.add(G_fn(u0[c]));
            gf.add(G_fn(uT[c]));
        }
        ledger.G_initial = gi.total() * cell;
        ledger.G_final = gf.total() * cell;
    }

    std::vector<double> xi(g.points_per_slice());
    PairwiseAccumulator dissipation, forcing_term, cherry_term, ct_difference, ct_time;
    for (int m = 0; m <= g.n_t; ++m) {
        const double t = m * g.dt;
        const double tw = ((m == 0 || m == g.n_t) ? 0.5 : 1.0) * g.dt;
        forcing(t, g, xi);
        auto u = sol.slice(m);
        PairwiseAccumulator dis, frc, chr, ctd, ctt;
        for (std::size_t c = 0; c < g.points_per_slice(); ++c) {
            const std::size_t idx = nu.index(m, c);
            const double uv = u[c];
            const double a = nl.a(uv);
            const double s = nl.sigma(uv);
            const double gp = uv == 0.0 ? 0.0 : g_prime(uv);
            const double nx = nu.nu_x[idx];
            const double ny = g.d == 2 ? nu.nu_y[idx] : 0.0;
            dis.add(gp * a * (nx * nx + ny * ny));
            if (s != 0.0) {
                double c_dumb = 0.0, c_cherry = 0.0, C_a = 0.0;
                if (counterterm_K_max > 0) {
                    c_dumb = counterterm_dumb(g.d, a, t, counterterm_K_max);
                    c_cherry = counterterm_cherry(g.d, a, t, counterterm_K_max);
                    C_a = counterterm_C(g.d, a, counterterm_K_max);
                }
                const double gv = g_fn(uv);
                frc.add(gv * s * xi[c] - (gp * s + gv * nl.sigma_prime(uv)) * s * c_dumb);
                if (with_model) {
                    const double px = nu.model_grad_x[idx];
                    const double py = g.d == 2 ? nu.model_grad_y[idx] : 0.0;
                    const double cherry_diag = (px * px + py * py) - c_cherry;
                    chr.add(-(gp * a * s) * (s * cherry_diag + 2.0 * (px * nx + py * ny)));
                }
                ctd.add(gp * s * s * (c_dumb - a * c_cherry));
                ctt.add(gv * nl.sigma_prime(uv) * s * (c_dumb - C_a));
            }
        }
        dissipation.add(tw * dis.total());
        forcing_term.add(tw * frc.total());
        cherry_term.add(tw * chr.total());
        ct_difference.add(tw * ctd.total());
        ct_time.add(tw * ctt.total());
    }
    ledger.dissipation = dissipation.total() * cell;
    ledger.forcing_term = forcing_term.total() * cell;
    ledger.cherry_term = cherry_term.total() * cell;
    ledger.ct_difference = ct_difference.total() * cell;
    ledger.ct_time = ct_time.total() * cell;
    return ledger;
}

KFunctionalResult k_functional_core(std::span<const double> deltas,
                                    std::span<const double> small_norm,
                                    std::span<const double> large_mod,
                                    std::span<const double> lambdas, double two_alpha) {
    if (deltas.size() != small_norm.size() || deltas.size() != large_mod.size() || deltas.empty()) {
        throw std::invalid_argument("k_functional_core: table size mismatch");
    }
    KFunctionalResult result;
    std::vector<double> ll, ld, lk;
    for (double lambda : lambdas) {
        const double w = std::pow(lambda, two_alpha);
        double best = small_norm[0] + w * large_mod[0];
        std::size_t best_i = 0;
        for (std::size_t i = 1; i < deltas.size(); ++i) {
            const double k = small_norm[i] + w * large_mod[i];
            if (k < best) {
                best = k;
                best_i = i;
            }
        }
        result.rows.push_back({lambda, deltas[best_i], best});
        if (best > 0.0) {
            ll.push_back(std::log(lambda));
            ld.push_back(std::log(deltas[best_i]));
            lk.push_back(std::log(best));
        }
    }
    if (ll.size() >= 2) {
        result.argmin_slope = fit_line(ll, ld).slope;
        result.k_slope = fit_line(ll, lk).slope;
    }
    return result;
}

KFunctionalResult k_functional_interpolation(const SolutionField& sol, const Nonlinearity& nl,
                                             const ModelEvaluator* model, const GubinelliField& nu,
                                             std::span<const double> lambdas, double alpha,
                                             double eps, std::span<const double> deltas,
                                             double R, int threads) {
    const Grid& g = sol.grid;
    const double cell = g.dt * std::pow(g.dx(), g.d);
    std::vector<double> small_norm(deltas.size()), large_mod(deltas.size());
    const auto shifts = make_shift_set(g, R);
    for (std::size_t di = 0; di < deltas.size(); ++di) {
        PairwiseAccumulator l1;
        for (int m = 0; m <= g.n_t; ++m) {
            auto u = sol.slice(m);
            PairwiseAccumulator slice;
            for (std::size_t c = 0; c < g.points_per_slice(); ++c) {
                slice.add(std::abs(split_scalar(u[c], nl, deltas[di])));
            }
            l1.add(slice.total());
        }
        small_norm[di] = l1.total() * cell;
        const SeminormReport mod = modelledness_seminorm(sol, nl, model, nu, 2.0 * alpha, R, shifts,
                                                         deltas[di], threads);
        large_mod[di] = mod.sup_ratio;
    }
    KFunctionalResult result = k_functional_core(deltas, small_norm, large_mod, lambdas, 2.0 * alpha);
    const double M = nl.exponent_M();
    result.expected_argmin = 2.0 * alpha * (M - 1.0) / (1.0 + (M - 1.0) * (alpha + eps));
    result.expected_k = 2.0 * alpha / (1.0 + (M - 1.0) * (alpha + eps));
    return result;
}

}  // namespace spmlab
