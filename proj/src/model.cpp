#include "spmlab/model.hpp"

#include <cmath>
#include <complex>
#include <stdexcept>

#include "spmlab/fft.hpp"
#include "spmlab/numerics.hpp"
#include "spmlab/rng.hpp"

namespace spmlab {

const char* symbol_name(Symbol tau) {
    switch (tau) {
        case Symbol::Xi: return "xi";
        case Symbol::Lolly: return "lolly";
        case Symbol::Dumb: return "dumb";
        case Symbol::Cherry: return "cherry";
        case Symbol::XXi: return "xxi";
    }
    return "?";
}

double symbol_homogeneity(Symbol tau, double alpha) {
    switch (tau) {
        case Symbol::Xi: return alpha - 2.0;
        case Symbol::Lolly: return alpha;
        case Symbol::Dumb: return 2.0 * alpha - 2.0;
        case Symbol::Cherry: return 2.0 * alpha - 2.0;
        case Symbol::XXi: return alpha - 1.0;
    }
    return 0.0;
}

double symbol_a_exponent(Symbol tau, double epsilon) {
    switch (tau) {
        case Symbol::Xi: return 0.0;
        case Symbol::Lolly: return 1.0 + epsilon;
        case Symbol::Dumb: return 1.0 + epsilon;
        case Symbol::Cherry: return 2.0 + 2.0 * epsilon;
        case Symbol::XXi: return 0.0;
    }
    return 0.0;
}

namespace {

// Visits every lattice mode 0 < |j| <= K with k = 2 pi j and kappa = |k|^2.
template <typename F>
void for_each_mode(int d, int K, F&& fn) {
    const int j2_lo = d == 2 ? -K : 0;
    const int j2_hi = d == 2 ? K : 0;
    for (int j1 = -K; j1 <= K; ++j1) {
        for (int j2 = j2_lo; j2 <= j2_hi; ++j2) {
            const int jj = j1 * j1 + j2 * j2;
            if (jj == 0 || jj > K * K) continue;
            fn(j1, j2, 4.0 * M_PI * M_PI * jj);
        }
    }
}

void require_positive_a(double a, const char* who) {
    if (!(a > 0.0)) throw std::invalid_argument(std::string(who) + ": diffusivity must be positive");
}

}  // namespace

double counterterm_dumb(int d, double a, double t, int K_max) {
    require_positive_a(a, "counterterm_dumb");
    if (t < 0.0) throw std::invalid_argument("counterterm_dumb: t must be nonnegative");
    PairwiseAccumulator acc;
    for_each_mode(d, K_max, [&](int, int, double kappa) {
        acc.add((1.0 - std::exp(-a * kappa * t)) / (a * kappa));
    });
    return t + acc.total();
}

double counterterm_cherry(int d, double a, double t, int K_max) {
    require_positive_a(a, "counterterm_cherry");
    if (t < 0.0) throw std::invalid_argument("counterterm_cherry: t must be nonnegative");
    PairwiseAccumulator acc;
    for_each_mode(d, K_max, [&](int, int, double kappa) {
        const double g = 1.0 - std::exp(-a * kappa * t);
        acc.add(g * g / (a * a * kappa));
    });
    return acc.total();
}

double counterterm_C(int d, double a, int K_max) {
    require_positive_a(a, "counterterm_C");
    PairwiseAccumulator acc;
    for_each_mode(d, K_max, [&](int, int, double kappa) { acc.add(1.0 / (a * kappa)); });
    return acc.total();
}

ModelEvaluator::ModelEvaluator(const SpectralNoise& noise) : noise_(&noise) {}

double ModelEvaluator::xi(const SpaceTimePoint& eval) const { return noise_->evaluate(eval); }

std::complex<double> ModelEvaluator::mode_weight(int j1, int j2, double a, double s,
                                                 int da_order) const {
    const double kappa = 4.0 * M_PI * M_PI * (static_cast<double>(j1) * j1 + static_cast<double>(j2) * j2);
    if (noise_->kind() == NoiseKind::SpaceWhite) {
        const std::complex<double> c = noise_->coefficient(j1, j2);
        if (c == std::complex<double>{0.0, 0.0}) return c;
        if (kappa == 0.0) {
            // zero mode evolves freely: contribution s * xi_0, a-independent
            return da_order == 0 ? s * c : std::complex<double>{0.0, 0.0};
        }
        const double E = std::exp(-a * kappa * s);
        const double g = (1.0 - E) / (a * kappa);
        if (da_order == 0) return g * c;
        return ((s * E - g) / a) * c;  // d/da of (1-e^{-a k^2 s})/(a k^2)
    }
    // Coloured: Duhamel integral int_0^s e^{-a kappa (s-r)} dB^(eps)(r) by the
    // trapezoid rule on the path grid (the mollified amplitude is smooth).
    const double span = std::min(s, noise_->time_span());
    if (span <= 0.0) return {0.0, 0.0};
    const double h = noise_->path_dt();
    const int n = static_cast<int>(std::floor(span / h));
    const double root_c = std::sqrt(noise_->colour_weight(j1, j2));
    auto weight = [&](double r) {
        const double e = std::exp(-a * kappa * (s - r));
        if (da_order == 0) return e;
        return -kappa * (s - r) * e;
    };
    std::complex<double> acc{0.0, 0.0};
    for (int i = 0; i <= n; ++i) {
        const double r = i * h;
        const double w = (i == 0 || i == n) ? 0.5 : 1.0;
        acc += w * weight(r) * noise_->mollified_amplitude(j1, j2, r);
    }
    acc *= h;
    if (span > n * h) {  // partial last cell
        const double r0 = n * h;
        acc += 0.5 * (span - r0) *
               (weight(r0) * noise_->mollified_amplitude(j1, j2, r0) +
                weight(span) * noise_->mollified_amplitude(j1, j2, span));
    }
    return root_c * acc;
}

double ModelEvaluator::lolly_unrecentered(double a, const SpaceTimePoint& p, int da_order) const {
    require_positive_a(a, "lolly");
    if (p.t < 0.0) throw std::invalid_argument("lolly: time must be nonnegative");
    const int K = noise_->cutoff();
    const int d = noise_->dimension();
    const int j2_lo = d == 2 ? -K : 0;
    const int j2_hi = d == 2 ? K : 0;
    PairwiseAccumulator acc;
    for (int j1 = -K; j1 <= K; ++j1) {
        for (int j2 = j2_lo; j2 <= j2_hi; ++j2) {
            if (j1 * j1 + j2 * j2 > K * K) continue;
            const std::complex<double> w = mode_weight(j1, j2, a, p.t, da_order);
            if (w == std::complex<double>{0.0, 0.0}) continue;
            const double phase = 2.0 * M_PI * (j1 * p.x[0] + j2 * p.x[1]);
            acc.add(w.real() * std::cos(phase) - w.imag() * std::sin(phase));
        }
    }
    return acc.total();
}

double ModelEvaluator::lolly(double a, const SpaceTimePoint& base, const SpaceTimePoint& eval,
                             int da_order) const {
    return lolly_unrecentered(a, eval, da_order) - lolly_unrecentered(a, base, da_order);
}

std::array<double, 2> ModelEvaluator::lolly_gradient(double a, const SpaceTimePoint& eval,
                                                     int da_order) const {
    require_positive_a(a, "lolly_gradient");
    const int K = noise_->cutoff();
    const int d = noise_->dimension();
    const int j2_lo = d == 2 ? -K : 0;
    const int j2_hi = d == 2 ? K : 0;
    PairwiseAccumulator acc0, acc1;
    for (int j1 = -K; j1 <= K; ++j1) {
        for (int j2 = j2_lo; j2 <= j2_hi; ++j2) {
            const int jj = j1 * j1 + j2 * j2;
            if (jj == 0 || jj > K * K) continue;
            const std::complex<double> w = mode_weight(j1, j2, a, eval.t, da_order);
            if (w == std::complex<double>{0.0, 0.0}) continue;
            const double phase = 2.0 * M_PI * (j1 * eval.x[0] + j2 * eval.x[1]);
            // d/dy_m of e_k(y) = i k_m e_k(y); Re(i k_m w e^{i phase}) = -k_m Im(w e^{i phase})
            const double im = w.real() * std::sin(phase) + w.imag() * std::cos(phase);
            acc0.add(-2.0 * M_PI * j1 * im);
            if (d == 2) acc1.add(-2.0 * M_PI * j2 * im);
        }
    }
    return {acc0.total(), d == 2 ? acc1.total() : 0.0};
}

double ModelEvaluator::dumb(double a, const SpaceTimePoint& base, const SpaceTimePoint& eval) const {
    require_positive_a(a, "dumb");
    if (noise_->kind() != NoiseKind::SpaceWhite) {
        throw std::logic_error("dumb: exact counterterm construction only for SpaceWhite");
    }
    return lolly(a, base, eval) * xi(eval) -
           counterterm_dumb(noise_->dimension(), a, eval.t, noise_->cutoff());
}

double ModelEvaluator::cherry(double a, const SpaceTimePoint& base,
                              const SpaceTimePoint& eval) const {
    require_positive_a(a, "cherry");
    if (noise_->kind() != NoiseKind::SpaceWhite) {
        throw std::logic_error("cherry: exact counterterm construction only for SpaceWhite");
    }
    (void)base;  // gradient kills the recentering constant
    const auto g = lolly_gradient(a, eval);
    const double sq = g[0] * g[0] + g[1] * g[1];
    return sq - counterterm_cherry(noise_->dimension(), a, eval.t, noise_->cutoff());
}

std::array<double, 2> ModelEvaluator::xnoise(const SpaceTimePoint& base,
                                             const SpaceTimePoint& eval) const {
    const double v = xi(eval);
    return {(eval.x[0] - base.x[0]) * v,
            noise_->dimension() == 2 ? (eval.x[1] - base.x[1]) * v : 0.0};
}

double ModelEvaluator::recenter_check(Symbol tau, double a, const SpaceTimePoint& x,
                                      const SpaceTimePoint& y, int num_eval,
                                      std::uint64_t seed) const {
    CounterRng rng(seed, 0x7265636e74ULL);
    const int d = noise_->dimension();
    double worst = 0.0;
    for (int i = 0; i < num_eval; ++i) {
        SpaceTimePoint z = SpaceTimePoint::make(0.05 + 0.9 * rng.next_uniform(), rng.next_uniform(),
                                                d, rng.next_uniform());
        double residual = 0.0;
        switch (tau) {
            case Symbol::Xi:
                residual = 0.0;  // Pi_x[xi] does not depend on the base point
                break;
            case Symbol::Lolly:
                residual = std::abs(lolly(a, x, z) - (lolly(a, y, z) + lolly(a, x, y)));
                break;
            case Symbol::Dumb:
                residual = std::abs(dumb(a, x, z) - (dumb(a, y, z) + lolly(a, x, y) * xi(z)));
                break;
            case Symbol::Cherry:
                residual = std::abs(cherry(a, x, z) - cherry(a, y, z));
                break;
            case Symbol::XXi: {
                const auto lhs = xnoise(x, z);
                const auto rhs = xnoise(y, z);
                const double v = xi(z);
                for (int m = 0; m < d; ++m) {
                    residual = std::max(residual,
                                        std::abs(lhs[m] - (rhs[m] + (y.x[m] - x.x[m]) * v)));
                }
                break;
            }
        }
        worst = std::max(worst, residual);
    }
    return worst;
}

void ModelEvaluator::render_lolly_slice(double a, double s, const Grid& grid,
                                        std::span<double> out) const {
    require_positive_a(a, "render_lolly_slice");
    if (grid.n <= 2 * noise_->cutoff()) {
        throw std::invalid_argument("render_lolly_slice: grid does not resolve the cutoff");
    }
    const int K = noise_->cutoff();
    const int d = noise_->dimension();
    const int n = grid.n;
    std::vector<std::complex<double>> spec(grid.points_per_slice(), {0.0, 0.0});
    const int j2_lo = d == 2 ? -K : 0;
    const int j2_hi = d == 2 ? K : 0;
    for (int j1 = -K; j1 <= K; ++j1) {
        for (int j2 = j2_lo; j2 <= j2_hi; ++j2) {
            if (j1 * j1 + j2 * j2 > K * K) continue;
            const std::complex<double> w = mode_weight(j1, j2, a, s, 0);
            if (w == std::complex<double>{0.0, 0.0}) continue;
            const int i1 = (j1 % n + n) % n;
            const int i2 = (j2 % n + n) % n;
            spec[d == 1 ? i1 : static_cast<std::size_t>(i1) * n + i2] += w;
        }
    }
    inverse_fft(spec.data(), d, n, out.data());
}

void ModelEvaluator::render_lolly_gradient_slice(double a, double s, const Grid& grid,
                                                 std::span<double> gx, std::span<double> gy) const {
    require_positive_a(a, "render_lolly_gradient_slice");
    if (grid.n <= 2 * noise_->cutoff()) {
        throw std::invalid_argument("render_lolly_gradient_slice: grid does not resolve the cutoff");
    }
    const int K = noise_->cutoff();
    const int d = noise_->dimension();
    const int n = grid.n;
    std::vector<std::complex<double>> spec1(grid.points_per_slice(), {0.0, 0.0});
    std::vector<std::complex<double>> spec2(d == 2 ? grid.points_per_slice() : 0, {0.0, 0.0});
    const int j2_lo = d == 2 ? -K : 0;
    const int j2_hi = d == 2 ? K : 0;
    const std::complex<double> I{0.0, 1.0};
    for (int j1 = -K; j1 <= K; ++j1) {
        for (int j2 = j2_lo; j2 <= j2_hi; ++j2) {
            const int jj = j1 * j1 + j2 * j2;
            if (jj == 0 || jj > K * K) continue;
            const std::complex<double> w = mode_weight(j1, j2, a, s, 0);
            if (w == std::complex<double>{0.0, 0.0}) continue;
            const int i1 = (j1 % n + n) % n;
            const int i2 = (j2 % n + n) % n;
            const std::size_t idx = d == 1 ? i1 : static_cast<std::size_t>(i1) * n + i2;
            spec1[idx] += I * (2.0 * M_PI * j1) * w;
            if (d == 2) spec2[idx] += I * (2.0 * M_PI * j2) * w;
        }
    }
    inverse_fft(spec1.data(), d, n, gx.data());
    if (d == 2) inverse_fft(spec2.data(), d, n, gy.data());
}

double pair_field(const std::function<double(const SpaceTimePoint&)>& field,
                  const TestFunction& tf, const Grid& grid) {
    const double lambda = tf.scale;
    if (lambda * grid.n < 8.0) {
        throw std::invalid_argument("pair_field: scale under-resolved by the grid (need lambda*n >= 8)");
    }
    if (lambda * lambda < 2.0 * grid.dt) {
        throw std::invalid_argument("pair_field: scale under-resolved in time (need lambda^2 >= 2*dt)");
    }
    const int d = tf.base.d;
    const double dx = grid.dx();
    const double cell = grid.dt * std::pow(dx, d);
    // time window |t - base.t| < lambda^2, spatial window |x - base.x| < lambda
    const int m_lo = std::max(0, static_cast<int>(std::ceil((tf.base.t - lambda * lambda) / grid.dt)));
    const int m_hi = std::min(grid.n_t, static_cast<int>(std::floor((tf.base.t + lambda * lambda) / grid.dt)));
    const int half = static_cast<int>(std::ceil(lambda * grid.n)) + 1;
    const int cx = static_cast<int>(std::round(tf.base.x[0] * grid.n));
    const int cy = static_cast<int>(std::round(tf.base.x[1] * grid.n));

    PairwiseAccumulator acc;
    for (int m = m_lo; m <= m_hi; ++m) {
        const double t = m * grid.dt;
        for (int ix = cx - half; ix <= cx + half; ++ix) {
            const int wx = grid.wrap(ix);
            if (d == 1) {
                SpaceTimePoint p = SpaceTimePoint::make(t, grid.coord(wx), 1);
                const double w = rescaled_test(tf, p);
                if (w != 0.0) acc.add(w * field(p));
            } else {
                for (int iy = cy - half; iy <= cy + half; ++iy) {
                    const int wy = grid.wrap(iy);
                    SpaceTimePoint p = SpaceTimePoint::make(t, grid.coord(wx), 2, grid.coord(wy));
                    const double w = rescaled_test(tf, p);
                    if (w != 0.0) acc.add(w * field(p));
                }
            }
        }
    }
    return cell * acc.total();
}

namespace {

// One ensemble member of the homogeneity fit: squared pairings per lambda
// (summed over vector components for XXi).
void homogeneity_sample(Symbol tau, const FitHomogeneityOptions& opt, std::uint64_t sample_seed,
                        std::span<double> out_sq) {
    const int d = opt.d;
    const int n = opt.grid_n;
    Grid grid;
    grid.d = d;
    grid.n = n;
    grid.dt = 1.0;  // placeholder; only the spatial layout is used here
    grid.n_t = 1;
    const SpectralNoise noise = SpectralNoise::sample_space_white(d, opt.K_max, sample_seed);
    ModelEvaluator model(noise);
    const std::size_t pts = grid.points_per_slice();
    const double cell = std::pow(grid.dx(), d);

    SpaceTimePoint base = SpaceTimePoint::make(opt.base_time, 0.5, d, 0.5);

    std::vector<double> xi_field(pts);
    noise.render_slice(opt.base_time, grid, xi_field);

    std::vector<double> work(pts), gx(pts), gy(d == 2 ? pts : 0);
    const QuadratureRule& rule = gauss_legendre(opt.time_nodes);

    for (std::size_t li = 0; li < opt.lambdas.size(); ++li) {
        const double lambda = opt.lambdas[li];
        TestFunction tf{base, lambda, 0};
        // spatial Riemann sum at fixed time s, restricted to the bump support
        const int half = static_cast<int>(std::ceil(lambda * n)) + 1;
        const int cx = n / 2, cy = n / 2;
        // component >= 0 multiplies the field by the wrapped offset (y-x)_m
        auto spatial_sum = [&](double s, const std::vector<double>& f, int component) {
            PairwiseAccumulator acc;
            for (int ix = cx - half; ix <= cx + half; ++ix) {
                const int wx = grid.wrap(ix);
                if (d == 1) {
                    SpaceTimePoint p = SpaceTimePoint::make(s, grid.coord(wx), 1);
                    const double w = rescaled_test(tf, p);
                    if (w == 0.0) continue;
                    double v = f[wx];
                    if (component == 0) v *= wrap_symmetric(grid.coord(wx) - base.x[0]);
                    acc.add(w * v);
                } else {
                    for (int iy = cy - half; iy <= cy + half; ++iy) {
                        const int wy = grid.wrap(iy);
                        SpaceTimePoint p = SpaceTimePoint::make(s, grid.coord(wx), 2, grid.coord(wy));
                        const double w = rescaled_test(tf, p);
                        if (w == 0.0) continue;
                        double v = f[grid.site(wx, wy)];
                        if (component == 0) {
                            v *= wrap_symmetric(grid.coord(wx) - base.x[0]);
                        } else if (component == 1) {
                            v *= wrap_symmetric(grid.coord(wy) - base.x[1]);
                        }
                        acc.add(w * v);
                    }
                }
            }
            return cell * acc.total();
        };

        auto time_integral = [&](const std::function<double(double)>& slice_value) {
            // int over s in (t0 - l^2, t0 + l^2) by Gauss-Legendre
            PairwiseAccumulator acc;
            for (int i = 0; i < opt.time_nodes; ++i) {
                const double s = opt.base_time + lambda * lambda * rule.nodes[i];
                acc.add(rule.weights[i] * slice_value(s));
            }
            return lambda * lambda * acc.total();
        };

        double sq = 0.0;
        switch (tau) {
            case Symbol::Xi: {
                const double v = time_integral([&](double s) { return spatial_sum(s, xi_field, -1); });
                sq = v * v;
                break;
            }
            case Symbol::Lolly: {
                const double u_base = model.lolly_unrecentered(opt.a, base);
                const double v = time_integral([&](double s) {
                    model.render_lolly_slice(opt.a, s, grid, work);
                    for (std::size_t i = 0; i < pts; ++i) work[i] -= u_base;
                    return spatial_sum(s, work, -1);
                });
                sq = v * v;
                break;
            }
            case Symbol::Dumb: {
                const double u_base = model.lolly_unrecentered(opt.a, base);
                const double v = time_integral([&](double s) {
                    model.render_lolly_slice(opt.a, s, grid, work);
                    const double c = counterterm_dumb(d, opt.a, s, opt.K_max);
                    for (std::size_t i = 0; i < pts; ++i) {
                        work[i] = (work[i] - u_base) * xi_field[i] - c;
                    }
                    return spatial_sum(s, work, -1);
                });
                sq = v * v;
                break;
            }
            case Symbol::Cherry: {
                const double v = time_integral([&](double s) {
                    model.render_lolly_gradient_slice(opt.a, s, grid, gx, gy);
                    const double c = counterterm_cherry(d, opt.a, s, opt.K_max);
                    for (std::size_t i = 0; i < pts; ++i) {
                        work[i] = gx[i] * gx[i] + (d == 2 ? gy[i] * gy[i] : 0.0) - c;
                    }
                    return spatial_sum(s, work, -1);
                });
                sq = v * v;
                break;
            }
            case Symbol::XXi: {
                for (int comp = 0; comp < d; ++comp) {
                    const double v = time_integral(
                        [&](double s) { return spatial_sum(s, xi_field, comp); });
                    sq += v * v;
                }
                break;
            }
        }
        out_sq[li] = sq;
    }
}

}  // namespace

HomogeneityFit fit_homogeneity(Symbol tau, const FitHomogeneityOptions& opt) {
    if (opt.lambdas.size() < 4) throw std::invalid_argument("fit_homogeneity: need >= 4 scales");
    const std::size_t L = opt.lambdas.size();
    std::vector<double> sq(static_cast<std::size_t>(opt.ensemble) * L, 0.0);
    parallel_for(
        opt.ensemble,
        [&](std::size_t s) {
            homogeneity_sample(tau, opt, CounterRng::mix(opt.seed, 0xE5E5B1E5ULL + s),
                               std::span<double>(sq.data() + s * L, L));
        },
        opt.threads);

    HomogeneityFit fit;
    fit.lambdas.assign(opt.lambdas.begin(), opt.lambdas.end());
    fit.expected = symbol_homogeneity(tau, opt.alpha);
    fit.sample_sq = sq;
    std::vector<double> logl(L), logm(L);
    for (std::size_t li = 0; li < L; ++li) {
        PairwiseAccumulator acc;
        for (int s = 0; s < opt.ensemble; ++s) acc.add(sq[static_cast<std::size_t>(s) * L + li]);
        const double second_moment = acc.total() / opt.ensemble;
        fit.moments.push_back(std::sqrt(second_moment));
        logl[li] = std::log(opt.lambdas[li]);
        logm[li] = 0.5 * std::log(second_moment);
    }
    const LineFit lf = fit_line(logl, logm);
    fit.slope = lf.slope;
    fit.stderr_slope = lf.stderr_slope;
    return fit;
}

CountertermConditions counterterm_conditions(const Nonlinearity& nl, double v_min, double v_max,
                                             double T, int d, int K_max, int v_samples,
                                             int t_panels) {
    if (!(v_min > 0.0 && v_max > v_min)) throw std::invalid_argument("counterterm_conditions: bad v range");
    std::vector<double> vs;
    for (int i = 0; i <= v_samples; ++i) {
        const double v = v_min * std::pow(v_max / v_min, static_cast<double>(i) / v_samples);
        vs.push_back(v);
        vs.push_back(-v);
    }
    auto sup_at = [&](double t, bool dumb_cherry) {
        double sup = 0.0;
        for (double v : vs) {
            const double a = nl.a(v);
            if (!(a > 0.0)) continue;
            double w;
            if (dumb_cherry) {
                const double s = nl.sigma(v);
                w = std::abs(s * s / v *
                             (counterterm_dumb(d, a, t, K_max) - a * counterterm_cherry(d, a, t, K_max)));
            } else {
                w = std::abs(nl.sigma_prime(v) * nl.sigma(v) *
                             (counterterm_C(d, a, K_max) - counterterm_dumb(d, a, t, K_max)));
            }
            sup = std::max(sup, w);
        }
        return sup;
    };
    // substitute t = u^2 so the sqrt(t)-type blowup at 0 is integrated smoothly
    CountertermConditions out;
    out.integral_time_independent = integrate_gl_composite(
        [&](double u) { return 2.0 * u * sup_at(u * u, false); }, 0.0, std::sqrt(T), t_panels, 8);
    out.integral_dumb_cherry = integrate_gl_composite(
        [&](double u) { return 2.0 * u * sup_at(u * u, true); }, 0.0, std::sqrt(T), t_panels, 8);
    out.finite = std::isfinite(out.integral_time_independent) && std::isfinite(out.integral_dumb_cherry);
    return out;
}

}  // namespace spmlab
