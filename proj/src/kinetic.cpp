#include "spmlab/kinetic.hpp"

#include <cmath>
#include <stdexcept>

#include "spmlab/heat_kernels.hpp"
#include "spmlab/model.hpp"
#include "spmlab/numerics.hpp"

namespace spmlab {

int chi(double u_val, double v) {
    if (v >= 0.0 && v < u_val) return 1;
    if (v < 0.0 && v >= u_val) return -1;
    return 0;
}

double phi_greater(double x) {
    if (x <= 1.0) return 0.0;
    if (x >= 2.0) return 1.0;
    // sum over q <= -1 of the dyadic bump; only q = -1 can be active on (1,2)
    return dyadic_phi(0.5 * x);
}

double phi_less(double x) { return 1.0 - phi_greater(x); }

namespace {

bool is_dyadic_in_unit(double delta) {
    if (!(delta > 0.0 && delta < 1.0)) return false;
    int e = 0;
    return std::frexp(delta, &e) == 0.5;
}

// Largest w >= 0 with a(w) <= level (a even, nondecreasing in |w|), capped.
double diffusivity_inverse(const Nonlinearity& nl, double level, double cap) {
    if (nl.a(cap) <= level) return cap;
    if (nl.a(0.0) >= level) return 0.0;
    double lo = 0.0, hi = cap;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (nl.a(mid) <= level ? lo : hi) = mid;
        if (hi - lo < 1e-300 || (hi - lo) < 1e-16 * hi) break;
    }
    return lo;
}

}  // namespace

double split_scalar(double u, const Nonlinearity& nl, double delta) {
    if (u == 0.0) return 0.0;
    const double mag = std::abs(u);
    if (nl.a(0.0) >= 2.0 * delta) return 0.0;  // phi_less vanishes on the whole range
    const double t1 = diffusivity_inverse(nl, delta, mag);        // plateau: phi_less = 1
    const double t2 = diffusivity_inverse(nl, 2.0 * delta, mag);  // support edge
    double value = t1;
    if (t2 > t1) {
        value += integrate_gl([&](double w) { return phi_less(nl.a(w) / delta); }, t1, t2, 48);
    }
    return u > 0.0 ? value : -value;
}

KineticSplit split_velocities(std::span<const double> u, const Nonlinearity& nl, double delta) {
    if (!is_dyadic_in_unit(delta)) {
        throw std::invalid_argument("split_velocities: delta must be dyadic in (0,1)");
    }
    KineticSplit split;
    split.delta = delta;
    split.u_less.resize(u.size());
    split.u_greater.resize(u.size());
    double u_max = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        split.u_less[i] = split_scalar(u[i], nl, delta);
        split.u_greater[i] = u[i] - split.u_less[i];
        u_max = std::max(u_max, std::abs(u[i]));
    }
    int e = 0;
    std::frexp(delta, &e);
    split.q_high = 1 - e;  // delta = 2^{e-1} = 2^{-q_high}
    const double a_max = std::max(nl.a(u_max), delta);
    split.q_low = -static_cast<int>(std::ceil(std::log2(std::max(2.0 * a_max, 1e-300))));
    if (split.q_low > split.q_high) split.q_low = split.q_high;
    return split;
}

KineticTestFunction make_kinetic_bump(int d, double t_lo, double t_hi, double v_center,
                                      double v_radius) {
    auto bump = [](double s) { return std::abs(s) < 1.0 ? std::exp(1.0 / (s * s - 1.0)) : 0.0; };
    auto bump_d1 = [bump](double s) {
        if (std::abs(s) >= 1.0) return 0.0;
        const double g = 1.0 / (s * s - 1.0);
        return bump(s) * (-2.0 * s * g * g);
    };
    const double tc = 0.5 * (t_lo + t_hi), tr = 0.5 * (t_hi - t_lo);

    auto bt = [=](double t) { return bump((t - tc) / tr); };
    auto bt1 = [=](double t) { return bump_d1((t - tc) / tr) / tr; };
    auto bx = [=](double x, double y) {
        return d == 1 ? 1.0 + 0.5 * std::sin(2.0 * M_PI * x)
                      : (1.0 + 0.5 * std::sin(2.0 * M_PI * x)) * (1.0 + 0.3 * std::cos(2.0 * M_PI * y));
    };
    auto bx_lap = [=](double x, double y) {
        const double w = 4.0 * M_PI * M_PI;
        if (d == 1) return -w * 0.5 * std::sin(2.0 * M_PI * x);
        return -w * 0.5 * std::sin(2.0 * M_PI * x) * (1.0 + 0.3 * std::cos(2.0 * M_PI * y)) -
               w * (1.0 + 0.5 * std::sin(2.0 * M_PI * x)) * 0.3 * std::cos(2.0 * M_PI * y);
    };
    auto bv = [=](double v) { return bump((v - v_center) / v_radius); };
    auto bv1 = [=](double v) { return bump_d1((v - v_center) / v_radius) / v_radius; };

    KineticTestFunction phi;
    phi.t_lo = t_lo;
    phi.t_hi = t_hi;
    phi.v_lo = v_center - v_radius;
    phi.v_hi = v_center + v_radius;
    phi.value = [=](double t, double x, double y, double v) { return bt(t) * bx(x, y) * bv(v); };
    phi.dt = [=](double t, double x, double y, double v) { return bt1(t) * bx(x, y) * bv(v); };
    phi.laplacian = [=](double t, double x, double y, double v) { return bt(t) * bx_lap(x, y) * bv(v); };
    phi.dv = [=](double t, double x, double y, double v) { return bt(t) * bx(x, y) * bv1(v); };
    return phi;
}

double kinetic_residual(const SolutionField& sol, const Nonlinearity& nl, const ForcingFn& forcing,
                        const KineticTestFunction& phi, int v_nodes) {
    const Grid& g = sol.grid;
    if (phi.t_lo <= 0.0 || phi.t_hi >= g.final_time()) {
        throw std::invalid_argument("kinetic_residual: test support must stay inside (0, T)");
    }
    const double cell = std::pow(g.dx(), g.d);
    const double S_K = sol.counterterm_K_max > 0 ? counterterm_C(g.d, 1.0, sol.counterterm_K_max) : 0.0;
    const QuadratureRule& rule = gauss_legendre(v_nodes);
    const double inv_2dx = 0.5 * g.n;

    std::vector<double> xi(g.points_per_slice());
    PairwiseAccumulator lhs_acc, rhs_acc;
    for (int m = 0; m <= g.n_t; ++m) {
        const double t = m * g.dt;
        if (t < phi.t_lo || t > phi.t_hi) continue;
        const double tw = (m == 0 || m == g.n_t) ? 0.5 : 1.0;  // trapezoid in time
        forcing(t, g, xi);
        auto u = sol.slice(m);
        PairwiseAccumulator lhs_slice, rhs_slice;
        for (int ix = 0; ix < g.n; ++ix) {
            const double x = g.coord(ix);
            for (int iy = 0; iy < (g.d == 2 ? g.n : 1); ++iy) {
                const double y = g.d == 2 ? g.coord(iy) : 0.0;
                const std::size_t c = g.site(ix, iy);
                const double uv = u[c];
                // LHS: - int_0^u (d_t + a(v) Lap) phi dv (signed)
                if (uv != 0.0) {
                    const double half = 0.5 * uv;
                    double integral = 0.0;
                    for (int q = 0; q < v_nodes; ++q) {
                        const double v = half + half * rule.nodes[q];
                        integral += rule.weights[q] *
                                    (phi.dt(t, x, y, v) + nl.a(v) * phi.laplacian(t, x, y, v));
                    }
                    lhs_slice.add(-half * integral);
                }
                // RHS: forcing at v = u minus the kinetic-measure term
                const double s = nl.sigma(uv);
                double rhs_val = 0.0;
                if (s != 0.0) {
                    double force = s * xi[c];
                    if (S_K > 0.0) {
                        const double ss = nl.sigma_prime(uv) * s;
                        if (ss != 0.0) force -= ss * S_K / nl.a(uv);
                    }
                    rhs_val += force * phi.value(t, x, y, uv);
                }
                double grad_sq;
                if (g.d == 1) {
                    const double du = (u[g.wrap(ix + 1)] - u[g.wrap(ix - 1)]) * inv_2dx;
                    grad_sq = du * du;
                } else {
                    const double dux = (u[g.site(g.wrap(ix + 1), iy)] - u[g.site(g.wrap(ix - 1), iy)]) * inv_2dx;
                    const double duy = (u[g.site(ix, g.wrap(iy + 1))] - u[g.site(ix, g.wrap(iy - 1))]) * inv_2dx;
                    grad_sq = dux * dux + duy * duy;
                }
                rhs_val -= nl.a(uv) * grad_sq * phi.dv(t, x, y, uv);
                rhs_slice.add(rhs_val);
            }
        }
        lhs_acc.add(tw * lhs_slice.total());
        rhs_acc.add(tw * rhs_slice.total());
    }
    return (lhs_acc.total() - rhs_acc.total()) * g.dt * cell;
}

}  // namespace spmlab
