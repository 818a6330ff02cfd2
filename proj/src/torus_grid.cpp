#include "spmlab/torus_grid.hpp"

#include <cmath>
#include <stdexcept>

#include "spmlab/numerics.hpp"

namespace spmlab {

void Grid::validate() const {
    if (d != 1 && d != 2) throw std::invalid_argument("Grid: d must be 1 or 2");
    if (n < 8 || (n & (n - 1)) != 0) throw std::invalid_argument("Grid: n must be a power of two >= 8");
    if (!(dt > 0.0)) throw std::invalid_argument("Grid: dt must be positive");
    if (n_t < 1) throw std::invalid_argument("Grid: n_t must be >= 1");
}

SpaceTimePoint SpaceTimePoint::make(double t, double x1, int d, double x2) {
    if (!std::isfinite(t) || !std::isfinite(x1) || !std::isfinite(x2)) {
        throw std::invalid_argument("SpaceTimePoint: coordinates must be finite");
    }
    SpaceTimePoint p;
    p.t = t;
    p.d = d;
    p.x = {wrap_unit(x1), d == 2 ? wrap_unit(x2) : 0.0};
    return p;
}

double wrap_unit(double x) {
    double r = x - std::floor(x);
    if (r >= 1.0) r -= 1.0;  // guards floor rounding at exact integers
    return r;
}

double wrap_symmetric(double x) {
    double r = wrap_unit(x + 0.5) - 0.5;
    return r;
}

double parabolic_norm(const SpaceTimePoint& p) {
    double q = std::abs(p.t);
    for (int i = 0; i < p.d; ++i) {
        const double w = wrap_symmetric(p.x[i]);
        q += w * w;
    }
    return std::sqrt(q);
}

double parabolic_norm_raw(double t, const double* x, int d) {
    double q = std::abs(t);
    for (int i = 0; i < d; ++i) q += x[i] * x[i];
    return std::sqrt(q);
}

SpaceTimePoint parabolic_scale(double lambda, const SpaceTimePoint& p) {
    SpaceTimePoint q = p;
    q.t = lambda * lambda * p.t;
    // scale the shortest representative so dilation commutes with the wrap
    for (int i = 0; i < p.d; ++i) q.x[i] = wrap_unit(lambda * wrap_symmetric(p.x[i]));
    return q;
}

namespace {

// Unnormalized radial factor b(q) = exp(1/(q-1)) for q in [0,1).
double radial_bump(double q) {
    if (q >= 1.0) return 0.0;
    return std::exp(1.0 / (q - 1.0));
}

double radial_bump_d1(double q) {  // db/dq
    if (q >= 1.0) return 0.0;
    const double g = 1.0 / (q - 1.0);
    return -g * g * std::exp(g);
}

double radial_bump_d2(double q) {  // d2b/dq2
    if (q >= 1.0) return 0.0;
    const double g = 1.0 / (q - 1.0);
    return (2.0 * g * g * g + g * g * g * g) * std::exp(g);
}

// Normalization so that the profile and its first/second coordinate
// derivatives are bounded by 1 on the unit ball. Derivatives in terms of
// q = |t| + |x|^2: d_i = 2 x_i b', d_ij = 4 x_i x_j b'' + 2 delta_ij b',
// d_t = +-b', d_tt = b'', d_t d_i = +-2 x_i b''; |x_i| <= 1 on the ball.
double bump_normalization() {
    static const double c = [] {
        double sup = 0.0;
        const int samples = 20000;
        for (int i = 0; i < samples; ++i) {
            const double q = (i + 0.5) / samples;
            const double b = radial_bump(q);
            const double b1 = std::abs(radial_bump_d1(q));
            const double b2 = std::abs(radial_bump_d2(q));
            sup = std::max({sup, b, 2.0 * b1, b1, b2, 2.0 * b2, 4.0 * b2 + 2.0 * b1});
        }
        return 1.0 / sup;
    }();
    return c;
}

}  // namespace

double bump_profile(int d, double t, const double* x) {
    double q = std::abs(t);
    for (int i = 0; i < d; ++i) q += x[i] * x[i];
    if (q >= 1.0) return 0.0;
    return bump_normalization() * radial_bump(q);
}

double bump_profile_slice_mass(int d, double tau) {
    const double at = std::abs(tau);
    if (at >= 1.0) return 0.0;
    const double r = std::sqrt(1.0 - at);
    if (d == 1) {
        return integrate_gl([&](double w) { return bump_profile(1, tau, &w); }, -r, r, 48);
    }
    // radial: 2 pi int_0^r phi(rho) rho drho
    return 2.0 * M_PI *
           integrate_gl(
               [&](double rho) {
                   const double w[2] = {rho, 0.0};
                   return bump_profile(2, tau, w) * rho;
               },
               0.0, r, 48);
}

double bump_profile_mass(int d) {
    static const double mass1 = integrate_gl_composite(
        [](double tau) { return bump_profile_slice_mass(1, tau); }, -1.0, 1.0, 16, 24);
    static const double mass2 = integrate_gl_composite(
        [](double tau) { return bump_profile_slice_mass(2, tau); }, -1.0, 1.0, 16, 24);
    return d == 1 ? mass1 : mass2;
}

namespace {

double reference_bump_norm(int d) {
    // normalizes the radius-1/2 bump to unit mass
    static const double n1 = integrate_gl(
        [](double w) {
            const double q = 4.0 * w * w;
            return radial_bump(q);
        },
        -0.5, 0.5, 48);
    static const double n2 = 2.0 * M_PI *
                             integrate_gl(
                                 [](double rho) {
                                     const double q = 4.0 * rho * rho;
                                     return radial_bump(q) * rho;
                                 },
                                 0.0, 0.5, 48);
    return d == 1 ? n1 : n2;
}

}  // namespace

double reference_spatial_bump(int d, const double* w) {
    double q = 0.0;
    for (int i = 0; i < d; ++i) q += 4.0 * w[i] * w[i];
    if (q >= 1.0) return 0.0;
    return radial_bump(q) / reference_bump_norm(d);
}

double test_profile(const TestFunction& tf, int d, double tau, const double* w) {
    double value = bump_profile(d, tau, w);
    if (tf.moments_killed == 1) {
        // Project out the spatial constants slice by slice; the first moments
        // of both terms vanish by radial symmetry.
        value -= bump_profile_slice_mass(d, tau) * reference_spatial_bump(d, w);
    }
    return value;
}

double rescaled_test(const TestFunction& tf, const SpaceTimePoint& eval) {
    const double lambda = tf.scale;
    if (!(lambda > 0.0) || lambda > 1.0) throw std::invalid_argument("rescaled_test: scale must lie in (0,1]");
    const int d = tf.base.d;
    const double inv = 1.0 / lambda;
    const double tau = (eval.t - tf.base.t) * inv * inv;
    double dx0 = eval.x[0] - tf.base.x[0];
    double dx1 = d == 2 ? eval.x[1] - tf.base.x[1] : 0.0;
    const double scale_factor = std::pow(lambda, -(d + 2));

    double sum = 0.0;
    // lambda <= 1 means only adjacent periodic images can intersect the support
    for (int k0 = -1; k0 <= 1; ++k0) {
        if (d == 1) {
            const double w = (dx0 + k0) * inv;
            sum += test_profile(tf, d, tau, &w);
        } else {
            for (int k1 = -1; k1 <= 1; ++k1) {
                const double w[2] = {(dx0 + k0) * inv, (dx1 + k1) * inv};
                sum += test_profile(tf, d, tau, w);
            }
        }
    }
    return scale_factor * sum;
}

}  // namespace spmlab
