#include "spmlab/heat_kernels.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

#include "spmlab/numerics.hpp"
#include "spmlab/spectral_noise.hpp"

namespace spmlab {

double heat_phi(int d, double t, const double* x) {
    if (t <= 0.0) return 0.0;
    double q = 0.0;
    for (int i = 0; i < d; ++i) q += x[i] * x[i];
    return std::pow(4.0 * M_PI * t, -0.5 * d) * std::exp(-q / (4.0 * t));
}

double heat_phi_deriv(int d, double t, const double* x, int l, const int* k) {
    if (t <= 0.0) return 0.0;
    const double phi = heat_phi(d, t, x);
    double q = 0.0;
    for (int i = 0; i < d; ++i) q += x[i] * x[i];
    int ksum = 0;
    for (int i = 0; i < d; ++i) ksum += k[i];
    if (l + ksum > 2) throw std::invalid_argument("heat_phi_deriv: order above 2 not provided");

    const double A = -0.5 * d / t + 0.25 * q / (t * t);  // Phi_t = A Phi
    if (l == 0 && ksum == 0) return phi;
    if (l == 1 && ksum == 0) return A * phi;
    if (l == 2 && ksum == 0) {
        const double A_t = 0.5 * d / (t * t) - 0.5 * q / (t * t * t);
        return (A * A + A_t) * phi;
    }
    if (l == 0 && ksum == 1) {
        for (int i = 0; i < d; ++i) {
            if (k[i] == 1) return -x[i] / (2.0 * t) * phi;
        }
    }
    if (l == 1 && ksum == 1) {
        for (int i = 0; i < d; ++i) {
            if (k[i] == 1) return (x[i] / (2.0 * t * t) - A * x[i] / (2.0 * t)) * phi;
        }
    }
    // ksum == 2, l == 0
    for (int i = 0; i < d; ++i) {
        if (k[i] == 2) return (x[i] * x[i] / (4.0 * t * t) - 1.0 / (2.0 * t)) * phi;
    }
    // mixed spatial
    double prod = phi / (4.0 * t * t);
    for (int i = 0; i < d; ++i) {
        if (k[i] == 1) prod *= x[i];
    }
    return prod;
}

double dilated_psi(int d, double a, double t, const double* x) {
    if (!(a > 0.0)) throw std::invalid_argument("dilated_psi: dilation must be positive");
    return heat_phi(d, a * t, x);
}

namespace {

// Bump on (1/2, 2): exp(-1/((t - 1/2)(2 - t))).
double lp_bump(double t) {
    if (t <= 0.5 || t >= 2.0) return 0.0;
    return std::exp(-1.0 / ((t - 0.5) * (2.0 - t)));
}

double lp_bump_d1(double t) {
    if (t <= 0.5 || t >= 2.0) return 0.0;
    const double h = (t - 0.5) * (2.0 - t);
    const double hp = 2.5 - 2.0 * t;
    // g = -1/h, b = e^g, b' = g' b with g' = hp / h^2
    return (hp / (h * h)) * lp_bump(t);
}

double lp_bump_d2(double t) {
    if (t <= 0.5 || t >= 2.0) return 0.0;
    const double h = (t - 0.5) * (2.0 - t);
    const double hp = 2.5 - 2.0 * t;
    const double g1 = hp / (h * h);
    const double g2 = -2.0 / (h * h) - 2.0 * hp * hp / (h * h * h);
    return (g2 + g1 * g1) * lp_bump(t);
}

// Sum over the (at most three) active dyadic translates.
void lp_sums(double t, double& S, double& S1, double& S2) {
    S = S1 = S2 = 0.0;
    const int q_hi = static_cast<int>(std::floor(std::log2(2.0 / t))) + 1;
    for (int q = q_hi - 3; q <= q_hi; ++q) {
        const double scale = std::ldexp(1.0, q);  // 2^q
        const double arg = scale * t;
        if (arg <= 0.5 || arg >= 2.0) continue;
        S += lp_bump(arg);
        S1 += scale * lp_bump_d1(arg);
        S2 += scale * scale * lp_bump_d2(arg);
    }
}

}  // namespace

double dyadic_phi(double t) {
    if (!(t > 0.0)) return 0.0;
    const double b = lp_bump(t);
    if (b == 0.0) return 0.0;
    double S, S1, S2;
    lp_sums(t, S, S1, S2);
    return b / S;
}

double dyadic_phi_d1(double t) {
    if (!(t > 0.0)) return 0.0;
    const double b = lp_bump(t);
    if (b == 0.0) return 0.0;
    double S, S1, S2;
    lp_sums(t, S, S1, S2);
    return (lp_bump_d1(t) * S - b * S1) / (S * S);
}

double dyadic_phi_d2(double t) {
    if (!(t > 0.0)) return 0.0;
    const double b = lp_bump(t);
    if (b == 0.0) return 0.0;
    double S, S1, S2;
    lp_sums(t, S, S1, S2);
    const double b1 = lp_bump_d1(t);
    const double b2 = lp_bump_d2(t);
    return b2 / S - 2.0 * b1 * S1 / (S * S) - b * S2 / (S * S) + 2.0 * b * S1 * S1 / (S * S * S);
}

std::vector<std::pair<int, double>> dyadic_partition(double a) {
    if (!(a > 0.0)) throw std::invalid_argument("dyadic_partition: argument must be positive");
    std::vector<std::pair<int, double>> terms;
    const int q_hi = static_cast<int>(std::floor(std::log2(2.0 / a))) + 1;
    for (int q = q_hi - 3; q <= q_hi; ++q) {
        const double w = dyadic_phi(std::ldexp(a, q));
        if (w != 0.0) terms.emplace_back(q, w);
    }
    return terms;
}

namespace {

constexpr double kZetaRadius = 0.015625;  // 2^-6 mollifier radius

// CDF of the unit mollifier, cubic-Hermite interpolated on a fine table
// (exact 0/1 outside [-1,1] so the partition of unity telescopes exactly).
double mollifier_cdf(double z) {
    static const int N = 4096;
    static const std::vector<double> table = [] {
        std::vector<double> F(N + 1, 0.0);
        const double h = 2.0 / N;
        for (int i = 1; i <= N; ++i) {
            const double a = -1.0 + (i - 1) * h;
            F[i] = F[i - 1] + integrate_gl([](double s) { return SpectralNoise::mollifier_rho(s); },
                                           a, a + h, 8);
        }
        // normalize the tiny quadrature drift so F(1) = 1 exactly
        for (int i = 0; i <= N; ++i) F[i] /= F[N];
        return F;
    }();
    if (z <= -1.0) return 0.0;
    if (z >= 1.0) return 1.0;
    const double h = 2.0 / N;
    const double u = (z + 1.0) / h;
    int i = static_cast<int>(u);
    if (i >= N) i = N - 1;
    const double s = u - i;
    const double z0 = -1.0 + i * h;
    const double f0 = table[i], f1 = table[i + 1];
    const double d0 = SpectralNoise::mollifier_rho(z0) * h;
    const double d1 = SpectralNoise::mollifier_rho(z0 + h) * h;
    const double s2 = s * s, s3 = s2 * s;
    return (2 * s3 - 3 * s2 + 1) * f0 + (s3 - 2 * s2 + s) * d0 + (-2 * s3 + 3 * s2) * f1 +
           (s3 - s2) * d1;
}

double ramp(double x) {
    return mollifier_cdf((x + 0.5) / kZetaRadius) - mollifier_cdf((x - 0.5) / kZetaRadius);
}

double ramp_d1(double x) {
    const double r = kZetaRadius;
    return (SpectralNoise::mollifier_rho((x + 0.5) / r) - SpectralNoise::mollifier_rho((x - 0.5) / r)) / r;
}

double rho_d1(double s) {
    if (std::abs(s) >= 1.0) return 0.0;
    const double g = 1.0 / (s * s - 1.0);
    return SpectralNoise::mollifier_rho(s) * (-2.0 * s * g * g);
}

double ramp_d2(double x) {
    const double r = kZetaRadius;
    return (rho_d1((x + 0.5) / r) - rho_d1((x - 0.5) / r)) / (r * r);
}

}  // namespace

double zeta_window(int d, const double* x) {
    double v = ramp(x[0]);
    if (d == 2) v *= ramp(x[1]);
    return v;
}

double zeta_window_deriv(int d, const double* x, const int* k) {
    auto factor = [](double xi, int order) {
        switch (order) {
            case 0: return ramp(xi);
            case 1: return ramp_d1(xi);
            default: return ramp_d2(xi);
        }
    };
    double v = factor(x[0], k[0]);
    if (d == 2) v *= factor(x[1], k[1]);
    return v;
}

namespace {

constexpr int kShiftRange = 3;  // periodization window; zeta kills |x| >= 1

// d_a^m of Psi(a,(t,x)) = t^m (d_t^m Phi)(a t, x).
double psi_da(int d, double a, double t, const double* x, int m) {
    if (a * t <= 0.0) return 0.0;
    const int k0[2] = {0, 0};
    return std::pow(t, m) * heat_phi_deriv(d, a * t, x, m, k0);
}

}  // namespace

double KernelSlice::psi_q(double a, double t, const double* x, int da_order) const {
    if (da_order < 0 || da_order > 2) throw std::invalid_argument("psi_q: da_order in {0,1,2}");
    const double s = std::ldexp(1.0, q_);  // 2^q
    // product rule over phi(2^q a) * Psi(a, .)
    double v = 0.0;
    const double phis[3] = {dyadic_phi(s * a), s * dyadic_phi_d1(s * a), s * s * dyadic_phi_d2(s * a)};
    static const int binom[3][3] = {{1, 0, 0}, {1, 1, 0}, {1, 2, 1}};
    for (int i = 0; i <= da_order; ++i) {
        if (phis[i] == 0.0) continue;
        v += binom[da_order][i] * phis[i] * psi_da(d_, a, t, x, da_order - i);
    }
    return v;
}

double KernelSlice::kernel(double a, double t, const double* x, int da_order) const {
    const double z = zeta_window(d_, x);
    if (z == 0.0) return 0.0;
    double sum = 0.0;
    if (d_ == 1) {
        for (int k = -kShiftRange; k <= kShiftRange; ++k) {
            const double xs = x[0] + k;
            sum += psi_q(a, t, &xs, da_order);
        }
    } else {
        for (int k0 = -kShiftRange; k0 <= kShiftRange; ++k0) {
            for (int k1 = -kShiftRange; k1 <= kShiftRange; ++k1) {
                const double xs[2] = {x[0] + k0, x[1] + k1};
                sum += psi_q(a, t, xs, da_order);
            }
        }
    }
    return sum * z;
}

double KernelSlice::kernel_deriv(double a, double t, const double* x, int l, const int* k) const {
    int ksum = 0;
    for (int i = 0; i < d_; ++i) ksum += k[i];
    if (l + ksum > 2) throw std::invalid_argument("kernel_deriv: order above 2 not provided");
    const double phi_w = dyadic_phi(std::ldexp(a, q_));
    if (phi_w == 0.0) return 0.0;

    // K = sum_shift Psi(a, t, x+shift) * zeta(x); Leibniz over the spatial
    // multi-index, time derivatives act on Psi only with d_t^l Psi = a^l ...
    auto psi_st = [&](const double* xs, int lt, const int* kx) {
        return std::pow(a, lt) * heat_phi_deriv(d_, a * t, xs, lt, kx);
    };

    double sum = 0.0;
    auto add_shift = [&](const double* xs) {
        if (ksum == 0) {
            const int k0[2] = {0, 0};
            sum += psi_st(xs, l, k0) * zeta_window(d_, x);
            return;
        }
        if (ksum == 1) {
            const int kz0[2] = {0, 0};
            sum += psi_st(xs, l, k) * zeta_window(d_, x) +
                   psi_st(xs, l, kz0) * zeta_window_deriv(d_, x, k);
            return;
        }
        // ksum == 2 (and l == 0): split the multi-index into the four
        // Leibniz contributions
        const int kz0[2] = {0, 0};
        if (d_ == 1 || k[0] == 2 || (d_ == 2 && k[1] == 2)) {
            const int i = (d_ == 2 && k[1] == 2) ? 1 : 0;
            int k1[2] = {0, 0};
            k1[i] = 1;
            sum += psi_st(xs, 0, k) * zeta_window(d_, x) +
                   2.0 * psi_st(xs, 0, k1) * zeta_window_deriv(d_, x, k1) +
                   psi_st(xs, 0, kz0) * zeta_window_deriv(d_, x, k);
        } else {
            // mixed d_0 d_1
            const int e0[2] = {1, 0}, e1[2] = {0, 1};
            sum += psi_st(xs, 0, k) * zeta_window(d_, x) +
                   psi_st(xs, 0, e0) * zeta_window_deriv(d_, x, e1) +
                   psi_st(xs, 0, e1) * zeta_window_deriv(d_, x, e0) +
                   psi_st(xs, 0, kz0) * zeta_window_deriv(d_, x, k);
        }
    };

    if (d_ == 1) {
        for (int s0 = -kShiftRange; s0 <= kShiftRange; ++s0) {
            const double xs = x[0] + s0;
            add_shift(&xs);
        }
    } else {
        for (int s0 = -kShiftRange; s0 <= kShiftRange; ++s0) {
            for (int s1 = -kShiftRange; s1 <= kShiftRange; ++s1) {
                const double xs[2] = {x[0] + s0, x[1] + s1};
                add_shift(xs);
            }
        }
    }
    return phi_w * sum;
}

double annulus_eta(double rho) {
    if (!(rho > 0.0)) return 0.0;
    const double b = lp_bump(rho);
    if (b == 0.0) return 0.0;
    double S = 0.0;
    const int m_hi = static_cast<int>(std::floor(std::log2(2.0 / rho))) + 1;
    for (int m = m_hi - 3; m <= m_hi; ++m) {
        S += lp_bump(std::ldexp(rho, m));
    }
    return b / S;
}

double KernelSlice::kernel_annulus(int n, double a, double t, const double* x) const {
    const double base = kernel(a, t, x);
    if (base == 0.0) return 0.0;
    double q = a * std::abs(t);
    for (int i = 0; i < d_; ++i) q += x[i] * x[i];
    const double rho = std::sqrt(q);  // parabolic radius of D^a (t,x)
    if (n >= 1) return annulus_eta(std::ldexp(rho, n)) * base;
    // n = 0 absorbs everything the finer annuli do not cover
    double tail = 0.0;
    for (int m = 1; m < 64; ++m) {
        const double w = annulus_eta(std::ldexp(rho, m));
        if (w != 0.0) tail += w;
        if (std::ldexp(rho, m) > 2.0) break;
    }
    return (1.0 - tail) * base;
}

KernelSlice::TaylorRemainder KernelSlice::taylor_remainder(double a, const double* x,
                                                           const double* y, const double* z) const {
    TaylorRemainder result;
    const int d = d_;
    std::array<double, 3> xyz{}, xz{};
    xyz[0] = x[0] + y[0] - z[0];
    xz[0] = x[0] - z[0];
    for (int i = 0; i < d; ++i) {
        xyz[1 + i] = x[1 + i] + y[1 + i] - z[1 + i];
        xz[1 + i] = x[1 + i] - z[1 + i];
    }
    double grad_dot_y = 0.0;
    for (int i = 0; i < d; ++i) {
        int k[2] = {0, 0};
        k[i] = 1;
        grad_dot_y += kernel_deriv(a, xz[0], &xz[1], 0, k) * y[1 + i];
    }
    result.direct = kernel(a, xyz[0], &xyz[1]) - kernel(a, xz[0], &xz[1]) - grad_dot_y;

    // Second-order anisotropic Taylor representation. Plugging
    // f(v) = K(a, x + S^v y - z) into f(1)-f(0)-f'(0) = int (1-v) f''(v) dv
    // gives f'' = 2 s K_t + 4 v^2 s^2 K_tt + 4 v s sum_i K_ti y_i
    //        + sum_i K_ii y_i^2 + 2 sum_{i<j} K_ij y_i y_j,
    // i.e. C_{1,0}=2, C_{2,0}=4, C_{1,e_i}=4, C_{0,2e_i}=1, C_{0,e_i+e_j}=2.
    const double s = y[0];
    auto integrand = [&](double v) {
        std::array<double, 3> p{};
        p[0] = x[0] + v * v * s - z[0];
        for (int i = 0; i < d; ++i) p[1 + i] = x[1 + i] + v * y[1 + i] - z[1 + i];
        const int k0[2] = {0, 0};
        double f2 = 2.0 * s * kernel_deriv(a, p[0], &p[1], 1, k0);
        f2 += 4.0 * v * v * s * s * kernel_deriv(a, p[0], &p[1], 2, k0);
        for (int i = 0; i < d; ++i) {
            int k1[2] = {0, 0};
            k1[i] = 1;
            f2 += 4.0 * v * s * y[1 + i] * kernel_deriv(a, p[0], &p[1], 1, k1);
            int k2[2] = {0, 0};
            k2[i] = 2;
            f2 += y[1 + i] * y[1 + i] * kernel_deriv(a, p[0], &p[1], 0, k2);
        }
        if (d == 2) {
            const int k11[2] = {1, 1};
            f2 += 2.0 * y[1] * y[2] * kernel_deriv(a, p[0], &p[1], 0, k11);
        }
        return (1.0 - v) * f2;
    };
    result.integral = integrate_gl_composite(integrand, 0.0, 1.0, 16, 16);
    return result;
}

}  // namespace spmlab
