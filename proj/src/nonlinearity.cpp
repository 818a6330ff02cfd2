#include "spmlab/nonlinearity.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace spmlab {

namespace {

double sgn(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

// C^inf transition: 0 for s <= 0, 1 for s >= 1.
double smooth_transition(double s) {
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    const double e0 = std::exp(-1.0 / s);
    const double e1 = std::exp(-1.0 / (1.0 - s));
    return e0 / (e0 + e1);
}

double smooth_transition_d1(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    const double e0 = std::exp(-1.0 / s);
    const double e1 = std::exp(-1.0 / (1.0 - s));
    const double d0 = e0 / (s * s);
    const double d1 = -e1 / ((1.0 - s) * (1.0 - s));
    const double den = e0 + e1;
    // T' = (d0 e1 - e0 d1) / (e0 + e1)^2
    return (d0 * e1 - e0 * d1) / (den * den);
}

double smooth_transition_d2(double s) {
    if (s <= 0.0 || s >= 1.0) return 0.0;
    const double t = 1.0 - s;
    const double e0 = std::exp(-1.0 / s);
    const double e1 = std::exp(-1.0 / t);
    const double d0 = e0 / (s * s);
    const double d1 = -e1 / (t * t);
    const double dd0 = e0 * (1.0 - 2.0 * s) / (s * s * s * s);
    const double dd1 = e1 * (2.0 * s - 1.0) / (t * t * t * t);
    const double den = e0 + e1;
    const double u = d0 * e1 - e0 * d1;
    const double up = dd0 * e1 - e0 * dd1;
    const double wp = 2.0 * den * (d0 + d1);
    return (up * den * den - u * wp) / (den * den * den * den);
}

// Plateau bump: 1 on [-1/2, 1/2], 0 outside (-1, 1).
double plateau_bump(double r) { return smooth_transition(2.0 - 2.0 * std::abs(r)); }

double plateau_bump_d1(double r) {
    return smooth_transition_d1(2.0 - 2.0 * std::abs(r)) * (-2.0 * sgn(r));
}

double plateau_bump_d2(double r) { return smooth_transition_d2(2.0 - 2.0 * std::abs(r)) * 4.0; }

// Quintic smoothstep s -> 10 s^3 - 15 s^4 + 6 s^5 and its antiderivative;
// used for the closed-form Theta.
double smoothstep5(double s) { return s * s * s * (10.0 + s * (-15.0 + 6.0 * s)); }
double smoothstep5_antideriv(double s) {
    // int_0^s smoothstep5 = 2.5 s^4 - 3 s^5 + s^6
    return s * s * s * s * (2.5 + s * (-3.0 + s));
}

}  // namespace

Nonlinearity Nonlinearity::make_porous(double M) {
    if (!(M > 1.0)) throw std::invalid_argument("make_porous: M must exceed 1");
    Nonlinearity nl;
    nl.diffusion_kind_ = DiffusionKind::Porous;
    nl.M_ = M;
    return nl;
}

Nonlinearity Nonlinearity::regularize(double M, double eps) {
    if (!(M > 1.0 && M < 2.0)) throw std::invalid_argument("regularize: requires 1 < M < 2");
    if (!(eps > 0.0)) throw std::invalid_argument("regularize: eps must be positive");
    Nonlinearity nl;
    nl.diffusion_kind_ = DiffusionKind::RegularizedPorous;
    nl.M_ = M;
    nl.eps_reg_ = eps;
    nl.p4_ = M * (M - 1.0) * (M - 3.0) * std::pow(eps, M - 5.0) / 8.0;
    nl.p2_ = M * (M - 1.0) * (5.0 - M) * std::pow(eps, M - 3.0) / 4.0;
    nl.p0_ = M * (1.0 - (M - 1.0) * (7.0 - M) / 8.0) * std::pow(eps, M - 1.0);
    return nl;
}

Nonlinearity Nonlinearity::make_constant_diffusion(double a_value) {
    if (!(a_value > 0.0)) throw std::invalid_argument("make_constant_diffusion: value must be positive");
    Nonlinearity nl;
    nl.diffusion_kind_ = DiffusionKind::Constant;
    nl.a_const_ = a_value;
    return nl;
}

Nonlinearity& Nonlinearity::with_sigma(int N, double C_supp) {
    if (N < 2) throw std::invalid_argument("with_sigma: N must be >= 2");
    if (!(C_supp > 0.0)) throw std::invalid_argument("with_sigma: C_supp must be positive");
    sigma_kind_ = SigmaKind::PowerBump;
    N_ = N;
    C_supp_ = C_supp;
    return *this;
}

Nonlinearity& Nonlinearity::with_constant_sigma(double value) {
    sigma_kind_ = SigmaKind::Constant;
    sigma_const_ = value;
    return *this;
}

Nonlinearity& Nonlinearity::with_zero_sigma() {
    sigma_kind_ = SigmaKind::Zero;
    return *this;
}

double Nonlinearity::a(double v) const {
    switch (diffusion_kind_) {
        case DiffusionKind::Constant:
            return a_const_;
        case DiffusionKind::Porous:
            return M_ * std::pow(std::abs(v), M_ - 1.0);
        case DiffusionKind::RegularizedPorous: {
            const double av = std::abs(v);
            if (av > eps_reg_) return M_ * std::pow(av, M_ - 1.0);
            const double v2 = v * v;
            return (p4_ * v2 + p2_) * v2 + p0_;
        }
    }
    return 0.0;
}

double Nonlinearity::a_prime(double v) const {
    switch (diffusion_kind_) {
        case DiffusionKind::Constant:
            return 0.0;
        case DiffusionKind::Porous:
            if (v == 0.0 && M_ < 3.0) throw std::domain_error("a_prime: singular at v=0 for M<3");
            return M_ * (M_ - 1.0) * std::pow(std::abs(v), M_ - 2.0) * sgn(v);
        case DiffusionKind::RegularizedPorous: {
            const double av = std::abs(v);
            if (av > eps_reg_) return M_ * (M_ - 1.0) * std::pow(av, M_ - 2.0) * sgn(v);
            return (4.0 * p4_ * v * v + 2.0 * p2_) * v;
        }
    }
    return 0.0;
}

double Nonlinearity::a_second(double v) const {
    switch (diffusion_kind_) {
        case DiffusionKind::Constant:
            return 0.0;
        case DiffusionKind::Porous:
            if (v == 0.0 && M_ < 3.0) throw std::domain_error("a_second: singular at v=0 for M<3");
            return M_ * (M_ - 1.0) * (M_ - 2.0) * std::pow(std::abs(v), M_ - 3.0);
        case DiffusionKind::RegularizedPorous: {
            const double av = std::abs(v);
            if (av > eps_reg_) return M_ * (M_ - 1.0) * (M_ - 2.0) * std::pow(av, M_ - 3.0);
            return 12.0 * p4_ * v * v + 2.0 * p2_;
        }
    }
    return 0.0;
}

double Nonlinearity::sigma(double v) const {
    switch (sigma_kind_) {
        case SigmaKind::Zero:
            return 0.0;
        case SigmaKind::Constant:
            return sigma_const_;
        case SigmaKind::PowerBump:
            return std::pow(v, N_) * plateau_bump(v / C_supp_);
    }
    return 0.0;
}

double Nonlinearity::sigma_prime(double v) const {
    switch (sigma_kind_) {
        case SigmaKind::Zero:
        case SigmaKind::Constant:
            return 0.0;
        case SigmaKind::PowerBump: {
            const double r = v / C_supp_;
            const double b = plateau_bump(r);
            const double b1 = plateau_bump_d1(r) / C_supp_;
            return N_ * std::pow(v, N_ - 1) * b + std::pow(v, N_) * b1;
        }
    }
    return 0.0;
}

double Nonlinearity::sigma_second(double v) const {
    switch (sigma_kind_) {
        case SigmaKind::Zero:
        case SigmaKind::Constant:
            return 0.0;
        case SigmaKind::PowerBump: {
            const double r = v / C_supp_;
            const double b = plateau_bump(r);
            const double b1 = plateau_bump_d1(r) / C_supp_;
            const double b2 = plateau_bump_d2(r) / (C_supp_ * C_supp_);
            return N_ * (N_ - 1.0) * std::pow(v, N_ - 2) * b + 2.0 * N_ * std::pow(v, N_ - 1) * b1 +
                   std::pow(v, N_) * b2;
        }
    }
    return 0.0;
}

double Nonlinearity::theta(double v) const {
    // Theta(v) = int_0^v theta'(w) dw with theta' = 1 on [-C, C] and a
    // quintic smoothstep decay to 0 across [C, 2C].
    const double C = C_supp_;
    const double av = std::abs(v);
    double val;
    if (av <= C) {
        val = av;
    } else if (av >= 2.0 * C) {
        // C + C * int_0^1 (1 - smoothstep5) = C + C/2
        val = 1.5 * C;
    } else {
        const double s = (av - C) / C;
        val = C + C * (s - smoothstep5_antideriv(s));
    }
    return sgn(v) * val;
}

double Nonlinearity::theta_prime(double v) const {
    const double C = C_supp_;
    const double av = std::abs(v);
    if (av <= C) return 1.0;
    if (av >= 2.0 * C) return 0.0;
    return 1.0 - smoothstep5((av - C) / C);
}

double Nonlinearity::a_floor() const {
    switch (diffusion_kind_) {
        case DiffusionKind::Constant:
            return a_const_;
        case DiffusionKind::RegularizedPorous:
            return p0_;
        case DiffusionKind::Porous:
            return 0.0;
    }
    return 0.0;
}

double Nonlinearity::a_ceil_on_support() const {
    if (diffusion_kind_ == DiffusionKind::Constant) return a_const_;
    // a is even and increasing in |v|; sigma lives in [-C_supp, C_supp]
    return a(sigma_kind_ == SigmaKind::PowerBump ? C_supp_ : 2.0);
}

AssumptionReport validate_assumptions(const Nonlinearity& nl, double alpha) {
    if (!(alpha > 2.0 / 3.0 && alpha < 1.0)) {
        throw std::invalid_argument("validate_assumptions: alpha must lie in (2/3, 1)");
    }
    AssumptionReport report;
    const double M = nl.exponent_M();
    report.exponent_bound = 1.0 + (3.0 * alpha - 2.0) / (alpha * (2.0 - alpha));
    report.exponent_in_range =
        nl.diffusion_kind() == Nonlinearity::DiffusionKind::Constant || M < report.exponent_bound;
    report.vanishing_order_ok = nl.vanishing_order_N() >= M + 1.0;

    const int N = nl.vanishing_order_N();
    const double v_hi = 2.0 * nl.support_radius();
    std::vector<double> samples;
    for (int i = 0; i <= 240; ++i) {
        const double v = 1e-6 * std::pow(v_hi / 1e-6, i / 240.0);
        samples.push_back(v);
        samples.push_back(-v);
    }
    bool finite = true;
    for (double v : samples) {
        const double av = std::abs(v);
        const double aval = nl.a(v);
        const double r0 = std::pow(av, M - 1.0) / aval;
        const double r1 = std::abs(nl.a_prime(v)) / std::pow(av, M - 2.0);
        const double r2 = std::abs(nl.a_second(v)) / std::pow(av, M - 3.0);
        report.sup_v_pow_over_a = std::max(report.sup_v_pow_over_a, r0);
        report.sup_a_prime_ratio = std::max(report.sup_a_prime_ratio, r1);
        report.sup_a_second_ratio = std::max(report.sup_a_second_ratio, r2);
        const double s0 = std::abs(nl.sigma(v)) / std::pow(av, N);
        const double s1 = std::abs(nl.sigma_prime(v)) / std::pow(av, N - 1.0);
        const double s2 = std::abs(nl.sigma_second(v)) / std::pow(av, N - 2.0);
        report.sup_sigma_ratio[0] = std::max(report.sup_sigma_ratio[0], s0);
        report.sup_sigma_ratio[1] = std::max(report.sup_sigma_ratio[1], s1);
        report.sup_sigma_ratio[2] = std::max(report.sup_sigma_ratio[2], s2);
        finite = finite && std::isfinite(r0) && std::isfinite(r1) && std::isfinite(r2) &&
                 std::isfinite(s0) && std::isfinite(s1) && std::isfinite(s2);
    }
    report.ratios_finite = finite;

    std::ostringstream os;
    os << "M=" << M << " bound=" << report.exponent_bound
       << (report.exponent_in_range ? " (ok)" : " (violated)") << ", N=" << N
       << (report.vanishing_order_ok ? " >= M+1" : " < M+1");
    report.summary = os.str();
    return report;
}

}  // namespace spmlab
