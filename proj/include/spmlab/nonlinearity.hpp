#pragma once

#include <string>

namespace spmlab {

// The pair (a, sigma) together with the flattening map Theta. Diffusion is
// the power-law family M|v|^(M-1), optionally glued to a quartic polynomial
// on |v| <= eps_reg so it is C^2 and bounded below; sigma vanishes to order
// N at 0 and is compactly supported in [-C_supp, C_supp].
class Nonlinearity {
public:
    enum class DiffusionKind { Porous, RegularizedPorous, Constant };
    enum class SigmaKind { PowerBump, Constant, Zero };

    static Nonlinearity make_porous(double M);
    static Nonlinearity regularize(double M, double eps);
    static Nonlinearity make_constant_diffusion(double a_value);

    // Attaches sigma(v) = v^N * bump(v / C_supp); keeps the diffusion part.
    Nonlinearity& with_sigma(int N, double C_supp);
    Nonlinearity& with_constant_sigma(double value);
    Nonlinearity& with_zero_sigma();

    double a(double v) const;
    double a_prime(double v) const;
    double a_second(double v) const;

    double sigma(double v) const;
    double sigma_prime(double v) const;
    double sigma_second(double v) const;

    double theta(double v) const;
    double theta_prime(double v) const;

    // Strictly positive lower bound of a (0 for the unregularized family).
    double a_floor() const;
    // Uniform upper bound of a over the support of sigma (used for CFL).
    double a_ceil_on_support() const;

    DiffusionKind diffusion_kind() const { return diffusion_kind_; }
    SigmaKind sigma_kind() const { return sigma_kind_; }
    double exponent_M() const { return M_; }
    double eps_reg() const { return eps_reg_; }
    int vanishing_order_N() const { return N_; }
    double support_radius() const { return C_supp_; }
    double quartic_p4() const { return p4_; }
    double quartic_p2() const { return p2_; }
    double quartic_p0() const { return p0_; }

private:
    Nonlinearity() = default;

    DiffusionKind diffusion_kind_ = DiffusionKind::Porous;
    double M_ = 1.5;
    double eps_reg_ = 0.0;
    double a_const_ = 1.0;
    double p4_ = 0.0, p2_ = 0.0, p0_ = 0.0;

    SigmaKind sigma_kind_ = SigmaKind::Zero;
    int N_ = 3;
    double C_supp_ = 1.0;
    double sigma_const_ = 0.0;
};

struct AssumptionReport {
    bool exponent_in_range = false;   // M below the alpha-dependent bound
    double exponent_bound = 0.0;      // 1 + (3a-2)/(a(2-a))
    bool vanishing_order_ok = false;  // N >= M+1
    // empirical constants: sampled sups of the ratio bounds
    double sup_v_pow_over_a = 0.0;      // |v|^(M-1) / a(v)
    double sup_a_prime_ratio = 0.0;     // |a'(v)| / |v|^(M-2)
    double sup_a_second_ratio = 0.0;    // |a''(v)| / |v|^(M-3)
    double sup_sigma_ratio[3] = {0, 0, 0};  // |sigma^(j)(v)| / |v|^(N-j)
    bool ratios_finite = false;
    std::string summary;

    bool pass() const { return exponent_in_range && vanishing_order_ok && ratios_finite; }
};

// Checks the quantitative hypotheses at the given noise regularity
// alpha in (2/3, 1); sups are sampled over log-spaced |v|.
AssumptionReport validate_assumptions(const Nonlinearity& nl, double alpha);

}  // namespace spmlab
