#pragma once

#include <utility>
#include <vector>

namespace spmlab {

// d-dimensional heat kernel (4 pi t)^(-d/2) exp(-|x|^2 / 4t), zero for t <= 0.
double heat_phi(int d, double t, const double* x);
// Derivative d_t^l d_x^k Phi for 2l + |k|_1 <= 2 (k as a multi-index array).
double heat_phi_deriv(int d, double t, const double* x, int l, const int* k);

// Dilated kernel Psi(a, (t,x)) = Phi(a t, x); throws for a <= 0.
double dilated_psi(int d, double a, double t, const double* x);

// Smooth dyadic bump phi with supp phi in [1/2, 2] and
// sum_q phi(2^q t) = 1 for all t > 0, plus two derivatives.
double dyadic_phi(double t);
double dyadic_phi_d1(double t);
double dyadic_phi_d2(double t);

// All q with phi(2^q a) != 0 (at most two) and their weights.
std::vector<std::pair<int, double>> dyadic_partition(double a);

// Smooth spatial localization zeta: [0,1]-valued, supported in |x| < 1,
// with sum_k zeta(x + k) = 1 (unit-cube indicator mollified at radius
// 2^-6; one-dimensional factors, tensorized for d = 2).
double zeta_window(int d, const double* x);
double zeta_window_deriv(int d, const double* x, const int* k);  // |k|_1 <= 2

// One dyadic slice of the kernel machinery at fixed localization index q:
// Psi_q(a, .) = phi(2^q a) Psi(a, .), its compactly supported periodization
// replacement K, and the parabolic annulus pieces K^(n).
class KernelSlice {
public:
    KernelSlice(int d, int q) : d_(d), q_(q) {}

    int dimension() const { return d_; }
    int dyadic_index() const { return q_; }

    // da_order in {0, 1, 2} takes a-derivatives.
    double psi_q(double a, double t, const double* x, int da_order = 0) const;
    double kernel(double a, double t, const double* x, int da_order = 0) const;
    // d_t^l d_x^k of K for 2l + |k|_1 <= 2.
    double kernel_deriv(double a, double t, const double* x, int l, const int* k) const;
    // Annulus piece K^(n); the n = 0 element absorbs the far field so that
    // sum_{n >= 0} K^(n) = K away from the space-time origin.
    double kernel_annulus(int n, double a, double t, const double* x) const;

    struct TaylorRemainder {
        double direct = 0.0;    // K(a,x+y-z) - K(a,x-z) - grad K(a,x-z).y
        double integral = 0.0;  // second-order anisotropic Taylor representation
    };
    // x, y, z are space-time points packed as (t, x[0..d)).
    TaylorRemainder taylor_remainder(double a, const double* x, const double* y,
                                     const double* z) const;

private:
    int d_;
    int q_;
};

// Parabolic annulus weight eta_n(rho) with sum over all n of eta_n(2^n rho)=1
// for rho > 0 (same normalized-bump construction as dyadic_phi, multiplicative
// in the parabolic radius).
double annulus_eta(double rho);

}  // namespace spmlab
