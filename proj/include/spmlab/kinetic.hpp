#pragma once

#include <functional>
#include <span>
#include <vector>

#include "spmlab/nonlinearity.hpp"
#include "spmlab/spde_solver.hpp"

namespace spmlab {

// Kinetic function: 1 for 0 <= v < u, -1 for u <= v < 0, else 0.
int chi(double u_val, double v);

// Smooth velocity cutoffs built from the dyadic partition: phi_greater
// vanishes on [0,1], equals 1 on [2,inf); phi_less = 1 - phi_greater.
double phi_greater(double x);
double phi_less(double x);

// u^< for a single value: signed integral of phi_less(a(v)/delta) over [0,u].
// Exact plateau handling plus Gauss-Legendre across the transition band.
double split_scalar(double u, const Nonlinearity& nl, double delta);

struct KineticSplit {
    double delta = 0.5;
    std::vector<double> u_less;
    std::vector<double> u_greater;
    int q_low = 0;   // active dyadic indices q with q_low <= q < q_high
    int q_high = 0;  // q_high = -log2(delta): split uses delta < 2^{-q}
};

// Splits a grid function into small/large diffusivity parts; delta must be
// dyadic in (0,1).
KineticSplit split_velocities(std::span<const double> u, const Nonlinearity& nl, double delta);

// Space-time-velocity test function with the analytic derivatives the weak
// form needs; support in (t_lo, t_hi) x T^d x (v_lo, v_hi).
struct KineticTestFunction {
    std::function<double(double t, double x, double y, double v)> value;
    std::function<double(double t, double x, double y, double v)> dt;
    std::function<double(double t, double x, double y, double v)> laplacian;
    std::function<double(double t, double x, double y, double v)> dv;
    double t_lo = 0.0, t_hi = 1.0;
    double v_lo = -1.0, v_hi = 1.0;
};

// Product bump: smooth bump in t on (t_lo, t_hi), 1 + trig modulation in x,
// smooth bump in v centered at v_center with radius v_radius.
KineticTestFunction make_kinetic_bump(int d, double t_lo, double t_hi, double v_center,
                                      double v_radius);

// Weak-form residual LHS - RHS of the kinetic formulation on a trajectory:
//   LHS = int chi (-d_t - a(v) Lap) phi,
//   RHS = int (sigma(u) xi - sigma' sigma(u) C^{a(u)}) phi(.,u)
//       - int a(u)|grad u|^2 d_v phi(.,u),
// all by trapezoid in t, Riemann in x and Gauss-Legendre in v. The forcing
// and counterterm cutoff must match the ones the trajectory was solved with.
// Throws std::invalid_argument when the phi support touches t in {0, T}.
double kinetic_residual(const SolutionField& sol, const Nonlinearity& nl, const ForcingFn& forcing,
                        const KineticTestFunction& phi, int v_nodes = 24);

}  // namespace spmlab
