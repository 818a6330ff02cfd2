#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

namespace spmlab {

// Uniform discretization of [0, T] x T^d with spacing dx = 1/n.
struct Grid {
    int d = 1;       // spatial dimension, 1 or 2
    int n = 64;      // points per axis, power of two, >= 8
    double dt = 1e-4;
    int n_t = 100;   // number of time steps; slices at t_m = m*dt, m = 0..n_t

    double dx() const { return 1.0 / n; }
    double final_time() const { return dt * n_t; }
    std::size_t points_per_slice() const { return d == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n; }
    std::size_t num_slices() const { return static_cast<std::size_t>(n_t) + 1; }

    std::size_t site(int ix, int iy = 0) const {
        return d == 1 ? static_cast<std::size_t>(ix) : static_cast<std::size_t>(ix) * n + iy;
    }
    // Wraps a (possibly negative) index onto [0, n).
    int wrap(int i) const {
        const int r = i % n;
        return r < 0 ? r + n : r;
    }
    double coord(int i) const { return static_cast<double>(i) / n; }

    // Throws std::invalid_argument when an invariant is violated.
    void validate() const;
};

// Point (t, x) with x canonicalized to [0,1) per axis.
struct SpaceTimePoint {
    double t = 0.0;
    std::array<double, 2> x{0.0, 0.0};
    int d = 1;

    static SpaceTimePoint make(double t, double x1, int d = 1, double x2 = 0.0);
};

// Canonical torus representative in [0, 1).
double wrap_unit(double x);
// Shortest representative in [-1/2, 1/2).
double wrap_symmetric(double x);

// Parabolic Carnot-Caratheodory norm sqrt(|t| + x1^2 + ... + xd^2), spatial
// components taken as the shortest torus representative.
double parabolic_norm(const SpaceTimePoint& p);

// Same norm for a raw (non-wrapped) space-time displacement.
double parabolic_norm_raw(double t, const double* x, int d);

// Parabolic rescaling S^lambda (t, x) = (lambda^2 t, lambda x).
SpaceTimePoint parabolic_scale(double lambda, const SpaceTimePoint& p);

// The canonical smooth bump c * exp(1/(q - 1)) for q = |t| + |x|^2 < 1, with
// c normalized so the profile and its derivatives up to second order stay
// bounded by 1 on the unit parabolic ball.
double bump_profile(int d, double t, const double* x);
// L^1 mass of the unit profile over R x R^d (cached quadrature value).
double bump_profile_mass(int d);
// Spatial mass of the time slice tau, i.e. integral of profile(tau, .) dx.
double bump_profile_slice_mass(int d, double tau);

// Reference spatial bump of radius 1/2 with unit mass (used to kill the
// zeroth spatial moment of the class-B1 profile).
double reference_spatial_bump(int d, const double* w);

struct TestFunction {
    SpaceTimePoint base;
    double scale = 1.0;      // lambda in (0, 1]
    int moments_killed = 0;  // 0: plain profile; 1: spatial moments 1, y_i removed
};

// lambda^{-(d+2)} phi(S^{1/lambda}(eval - base)), summed over the adjacent
// spatial lattice shifts so values are honest torus periodizations.
double rescaled_test(const TestFunction& tf, const SpaceTimePoint& eval);

// The underlying (non-rescaled) profile of tf at displacement (tau, w).
double test_profile(const TestFunction& tf, int d, double tau, const double* w);

}  // namespace spmlab
