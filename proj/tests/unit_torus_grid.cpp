#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spmlab/numerics.hpp"
#include "spmlab/rng.hpp"
#include "spmlab/torus_grid.hpp"

using namespace spmlab;

TEST_CASE("parabolic norm basics") {
    CHECK(parabolic_norm(SpaceTimePoint::make(0.25, 0.0, 2, 0.0)) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(parabolic_norm(SpaceTimePoint::make(0.0, 0.3, 2, 0.4)) == doctest::Approx(0.5).epsilon(1e-14));
    // direct formula evaluation: sqrt(1 + 0.1^2 + 0.2^2)
    CHECK(parabolic_norm(SpaceTimePoint::make(1.0, 0.1, 2, 0.2)) ==
          doctest::Approx(1.02469507659596).epsilon(1e-14));
}

TEST_CASE("parabolic norm uses the shortest torus representative") {
    // 0.9 is distance 0.1 from the origin on the torus
    CHECK(parabolic_norm(SpaceTimePoint::make(0.0, 0.9, 1)) == doctest::Approx(0.1).epsilon(1e-12));
    CHECK(parabolic_norm(SpaceTimePoint::make(0.0, 0.5, 1)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("parabolic norm scales linearly under S^lambda") {
    CounterRng rng(7, 1);
    for (int i = 0; i < 200; ++i) {
        const double t = 0.2 * (rng.next_uniform() - 0.5);
        const double x1 = 0.4 * (rng.next_uniform() - 0.5);
        const double x2 = 0.4 * (rng.next_uniform() - 0.5);
        const double lambda = 0.1 + 0.9 * rng.next_uniform();
        SpaceTimePoint p = SpaceTimePoint::make(t, x1, 2, x2);
        const double lhs = parabolic_norm(parabolic_scale(lambda, p));
        CHECK(lhs == doctest::Approx(lambda * parabolic_norm(p)).epsilon(1e-12));
    }
}

TEST_CASE("rescaled test function identity scaling and support") {
    TestFunction tf{SpaceTimePoint::make(0.5, 0.5, 1), 1.0, 0};
    const double zero[1] = {0.0};
    CHECK(rescaled_test(tf, tf.base) == doctest::Approx(bump_profile(1, 0.0, zero)).epsilon(1e-14));

    // outside the parabolic ball of radius lambda
    tf.scale = 0.25;
    CHECK(rescaled_test(tf, SpaceTimePoint::make(0.5 + 0.07, 0.5, 1)) == 0.0);
    CHECK(rescaled_test(tf, SpaceTimePoint::make(0.5, 0.5 + 0.26, 1)) == 0.0);
    CHECK(rescaled_test(tf, SpaceTimePoint::make(0.5, 0.5 + 0.2, 1)) > 0.0);
}

namespace {

// quadrature oracle: spatial Riemann sum on the torus (spectrally accurate
// for the smooth compactly supported slices), Gauss-Legendre panels in time
// split at the base time where the profile has its |t| kink
double grid_mass(const TestFunction& tf, int n_space) {
    const int d = tf.base.d;
    const double lambda = tf.scale;
    const double t0 = tf.base.t;
    auto spatial = [&](double t) {
        PairwiseAccumulator acc;
        for (int i = 0; i < n_space; ++i) {
            if (d == 1) {
                acc.add(rescaled_test(tf, SpaceTimePoint::make(t, (i + 0.5) / n_space, 1)));
            } else {
                for (int j = 0; j < n_space; ++j) {
                    acc.add(rescaled_test(
                        tf, SpaceTimePoint::make(t, (i + 0.5) / n_space, 2, (j + 0.5) / n_space)));
                }
            }
        }
        return acc.total() / std::pow(n_space, d);
    };
    return integrate_gl_composite(spatial, t0 - lambda * lambda, t0, 8, 16) +
           integrate_gl_composite(spatial, t0, t0 + lambda * lambda, 8, 16);
}

}  // namespace

TEST_CASE("rescaled test mass is lambda invariant") {
    const double reference = bump_profile_mass(1);
    double previous = -1.0;
    for (double lambda : {1.0, 0.5, 0.25}) {
        TestFunction tf{SpaceTimePoint::make(0.5, 0.37, 1), lambda, 0};
        const double mass = grid_mass(tf, 512);
        CHECK(mass == doctest::Approx(reference).epsilon(1e-6));
        if (previous > 0.0) CHECK(mass == doctest::Approx(previous).epsilon(1e-6));
        previous = mass;
    }
}

TEST_CASE("lattice shifts of the base leave torus values unchanged") {
    TestFunction tf{SpaceTimePoint::make(0.4, 0.1, 2, 0.9), 0.5, 0};
    TestFunction shifted = tf;
    shifted.base = SpaceTimePoint::make(0.4, 0.1 + 3.0, 2, 0.9 - 2.0);
    CounterRng rng(11, 2);
    for (int i = 0; i < 100; ++i) {
        SpaceTimePoint p = SpaceTimePoint::make(0.4 + 0.4 * (rng.next_uniform() - 0.5),
                                                rng.next_uniform(), 2, rng.next_uniform());
        CHECK(rescaled_test(tf, p) == doctest::Approx(rescaled_test(shifted, p)).epsilon(1e-14));
    }
}

TEST_CASE("moment-killed profile has vanishing spatial moments") {
    // slice-wise: integral of the B1 profile and its first moment vanish
    TestFunction tf{SpaceTimePoint::make(0.0, 0.0, 1), 1.0, 1};
    for (double tau : {0.0, 0.3, -0.6}) {
        PairwiseAccumulator mass, first;
        const int n = 8192;
        for (int i = 0; i < n; ++i) {
            const double w = -1.0 + 2.0 * (i + 0.5) / n;
            const double v = test_profile(tf, 1, tau, &w);
            mass.add(v);
            first.add(v * w);
        }
        CHECK(std::abs(mass.total() * 2.0 / n) < 1e-10);
        CHECK(std::abs(first.total() * 2.0 / n) < 1e-12);
    }
}

TEST_CASE("profile derivatives stay bounded by one") {
    // finite-difference spot check of the class-B normalization
    const double h = 1e-5;
    double sup_val = 0.0, sup_d1 = 0.0, sup_d2 = 0.0;
    for (int i = 0; i < 400; ++i) {
        const double x = -0.999 + 1.998 * i / 399.0;
        auto f = [&](double w) { return bump_profile(1, 0.0, &w); };
        sup_val = std::max(sup_val, std::abs(f(x)));
        sup_d1 = std::max(sup_d1, std::abs((f(x + h) - f(x - h)) / (2 * h)));
        sup_d2 = std::max(sup_d2, std::abs((f(x + h) - 2 * f(x) + f(x - h)) / (h * h)));
    }
    CHECK(sup_val <= 1.0);
    CHECK(sup_d1 <= 1.0 + 1e-6);
    CHECK(sup_d2 <= 1.0 + 1e-4);
}

TEST_CASE("grid invariants are enforced") {
    Grid g;
    g.n = 48;  // not a power of two
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.n = 64;
    g.dt = -1.0;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
    g.dt = 1e-3;
    g.d = 3;
    CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}
