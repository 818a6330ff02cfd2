#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "spmlab/heat_kernels.hpp"
#include "spmlab/numerics.hpp"
#include "spmlab/rng.hpp"

using namespace spmlab;

TEST_CASE("heat kernel point values and indicator") {
    const double origin[2] = {0.0, 0.0};
    CHECK(heat_phi(2, 1.0, origin) == doctest::Approx(0.07957747154594767).epsilon(1e-15));
    CHECK(heat_phi(2, -0.5, origin) == 0.0);
    CHECK(heat_phi(1, 0.0, origin) == 0.0);
}

TEST_CASE("heat kernel has unit mass") {
    for (double t : {0.01, 0.1, 1.0}) {
        const double width = 20.0 * std::sqrt(t);
        const double mass1 = integrate_gl_composite(
            [&](double x) { return heat_phi(1, t, &x); }, -width, width, 32, 16);
        CHECK(mass1 == doctest::Approx(1.0).epsilon(1e-12));
        // 2d via the radial formula
        const double mass2 = 2.0 * M_PI *
                             integrate_gl_composite(
                                 [&](double r) {
                                     const double x[2] = {r, 0.0};
                                     return heat_phi(2, t, x) * r;
                                 },
                                 0.0, width, 32, 16);
        CHECK(mass2 == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("dilated kernel is a time rescaling") {
    const double x[2] = {0.3, -0.1};
    CHECK(dilated_psi(2, 1.0, 0.7, x) == doctest::Approx(heat_phi(2, 0.7, x)).epsilon(1e-15));
    CHECK(dilated_psi(2, 2.0, 0.5, x) == doctest::Approx(heat_phi(2, 1.0, x)).epsilon(1e-15));
    CHECK_THROWS_AS(dilated_psi(2, 0.0, 0.5, x), std::invalid_argument);
}

TEST_CASE("dilated kernel semigroup property under spatial convolution") {
    // quadrature oracle on the line: Psi(a,t,.) * Psi(a,s,.) = Psi(a,t+s,.)
    const double a = 2.0, t = 0.02, s = 0.03;
    for (double x0 : {0.0, 0.15}) {
        const double conv = integrate_gl_composite(
            [&](double y) {
                const double d1 = x0 - y;
                return dilated_psi(1, a, t, &d1) * dilated_psi(1, a, s, &y);
            },
            -3.0, 3.0, 64, 16);
        const double direct = dilated_psi(1, a, t + s, &x0);
        CHECK(conv == doctest::Approx(direct).epsilon(1e-9));
    }
}

TEST_CASE("dyadic partition of unity") {
    // direct summation oracle
    for (double a : {0.3, 1.0, 0.75, 2.7, 3.0, 0.0625}) {
        const auto terms = dyadic_partition(a);
        CHECK(terms.size() <= 2);
        double sum = 0.0;
        for (const auto& [q, w] : terms) {
            sum += w;
            CHECK(w >= 0.0);
            CHECK(w <= 1.0);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    // a = 3 activates only q <= 0
    for (const auto& [q, w] : dyadic_partition(3.0)) CHECK(q <= 0);
    // exact powers of two still sum to one
    for (const auto& [q, w] : dyadic_partition(0.25)) CHECK(w >= 0.0);
    CHECK_THROWS_AS(dyadic_partition(0.0), std::invalid_argument);
}

TEST_CASE("dyadic bump derivatives match finite differences") {
    const double h = 1e-6;
    for (double t : {0.6, 0.9, 1.4, 1.9}) {
        const double fd1 = (dyadic_phi(t + h) - dyadic_phi(t - h)) / (2 * h);
        const double fd2 = (dyadic_phi(t + h) - 2 * dyadic_phi(t) + dyadic_phi(t - h)) / (h * h);
        CHECK(dyadic_phi_d1(t) == doctest::Approx(fd1).epsilon(1e-6));
        CHECK(dyadic_phi_d2(t) == doctest::Approx(fd2).epsilon(1e-3));
    }
}

TEST_CASE("zeta window tiles the lattice") {
    for (double x : {-0.49, -0.2, 0.0, 0.37, 0.51}) {
        double sum = 0.0;
        for (int k = -2; k <= 2; ++k) {
            const double xs = x + k;
            sum += zeta_window(1, &xs);
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    }
    const double far[2] = {1.01, 0.0};
    CHECK(zeta_window(2, far) == 0.0);
}

TEST_CASE("kernel periodization matches the dilated kernel sum") {
    // K's periodization equals Psi_q's periodization
    KernelSlice slice(1, 2);
    const double a = 0.3;  // inside supp phi(2^2 a) = (1/8, 1/2)
    for (double t : {0.02, 0.1}) {
        for (double x : {0.0, 0.21, 0.49}) {
            double periodized_K = 0.0, periodized_psi = 0.0;
            for (int k = -4; k <= 4; ++k) {
                const double xs = x + k;
                periodized_K += slice.kernel(a, t, &xs);
                periodized_psi += slice.psi_q(a, t, &xs);
            }
            CHECK(periodized_K == doctest::Approx(periodized_psi).epsilon(1e-10));
        }
    }
}

TEST_CASE("kernel a-derivatives match finite differences") {
    KernelSlice slice(1, 0);
    const double a = 1.1, h = 1e-5;
    for (double t : {0.05, 0.2}) {
        for (double x : {0.1, 0.4}) {
            const double fd1 = (slice.kernel(a + h, t, &x) - slice.kernel(a - h, t, &x)) / (2 * h);
            CHECK(slice.kernel(a, t, &x, 1) == doctest::Approx(fd1).epsilon(1e-7));
            const double fd2 =
                (slice.kernel(a + h, t, &x) - 2 * slice.kernel(a, t, &x) + slice.kernel(a - h, t, &x)) /
                (h * h);
            CHECK(slice.kernel(a, t, &x, 2) == doctest::Approx(fd2).epsilon(1e-4));
        }
    }
}

TEST_CASE("annulus pieces sum back to the kernel") {
    KernelSlice slice(1, 0);
    const double a = 1.3;
    CounterRng rng(23, 1);
    for (int i = 0; i < 50; ++i) {
        const double t = 0.3 * rng.next_uniform() + 1e-3;
        const double x = 1.2 * (rng.next_uniform() - 0.5);
        double sum = 0.0;
        for (int n = 0; n < 48; ++n) sum += slice.kernel_annulus(n, a, t, &x);
        CHECK(sum == doctest::Approx(slice.kernel(a, t, &x)).epsilon(1e-10));
    }
}

TEST_CASE("anisotropic Taylor remainder: direct equals integral form") {
    KernelSlice slice(1, 0);
    const double a = 1.2;
    CounterRng rng(31, 7);

    // y = 0 gives a vanishing remainder
    {
        const double x[2] = {0.12, 0.2}, y[2] = {0.0, 0.0}, z[2] = {0.03, 0.1};
        const auto r = slice.taylor_remainder(a, x, y, z);
        CHECK(r.direct == 0.0);
        CHECK(std::abs(r.integral) < 1e-14);
    }
    // purely temporal increment
    {
        const double x[2] = {0.2, 0.25}, y[2] = {0.04, 0.0}, z[2] = {0.05, 0.05};
        const auto r = slice.taylor_remainder(a, x, y, z);
        CHECK(r.direct == doctest::Approx(r.integral).epsilon(1e-6));
    }
    // random sample
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const double x[2] = {0.15 + 0.1 * rng.next_uniform(), 0.4 * (rng.next_uniform() - 0.5)};
        const double y[2] = {0.05 * (rng.next_uniform() - 0.5), 0.2 * (rng.next_uniform() - 0.5)};
        const double z[2] = {0.1 * rng.next_uniform(), 0.4 * (rng.next_uniform() - 0.5)};
        const auto r = slice.taylor_remainder(a, x, y, z);
        worst = std::max(worst, std::abs(r.direct - r.integral));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("2d Taylor remainder including the mixed derivative") {
    KernelSlice slice(2, 0);
    const double a = 1.0;
    CounterRng rng(37, 3);
    double worst = 0.0;
    for (int i = 0; i < 30; ++i) {
        const double x[3] = {0.2 + 0.05 * rng.next_uniform(), 0.3 * (rng.next_uniform() - 0.5),
                             0.3 * (rng.next_uniform() - 0.5)};
        const double y[3] = {0.03 * (rng.next_uniform() - 0.5), 0.15 * (rng.next_uniform() - 0.5),
                             0.15 * (rng.next_uniform() - 0.5)};
        const double z[3] = {0.05 * rng.next_uniform(), 0.2 * (rng.next_uniform() - 0.5),
                             0.2 * (rng.next_uniform() - 0.5)};
        const auto r = slice.taylor_remainder(a, x, y, z);
        worst = std::max(worst, std::abs(r.direct - r.integral));
    }
    CHECK(worst < 1e-6);
}

TEST_CASE("L1 increment bound of the dilated kernel") {
    // fitted exponent of int |Psi(a,t,x+y) - Psi(a,t,x) - dPsi(a,t,x).y| dx
    // against |y|, swept below the diffusive scale; the second-order Taylor
    // regime gives slope ~2 >= 2 alpha - 0.15 for any alpha < 1
    const double a = 1.0, t = 0.25;
    std::vector<double> ly, li;
    for (int e = 3; e <= 7; ++e) {
        const double y = std::ldexp(1.0, -e);
        const double integral = integrate_gl_composite(
            [&](double x) {
                const double xp = x + y;
                const double grad = -x / (2.0 * a * t) * dilated_psi(1, a, t, &x);
                return std::abs(dilated_psi(1, a, t, &xp) - dilated_psi(1, a, t, &x) - grad * y);
            },
            -12.0, 12.0, 96, 12);
        ly.push_back(std::log(y));
        li.push_back(std::log(integral));
    }
    const double alpha = 0.9;
    const LineFit fit = fit_line(ly, li);
    CHECK(fit.slope >= 2.0 * alpha - 0.15);
}
