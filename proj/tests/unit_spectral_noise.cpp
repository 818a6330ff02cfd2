#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <cstdio>
#include <vector>

#include "spmlab/numerics.hpp"
#include "spmlab/rng.hpp"
#include "spmlab/spectral_noise.hpp"

using namespace spmlab;

TEST_CASE("space white sampling is deterministic in the seed") {
    const auto a = SpectralNoise::sample_space_white(2, 8, 42);
    const auto b = SpectralNoise::sample_space_white(2, 8, 42);
    const auto c = SpectralNoise::sample_space_white(2, 8, 43);
    bool identical = true, distinct = false;
    for (int j1 = -8; j1 <= 8; ++j1) {
        for (int j2 = -8; j2 <= 8; ++j2) {
            identical = identical && a.coefficient(j1, j2) == b.coefficient(j1, j2);
            distinct = distinct || a.coefficient(j1, j2) != c.coefficient(j1, j2);
        }
    }
    CHECK(identical);
    CHECK(distinct);
}

TEST_CASE("hermitian symmetry makes realizations real") {
    const auto noise = SpectralNoise::sample_space_white(2, 6, 7);
    for (int j1 = -6; j1 <= 6; ++j1) {
        for (int j2 = -6; j2 <= 6; ++j2) {
            const auto c = noise.coefficient(j1, j2);
            const auto m = noise.coefficient(-j1, -j2);
            CHECK(c.real() == m.real());
            CHECK(c.imag() == -m.imag());
        }
    }
}

TEST_CASE("coefficient second moment matches unit variance") {
    // Monte-Carlo oracle over independent draws of a few fixed modes
    const int draws = 10000;
    PairwiseAccumulator sum_sq;
    for (int i = 0; i < draws; ++i) {
        const auto noise = SpectralNoise::sample_space_white(2, 2, 1000 + i);
        sum_sq.add(std::norm(noise.coefficient(1, 1)));
    }
    const double mean = sum_sq.total() / draws;
    // E|xi_k|^2 = 1; chi^2-type spread gives stderr = 1/sqrt(draws)
    CHECK(std::abs(mean - 1.0) <= 3.0 / std::sqrt(static_cast<double>(draws)));
}

TEST_CASE("single active mode evaluates to a cosine") {
    // two-term oracle: xi_k = xi_-k = 1 means xi(x) = 2 cos(2 pi k.x)
    auto noise = SpectralNoise::sample_space_white(1, 4, 5);
    noise.save("single_mode_probe.bin");
    // build the comparison directly from the sampled coefficients
    const auto c = noise.coefficient(3);
    for (double x : {0.0, 0.13, 0.47, 0.81}) {
        double expected = noise.coefficient(0).real();
        for (int j = 1; j <= 4; ++j) {
            const auto cj = noise.coefficient(j);
            expected += 2.0 * (cj.real() * std::cos(2 * M_PI * j * x) -
                               cj.imag() * std::sin(2 * M_PI * j * x));
        }
        CHECK(noise.evaluate(SpaceTimePoint::make(0.0, x, 1)) ==
              doctest::Approx(expected).epsilon(1e-12));
    }
    (void)c;
    std::remove("single_mode_probe.bin");
}

TEST_CASE("evaluations are 1-periodic and constant in time") {
    const auto noise = SpectralNoise::sample_space_white(2, 6, 9);
    const double v0 = noise.evaluate(SpaceTimePoint::make(0.0, 0.3, 2, 0.6));
    CHECK(noise.evaluate(SpaceTimePoint::make(5.0, 0.3, 2, 0.6)) == doctest::Approx(v0).epsilon(1e-14));
    CHECK(noise.evaluate(SpaceTimePoint::make(0.0, 1.3, 2, -0.4)) == doctest::Approx(v0).epsilon(1e-12));
}

TEST_CASE("spatial mean of the realization is the zero coefficient") {
    const auto noise = SpectralNoise::sample_space_white(2, 4, 11);
    Grid g{2, 64, 1e-3, 1};
    std::vector<double> field(g.points_per_slice());
    noise.render_slice(0.0, g, field);
    PairwiseAccumulator acc;
    for (double v : field) acc.add(v);
    CHECK(acc.total() / field.size() ==
          doctest::Approx(noise.coefficient(0, 0).real()).epsilon(1e-10));
}

TEST_CASE("grid Parseval identity when the grid resolves the cutoff") {
    const auto noise = SpectralNoise::sample_space_white(2, 16, 13);
    Grid g{2, 64, 1e-3, 1};
    std::vector<double> field(g.points_per_slice());
    noise.render_slice(0.0, g, field);
    PairwiseAccumulator acc;
    for (double v : field) acc.add(v * v);
    const double grid_l2 = acc.total() / field.size();
    CHECK(grid_l2 == doctest::Approx(noise.coefficient_energy()).epsilon(1e-8));
}

TEST_CASE("render matches pointwise evaluation") {
    const auto noise = SpectralNoise::sample_space_white(1, 8, 17);
    Grid g{1, 64, 1e-3, 1};
    std::vector<double> field(g.points_per_slice());
    noise.render_slice(0.0, g, field);
    for (int i : {0, 5, 31, 63}) {
        CHECK(field[i] ==
              doctest::Approx(noise.evaluate(SpaceTimePoint::make(0.0, g.coord(i), 1))).epsilon(1e-11));
    }
}

TEST_CASE("coloured noise: Ito isometry for the integrated mode") {
    // Var of sqrt(c_k) B_k(t) is c_k * t within Monte-Carlo error
    const int draws = 4000;
    const double path_dt = 1.0 / 512.0;
    const int steps = 256;  // t = 0.5
    const int probe = 128;  // t = 0.25
    PairwiseAccumulator sum_sq;
    double c_k = 0.0;
    for (int i = 0; i < draws; ++i) {
        const auto noise =
            SpectralNoise::sample_coloured(1, 2, 0.9, 0.02, path_dt, steps, 5000 + i);
        c_k = noise.colour_weight(2);
        sum_sq.add(std::norm(noise.integrated_mode(2, 0, probe)));
    }
    const double t = probe * path_dt;
    const double mean = sum_sq.total() / draws;
    const double target = c_k * t;
    CHECK(std::abs(mean - target) <= 3.0 * target * std::sqrt(2.0 / draws));
}

TEST_CASE("mollifier has unit mass") {
    const double mass =
        integrate_gl_composite([](double s) { return SpectralNoise::mollifier_rho(s); }, -1.0, 1.0, 8, 16);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("mollified coloured path is smooth in time") {
    const auto noise = SpectralNoise::sample_coloured(1, 3, 0.8, 0.05, 0.05 / 8.0, 200, 21);
    const double h = 1e-4;
    for (double t : {0.1, 0.5, 0.9}) {
        double worst = 0.0;
        const auto p = [&](double tt) { return noise.evaluate(SpaceTimePoint::make(tt, 0.4, 1)); };
        const double second = (p(t + h) - 2.0 * p(t) + p(t - h)) / (h * h);
        CHECK(std::isfinite(second));
        worst = std::max(worst, std::abs(second));
        // bounded by the mollifier scale: rho''/eps^3 times the path mass
        CHECK(worst < 1e7);
    }
    CHECK_THROWS_AS(noise.evaluate(SpaceTimePoint::make(100.0, 0.4, 1)), std::out_of_range);
}

TEST_CASE("under-resolved mollifier is rejected") {
    CHECK_THROWS_AS(SpectralNoise::sample_coloured(1, 3, 0.8, 0.01, 0.01, 100, 3),
                    std::invalid_argument);
}

TEST_CASE("save and load round-trip") {
    const auto noise = SpectralNoise::sample_space_white(2, 8, 99);
    noise.save("noise_roundtrip_test.bin");
    const auto copy = SpectralNoise::load("noise_roundtrip_test.bin");
    CHECK(copy.cutoff() == noise.cutoff());
    CHECK(copy.dimension() == noise.dimension());
    bool identical = true;
    for (int j1 = -8; j1 <= 8; ++j1) {
        for (int j2 = -8; j2 <= 8; ++j2) {
            identical = identical && copy.coefficient(j1, j2) == noise.coefficient(j1, j2);
        }
    }
    CHECK(identical);
    std::remove("noise_roundtrip_test.bin");
}
