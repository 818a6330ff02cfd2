// Acceptance suite: runs every primary criterion at its stated tolerance and
// prints one pass/fail line each. Exit code 0 only if all hard criteria pass
// (the final stability diagnostic warns instead of failing).

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <string>
#include <vector>

#include "spmlab/analysis.hpp"
#include "spmlab/kinetic.hpp"
#include "spmlab/model.hpp"
#include "spmlab/numerics.hpp"
#include "spmlab/rng.hpp"
#include "spmlab/spde_solver.hpp"

using namespace spmlab;

namespace {

int g_failures = 0;
double g_criterion_start = 0.0;
double g_runtime_budget = 0.0;  // seconds; 0 = no budget for this criterion

std::string fmt(const char* f, ...) {
    char buf[256];
    va_list args;
    va_start(args, f);
    std::vsnprintf(buf, sizeof buf, f, args);
    va_end(args);
    return buf;
}

double wall_seconds() {
    using clock = std::chrono::steady_clock;
    static const auto t0 = clock::now();
    return std::chrono::duration<double>(clock::now() - t0).count();
}

void report(int id, bool pass, const std::string& label, const std::string& detail,
            bool warn_only = false) {
    const double elapsed = wall_seconds() - g_criterion_start;
    if (g_runtime_budget > 0.0 && elapsed >= g_runtime_budget) pass = false;
    const char* verdict = pass ? "PASS" : (warn_only ? "WARN" : "FAIL");
    std::printf("[%2d] %s  %-34s %s [%.1f s%s]\n", id, verdict, label.c_str(), detail.c_str(),
                elapsed,
                g_runtime_budget > 0.0 ? fmt(" / budget %.0f", g_runtime_budget).c_str() : "");
    std::fflush(stdout);
    if (!pass && !warn_only) ++g_failures;
}

// ---- 1: quartic gluing ----------------------------------------------------

void criterion_gluing() {
    bool pass = true;
    double worst_rel = 0.0;
    for (double M : {1.2, 1.5, 1.9}) {
        for (double eps : {0.1, 0.01}) {
            const auto reg = Nonlinearity::regularize(M, eps);
            const auto porous = Nonlinearity::make_porous(M);
            for (double sign : {1.0, -1.0}) {
                const double v = sign * eps;
                const double r0 = std::abs(reg.a(v) - porous.a(v)) / std::abs(porous.a(v));
                const double r1 =
                    std::abs(reg.a_prime(v) - porous.a_prime(v)) / std::abs(porous.a_prime(v));
                const double r2 =
                    std::abs(reg.a_second(v) - porous.a_second(v)) / std::abs(porous.a_second(v));
                worst_rel = std::max({worst_rel, r0, r1, r2});
            }
            CounterRng rng(2024, static_cast<std::uint64_t>(1000 * M + 10 * eps));
            for (int i = 0; i < 10000; ++i) {
                const double v = 4.0 * (rng.next_uniform() - 0.5);
                pass = pass && reg.a(v) >= reg.quartic_p0() - 1e-15;
                pass = pass && reg.a(v) >= porous.a(v) - 1e-12 * std::max(1.0, porous.a(v));
            }
        }
    }
    pass = pass && worst_rel < 1e-9;
    report(1, pass, "quartic gluing C^2 + domination", fmt("max rel mismatch %.2e", worst_rel));
}

// ---- 2: counterterm identity -----------------------------------------------

void criterion_counterterm_identity() {
    const int K = 64, d = 2;
    double worst = 0.0;
    for (int ia = 0; ia < 20; ++ia) {
        const double a = 0.1 + 1.9 * ia / 19.0;
        for (int it = 0; it < 20; ++it) {
            const double t = it / 19.0;
            const double lhs = counterterm_dumb(d, a, t, K) - a * counterterm_cherry(d, a, t, K);
            PairwiseAccumulator acc;
            for (int j1 = -K; j1 <= K; ++j1) {
                for (int j2 = -K; j2 <= K; ++j2) {
                    const int jj = j1 * j1 + j2 * j2;
                    if (jj == 0 || jj > K * K) continue;
                    const double kappa = 4.0 * M_PI * M_PI * jj;
                    const double E = std::exp(-a * kappa * t);
                    acc.add(E * (1.0 - E) / (a * kappa));
                }
            }
            worst = std::max(worst, std::abs(lhs - (t + acc.total())));
        }
    }
    report(2, worst < 1e-12, "counterterm identity (K=64, T^2)", fmt("max residual %.2e", worst));
}

// ---- 3: recentering laws ----------------------------------------------------

void criterion_recentering() {
    const auto noise = SpectralNoise::sample_space_white(2, 32, 9001);
    const ModelEvaluator model(noise);
    CounterRng rng(9001, 0xACC3);
    double worst = 0.0;
    for (Symbol tau : {Symbol::Xi, Symbol::Lolly, Symbol::Dumb, Symbol::Cherry, Symbol::XXi}) {
        for (int pair = 0; pair < 20; ++pair) {
            const auto x = SpaceTimePoint::make(0.1 + 0.8 * rng.next_uniform(), rng.next_uniform(), 2,
                                                rng.next_uniform());
            const auto y = SpaceTimePoint::make(0.1 + 0.8 * rng.next_uniform(), rng.next_uniform(), 2,
                                                rng.next_uniform());
            const double a = 0.5 + 1.5 * rng.next_uniform();
            worst = std::max(worst,
                             model.recenter_check(tau, a, x, y, 5, CounterRng::mix(9001, pair)));
        }
    }
    report(3, worst < 1e-12, "recentering laws (all symbols)", fmt("max residual %.2e", worst));
}

// ---- 4: vanishing expectation ----------------------------------------------

void criterion_vanishing_expectation() {
    const int samples = 10000, K = 32, d = 2;
    const double a = 1.0, s = 0.5;
    const auto eval = SpaceTimePoint::make(s, 0.3, d, 0.7);
    std::vector<double> dumb_vals(samples), cherry_vals(samples);
    parallel_for(
        samples,
        [&](std::size_t i) {
            const auto noise =
                SpectralNoise::sample_space_white(d, K, CounterRng::mix(777, 31 + i));
            const ModelEvaluator model(noise);
            dumb_vals[i] = model.lolly_unrecentered(a, eval) * model.xi(eval);
            const auto grad = model.lolly_gradient(a, eval);
            cherry_vals[i] = grad[0] * grad[0] + grad[1] * grad[1];
        },
        0);
    auto zscore = [&](const std::vector<double>& v, double target) {
        PairwiseAccumulator sum;
        for (double x : v) sum.add(x);
        const double mean = sum.total() / v.size();
        PairwiseAccumulator var;
        for (double x : v) var.add((x - mean) * (x - mean));
        const double se = std::sqrt(var.total() / (v.size() - 1.0) / v.size());
        return std::abs(mean - target) / se;
    };
    const double z_dumb = zscore(dumb_vals, counterterm_dumb(d, a, s, K));
    const double z_cherry = zscore(cherry_vals, counterterm_cherry(d, a, s, K));
    report(4, z_dumb <= 3.0 && z_cherry <= 3.0, "vanishing expectation (1e4 MC)",
           fmt("|z| = %.2f (lolly*xi), %.2f (|grad lolly|^2)", z_dumb, z_cherry));
}

// ---- 5: homogeneity fits ----------------------------------------------------

void criterion_homogeneity() {
    FitHomogeneityOptions opt;
    opt.d = 2;
    opt.K_max = 64;
    opt.a = 1.0;
    opt.ensemble = 200;
    opt.lambdas = {0.5, 0.25, 0.125, 0.0625, 0.03125};
    opt.seed = 31415;
    opt.grid_n = 512;
    opt.time_nodes = 8;
    opt.alpha = 1.0;  // the Table-1 targets below use the alpha -> 1 limits
    const HomogeneityFit fit_xi = fit_homogeneity(Symbol::Xi, opt);
    const HomogeneityFit fit_lolly = fit_homogeneity(Symbol::Lolly, opt);
    const bool pass = std::abs(fit_xi.slope - (-1.0)) <= 0.2 &&
                      std::abs(fit_lolly.slope - 1.0) <= 0.15;
    report(5, pass, "homogeneity fits vs Table values",
           fmt("xi slope %.3f (target -1 +- 0.2), lolly slope %.3f (target 1 +- 0.15)",
               fit_xi.slope, fit_lolly.slope));
}

// ---- 6: solver convergence --------------------------------------------------

void criterion_solver_convergence() {
    // exact heat test
    SolveConfig heat;
    heat.grid = Grid{1, 64, 1e-5, 1000};
    heat.nl = Nonlinearity::make_constant_diffusion(1.0).with_zero_sigma();
    std::vector<double> u0(heat.grid.points_per_slice());
    for (int i = 0; i < heat.grid.n; ++i) u0[i] = std::cos(2 * M_PI * heat.grid.coord(i));
    const SolutionField sol = solve(u0, heat, zero_forcing());
    PairwiseAccumulator err_acc;
    for (int i = 0; i < heat.grid.n; ++i) {
        const double exact = std::exp(-4 * M_PI * M_PI * 0.01) * std::cos(2 * M_PI * heat.grid.coord(i));
        const double e = sol.value(heat.grid.n_t, i) - exact;
        err_acc.add(e * e);
    }
    const double heat_err = std::sqrt(err_acc.total() / heat.grid.n);

    // manufactured solution, spatial Richardson
    const auto nl = Nonlinearity::regularize(1.5, 0.1).with_constant_sigma(1.0);
    auto exact = [](double t, double x) { return 2.0 + std::exp(-t) * std::cos(2.0 * M_PI * x); };
    auto forcing = make_pointwise_forcing([&](double t, double x, double) {
        const double u = exact(t, x);
        const double osc = u - 2.0;
        const double ux = -2.0 * M_PI * std::exp(-t) * std::sin(2.0 * M_PI * x);
        return -osc - (nl.a_prime(u) * ux * ux + nl.a(u) * (-4.0 * M_PI * M_PI * osc));
    });
    std::vector<double> errs;
    for (int n : {16, 32, 64}) {
        SolveConfig cfg;
        cfg.grid = Grid{1, n, 2.5e-6, 4000};
        cfg.nl = nl;
        std::vector<double> ic(cfg.grid.points_per_slice());
        for (int i = 0; i < n; ++i) ic[i] = exact(0.0, cfg.grid.coord(i));
        const SolutionField s = solve(ic, cfg, forcing);
        PairwiseAccumulator acc;
        for (int i = 0; i < n; ++i) {
            const double e = s.value(cfg.grid.n_t, i) - exact(0.01, cfg.grid.coord(i));
            acc.add(e * e);
        }
        errs.push_back(std::sqrt(acc.total() / n));
    }
    const double space_order = 0.5 * (std::log2(errs[0] / errs[1]) + std::log2(errs[1] / errs[2]));

    // temporal Richardson (self-convergence at fixed n)
    std::vector<SolutionField> sols;
    for (double dt : {4e-5, 2e-5, 1e-5}) {
        SolveConfig cfg;
        cfg.grid = Grid{1, 32, dt, static_cast<int>(std::round(4e-3 / dt))};
        cfg.nl = nl;
        std::vector<double> ic(cfg.grid.points_per_slice());
        for (int i = 0; i < 32; ++i) ic[i] = exact(0.0, cfg.grid.coord(i));
        sols.push_back(solve(ic, cfg, forcing));
    }
    auto final_diff = [&](const SolutionField& a, const SolutionField& b) {
        PairwiseAccumulator acc;
        for (int i = 0; i < 32; ++i) {
            const double e = a.value(a.grid.n_t, i) - b.value(b.grid.n_t, i);
            acc.add(e * e);
        }
        return std::sqrt(acc.total() / 32);
    };
    const double time_order = std::log2(final_diff(sols[0], sols[2]) / final_diff(sols[1], sols[2]));

    const bool pass = heat_err < 1e-3 && space_order >= 1.7 && time_order >= 0.7;
    report(6, pass, "solver convergence",
           fmt("heat L2 %.2e, space order %.2f, time order %.2f", heat_err, space_order, time_order));
}

// ---- 7: kinetic residual refinement ------------------------------------------

void criterion_kinetic_residual() {
    const auto nl = Nonlinearity::regularize(1.5, 0.1).with_sigma(3, 1.0);
    const auto noise = SpectralNoise::sample_space_white(1, 4, 4242);
    const ForcingFn forcing = make_noise_forcing(noise);
    std::vector<double> residuals;
    for (int level = 0; level < 3; ++level) {
        SolveConfig cfg;
        const int n = 32 << level;
        const double dt = 2e-5 / (1 << (2 * level));
        cfg.grid = Grid{1, n, dt, static_cast<int>(std::round(0.02 / dt))};
        cfg.nl = nl;
        cfg.counterterm_K_max = 4;
        std::vector<double> u0(cfg.grid.points_per_slice());
        for (int i = 0; i < n; ++i) u0[i] = 0.4 + 0.3 * std::cos(2 * M_PI * cfg.grid.coord(i));
        const SolutionField sol = solve(u0, cfg, forcing);
        const double T = cfg.grid.final_time();
        const auto phi = make_kinetic_bump(1, 0.2 * T, 0.8 * T, 0.0, 1.2);
        residuals.push_back(std::abs(kinetic_residual(sol, nl, forcing, phi)));
    }
    const double r1 = residuals[0] / residuals[1];
    const double r2 = residuals[1] / residuals[2];
    report(7, r1 >= 1.5 && r2 >= 1.5, "kinetic residual refinement",
           fmt("ratios %.2f, %.2f (need >= 1.5)", r1, r2));
}

// ---- 8: velocity-split scaling ------------------------------------------------

void criterion_split_scaling() {
    bool pass = true;
    std::string detail;
    for (double M : {1.2, 1.5}) {
        const auto porous = Nonlinearity::make_porous(M);
        // synthetic uniform fields
        CounterRng rng(606, static_cast<std::uint64_t>(M * 1000));
        std::vector<double> u(20000);
        for (double& v : u) v = 2.0 * (rng.next_uniform() - 0.5);
        std::vector<double> ld, ln;
        for (int e = 1; e <= 8; ++e) {
            const double delta = std::ldexp(1.0, -e);
            PairwiseAccumulator acc;
            for (double v : u) acc.add(std::abs(split_scalar(v, porous, delta)));
            ld.push_back(std::log(delta));
            ln.push_back(std::log(acc.total() / u.size()));
        }
        const double synthetic_slope = fit_line(ld, ln).slope;

        // solver output with values bounded away from the transition band
        SolveConfig cfg;
        cfg.grid = Grid{1, 64, 2e-5, 400};
        cfg.nl = Nonlinearity::regularize(M, 0.1).with_sigma(3, 2.0);
        cfg.counterterm_K_max = 4;
        std::vector<double> ic(cfg.grid.points_per_slice());
        for (int i = 0; i < 64; ++i) ic[i] = 1.2 + 0.5 * std::cos(2 * M_PI * cfg.grid.coord(i));
        const auto noise = SpectralNoise::sample_space_white(1, 4, 4343);
        const SolutionField sol = solve(ic, cfg, make_noise_forcing(noise));
        std::vector<double> ld2, ln2;
        const double cell = cfg.grid.dt * cfg.grid.dx();
        for (int e = 1; e <= 8; ++e) {
            const double delta = std::ldexp(1.0, -e);
            PairwiseAccumulator acc;
            for (int m = 0; m <= cfg.grid.n_t; ++m) {
                for (double v : sol.slice(m)) acc.add(std::abs(split_scalar(v, porous, delta)));
            }
            ld2.push_back(std::log(delta));
            ln2.push_back(std::log(acc.total() * cell));
        }
        const double solver_slope = fit_line(ld2, ln2).slope;

        const double target = 1.0 / (M - 1.0);
        pass = pass && std::abs(synthetic_slope - target) <= 0.1 &&
               std::abs(solver_slope - target) <= 0.1;
        detail += fmt("M=%.1f: synth %.3f solver %.3f (target %.2f)  ", M, synthetic_slope,
                      solver_slope, target);
    }
    report(8, pass, "velocity-split delta scaling", detail);
}

// ---- 9: renormalized kinetic measure identity ---------------------------------

void criterion_measure_identity() {
    SolveConfig cfg;
    cfg.grid = Grid{1, 64, 2e-5, 150};
    cfg.nl = Nonlinearity::regularize(1.5, 0.1).with_sigma(3, 1.0);
    cfg.counterterm_K_max = 8;
    const auto noise = SpectralNoise::sample_space_white(1, 8, 5151);
    std::vector<double> u0(cfg.grid.points_per_slice());
    for (int i = 0; i < 64; ++i) u0[i] = 0.5 + 0.3 * std::cos(2 * M_PI * cfg.grid.coord(i));
    const SolutionField sol = solve(u0, cfg, make_noise_forcing(noise));
    const ModelEvaluator model(noise);
    const auto nu = gubinelli_nu(sol, cfg.nl, &model);
    const double residual = renormalized_measure_identity(sol, cfg.nl, nu, cfg.counterterm_K_max);
    report(9, residual < 1e-10, "renormalized measure identity", fmt("max residual %.2e", residual));
}

// ---- 10: K-functional synthetic check -----------------------------------------

void criterion_k_functional() {
    const double M = 1.5, alpha = 0.9;
    std::vector<double> deltas, small, large, lambdas;
    for (int e = 1; e <= 40; ++e) {
        const double d = std::ldexp(1.0, -e);
        deltas.push_back(d);
        small.push_back(std::pow(d, 1.0 / (M - 1.0)));
        large.push_back(std::pow(d, -alpha));
    }
    for (int e = 2; e <= 41; ++e) lambdas.push_back(std::ldexp(1.0, -e));
    const auto result = k_functional_core(deltas, small, large, lambdas, 2.0 * alpha);
    const double expected_argmin = 2.0 * alpha * (M - 1.0) / (1.0 + (M - 1.0) * alpha);
    const double expected_k = 2.0 * alpha / (1.0 + (M - 1.0) * alpha);
    const bool pass = std::abs(result.argmin_slope - expected_argmin) <= 0.05 &&
                      std::abs(result.k_slope - expected_k) <= 0.05;
    report(10, pass, "K-functional balancing (synthetic)",
           fmt("argmin slope %.4f (target %.4f), K slope %.4f (target %.4f)", result.argmin_slope,
               expected_argmin, result.k_slope, expected_k));
}

// ---- 11: counterterm-condition integrals ---------------------------------------

void criterion_counterterm_conditions() {
    const double M = 1.5;
    auto nl = Nonlinearity::make_porous(M).with_sigma(static_cast<int>(std::ceil(M + 1.0)), 1.0);
    double i1[3], i2[3];
    int idx = 0;
    bool finite = true;
    for (int K : {32, 64, 128}) {
        const auto cc = counterterm_conditions(nl, 1e-5, 2.0, 0.5, 2, K, 24, 12);
        finite = finite && cc.finite;
        i1[idx] = cc.integral_time_independent;
        i2[idx] = cc.integral_dumb_cherry;
        ++idx;
    }
    const double change1 = std::abs(i1[2] - i1[1]) / i1[1];
    const double change2 = std::abs(i2[2] - i2[1]) / i2[1];
    const bool shrinking = std::abs(i1[1] - i1[0]) >= std::abs(i1[2] - i1[1]) &&
                           std::abs(i2[1] - i2[0]) >= std::abs(i2[2] - i2[1]);
    const bool pass = finite && change1 < 0.05 && change2 < 0.05 && shrinking;
    report(11, pass, "counterterm-condition integrals",
           fmt("I1=%.6f (K128 rel change %.1e), I2=%.6f (rel change %.1e)", i1[2], change1, i2[2],
               change2));
}

// ---- 12: qualitative stability diagnostic (warn only) ---------------------------

void criterion_cutoff_stability() {
    auto run = [&](int K) {
        SolveConfig cfg;
        cfg.grid = Grid{1, 256, 2.0e-6, 2500};
        cfg.nl = Nonlinearity::regularize(1.5, 0.1).with_sigma(3, 1.0);
        cfg.counterterm_K_max = K;
        std::vector<double> u0(cfg.grid.points_per_slice());
        for (int i = 0; i < 256; ++i) u0[i] = 0.4 + 0.3 * std::cos(2 * M_PI * cfg.grid.coord(i));
        // counter-based mode streams couple the realizations across cutoffs
        const auto noise = SpectralNoise::sample_space_white(1, K, 8080);
        return solve(u0, cfg, make_noise_forcing(noise));
    };
    const SolutionField coarse = run(32);
    const SolutionField fine = run(64);
    std::vector<Shift> shifts;
    for (int dj : {1, 2, 4, 8}) shifts.push_back({0, dj, 0});
    for (int dm : {1, 4, 16, 64}) shifts.push_back({dm, 0, 0});
    const auto fit = besov_seminorm(fine, 0.9, 0.1, shifts);
    const double alpha_probe = 0.9 * fit.fitted_slope;
    const double sup_fine = besov_seminorm(fine, alpha_probe, 0.1, shifts).sup_ratio;
    const double sup_coarse = besov_seminorm(coarse, alpha_probe, 0.1, shifts).sup_ratio;
    const double rel_change = std::abs(sup_fine - sup_coarse) / sup_coarse;
    report(12, rel_change < 0.5, "Besov sup-ratio cutoff stability",
           fmt("alpha_fit %.3f, sup-ratio rel change %.2e (warn-only)", fit.fitted_slope,
               rel_change),
           /*warn_only=*/true);
}

}  // namespace

int main() {
    std::printf("acceptance suite\n");
    const double t0 = wall_seconds();
    auto run = [&](double budget_seconds, void (*criterion)()) {
        g_runtime_budget = budget_seconds;
        g_criterion_start = wall_seconds();
        criterion();
    };
    run(1.0, criterion_gluing);
    run(1.0, criterion_counterterm_identity);
    run(0.0, criterion_recentering);
    run(120.0, criterion_vanishing_expectation);
    run(600.0, criterion_homogeneity);
    run(60.0, criterion_solver_convergence);
    run(300.0, criterion_kinetic_residual);
    run(60.0, criterion_split_scaling);
    run(0.0, criterion_measure_identity);
    run(0.0, criterion_k_functional);
    run(0.0, criterion_counterterm_conditions);
    run(0.0, criterion_cutoff_stability);
    std::printf("acceptance: %s (%.1f s)\n", g_failures == 0 ? "all criteria passed" : "FAILURES",
                wall_seconds() - t0);
    return g_failures == 0 ? 0 : 1;
}
