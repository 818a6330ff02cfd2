#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "spmlab/analysis.hpp"
#include "spmlab/config.hpp"
#include "spmlab/heat_kernels.hpp"
#include "spmlab/kinetic.hpp"
#include "spmlab/model.hpp"
#include "spmlab/nonlinearity.hpp"
#include "spmlab/spde_solver.hpp"
#include "spmlab/spectral_noise.hpp"
#include "spmlab/torus_grid.hpp"

namespace py = pybind11;
using namespace spmlab;

namespace {

SpaceTimePoint make_point(double t, py::sequence x, int d) {
    return SpaceTimePoint::make(t, x[0].cast<double>(), d,
                                d == 2 ? x[1].cast<double>() : 0.0);
}

py::array_t<double> field_to_array(const SolutionField& sol) {
    const Grid& g = sol.grid;
    std::vector<py::ssize_t> shape;
    shape.push_back(g.n_t + 1);
    shape.push_back(g.n);
    if (g.d == 2) shape.push_back(g.n);
    py::array_t<double> out(shape);
    std::copy(sol.values.begin(), sol.values.end(), out.mutable_data());
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Numerical laboratory for the renormalized stochastic porous medium equation";

    py::class_<Grid>(m, "Grid")
        .def(py::init([](int d, int n, double dt, int n_t) {
                 Grid g{d, n, dt, n_t};
                 g.validate();
                 return g;
             }),
             py::arg("d"), py::arg("n"), py::arg("dt"), py::arg("n_t"))
        .def_readonly("d", &Grid::d)
        .def_readonly("n", &Grid::n)
        .def_readonly("dt", &Grid::dt)
        .def_readonly("n_t", &Grid::n_t)
        .def_property_readonly("dx", &Grid::dx)
        .def_property_readonly("T", &Grid::final_time);

    m.def(
        "parabolic_norm",
        [](double t, py::sequence x, int d) { return parabolic_norm(make_point(t, x, d)); },
        py::arg("t"), py::arg("x"), py::arg("d") = 2);

    py::class_<TestFunction>(m, "TestFunction")
        .def(py::init([](double t, py::sequence x, int d, double scale, int moments_killed) {
                 return TestFunction{make_point(t, x, d), scale, moments_killed};
             }),
             py::arg("t"), py::arg("x"), py::arg("d"), py::arg("scale"),
             py::arg("moments_killed") = 0);
    m.def(
        "rescaled_test",
        [](const TestFunction& tf, double t, py::sequence x) {
            return rescaled_test(tf, make_point(t, x, tf.base.d));
        },
        py::arg("tf"), py::arg("t"), py::arg("x"));

    py::class_<Nonlinearity>(m, "Nonlinearity")
        .def_static("porous", &Nonlinearity::make_porous, py::arg("M"))
        .def_static("regularized", &Nonlinearity::regularize, py::arg("M"), py::arg("eps"))
        .def_static("constant", &Nonlinearity::make_constant_diffusion, py::arg("a"))
        .def("with_sigma", &Nonlinearity::with_sigma, py::arg("N"), py::arg("C_supp"),
             py::return_value_policy::reference_internal)
        .def("with_constant_sigma", &Nonlinearity::with_constant_sigma, py::arg("value"),
             py::return_value_policy::reference_internal)
        .def("with_zero_sigma", &Nonlinearity::with_zero_sigma,
             py::return_value_policy::reference_internal)
        .def("a", &Nonlinearity::a)
        .def("a_prime", &Nonlinearity::a_prime)
        .def("a_second", &Nonlinearity::a_second)
        .def("sigma", &Nonlinearity::sigma)
        .def("sigma_prime", &Nonlinearity::sigma_prime)
        .def("sigma_second", &Nonlinearity::sigma_second)
        .def("theta", &Nonlinearity::theta)
        .def("theta_prime", &Nonlinearity::theta_prime)
        .def_property_readonly("p0", &Nonlinearity::quartic_p0);

    m.def("validate_assumptions", [](const Nonlinearity& nl, double alpha) {
        const AssumptionReport r = validate_assumptions(nl, alpha);
        py::dict d;
        d["exponent_in_range"] = r.exponent_in_range;
        d["exponent_bound"] = r.exponent_bound;
        d["vanishing_order_ok"] = r.vanishing_order_ok;
        d["ratios_finite"] = r.ratios_finite;
        d["pass"] = r.pass();
        return d;
    });

    m.def("heat_phi", [](int d, double t, py::sequence x) {
        double xs[2] = {x[0].cast<double>(), d == 2 ? x[1].cast<double>() : 0.0};
        return heat_phi(d, t, xs);
    });
    m.def("dyadic_partition", &dyadic_partition, py::arg("a"));

    m.def("counterterm_dumb", &counterterm_dumb, py::arg("d"), py::arg("a"), py::arg("t"),
          py::arg("K_max"));
    m.def("counterterm_cherry", &counterterm_cherry, py::arg("d"), py::arg("a"), py::arg("t"),
          py::arg("K_max"));
    m.def("counterterm_C", &counterterm_C, py::arg("d"), py::arg("a"), py::arg("K_max"));

    py::class_<SpectralNoise>(m, "SpectralNoise")
        .def_static("space_white", &SpectralNoise::sample_space_white, py::arg("d"),
                    py::arg("K_max"), py::arg("seed"))
        .def_static("coloured", &SpectralNoise::sample_coloured, py::arg("d"), py::arg("K_max"),
                    py::arg("alpha_prime"), py::arg("mollifier_eps"), py::arg("path_dt"),
                    py::arg("path_steps"), py::arg("seed"))
        .def("evaluate",
             [](const SpectralNoise& n, double t, py::sequence x) {
                 return n.evaluate(make_point(t, x, n.dimension()));
             })
        .def("coefficient_energy", &SpectralNoise::coefficient_energy)
        .def("save", &SpectralNoise::save)
        .def_static("load", &SpectralNoise::load)
        .def_property_readonly("K_max", &SpectralNoise::cutoff)
        .def_property_readonly("d", &SpectralNoise::dimension);

    py::class_<ModelEvaluator>(m, "Model")
        .def(py::init<const SpectralNoise&>(), py::keep_alive<1, 2>())
        .def("xi", [](const ModelEvaluator& me, double t, py::sequence x) {
            return me.xi(make_point(t, x, me.dimension()));
        })
        .def("lolly",
             [](const ModelEvaluator& me, double a, double tb, py::sequence xb, double te,
                py::sequence xe, int da_order) {
                 return me.lolly(a, make_point(tb, xb, me.dimension()),
                                 make_point(te, xe, me.dimension()), da_order);
             },
             py::arg("a"), py::arg("t_base"), py::arg("x_base"), py::arg("t_eval"),
             py::arg("x_eval"), py::arg("da_order") = 0)
        .def("dumb",
             [](const ModelEvaluator& me, double a, double tb, py::sequence xb, double te,
                py::sequence xe) {
                 return me.dumb(a, make_point(tb, xb, me.dimension()),
                                make_point(te, xe, me.dimension()));
             })
        .def("cherry",
             [](const ModelEvaluator& me, double a, double tb, py::sequence xb, double te,
                py::sequence xe) {
                 return me.cherry(a, make_point(tb, xb, me.dimension()),
                                  make_point(te, xe, me.dimension()));
             })
        .def("recenter_check",
             [](const ModelEvaluator& me, const std::string& tau, double a, double tx,
                py::sequence xx, double ty, py::sequence xy, int n, std::uint64_t seed) {
                 Symbol sym = tau == "lolly"    ? Symbol::Lolly
                              : tau == "dumb"   ? Symbol::Dumb
                              : tau == "cherry" ? Symbol::Cherry
                              : tau == "xxi"    ? Symbol::XXi
                                                : Symbol::Xi;
                 return me.recenter_check(sym, a, make_point(tx, xx, me.dimension()),
                                          make_point(ty, xy, me.dimension()), n, seed);
             });

    m.def("chi", &chi, py::arg("u"), py::arg("v"));
    m.def("split_scalar", &split_scalar, py::arg("u"), py::arg("nl"), py::arg("delta"));

    py::class_<SolutionField>(m, "SolutionField")
        .def_property_readonly("grid", [](const SolutionField& s) { return s.grid; })
        .def_property_readonly("values", &field_to_array)
        .def("save", &SolutionField::save)
        .def_static("load", &SolutionField::load);

    m.def(
        "solve_heat",
        [](const Grid& grid, const Nonlinearity& nl, py::array_t<double> u0,
           const SpectralNoise* noise, int counterterm_K, const std::string& scheme) {
            SolveConfig sc;
            sc.grid = grid;
            sc.nl = nl;
            sc.scheme = scheme == "imex" ? Scheme::IMEX : Scheme::ExplicitRK2;
            sc.counterterm_K_max = counterterm_K;
            auto buf = u0.request();
            std::span<const double> u0s(static_cast<const double*>(buf.ptr),
                                        static_cast<std::size_t>(buf.size));
            const ForcingFn f = noise ? make_noise_forcing(*noise) : zero_forcing();
            return solve(u0s, sc, f);
        },
        py::arg("grid"), py::arg("nl"), py::arg("u0"), py::arg("noise") = nullptr,
        py::arg("counterterm_K") = 0, py::arg("scheme") = "rk2",
        "Solve the (renormalized) equation and return the trajectory");

    m.def("fit_homogeneity", [](const std::string& tau, int d, int K_max, double a, int ensemble,
                                std::vector<double> lambdas, std::uint64_t seed, int grid_n,
                                double alpha, int threads) {
        FitHomogeneityOptions opt;
        opt.d = d;
        opt.K_max = K_max;
        opt.a = a;
        opt.ensemble = ensemble;
        opt.lambdas = std::move(lambdas);
        opt.seed = seed;
        opt.grid_n = grid_n;
        opt.alpha = alpha;
        opt.threads = threads;
        Symbol sym = tau == "lolly"    ? Symbol::Lolly
                     : tau == "dumb"   ? Symbol::Dumb
                     : tau == "cherry" ? Symbol::Cherry
                     : tau == "xxi"    ? Symbol::XXi
                                       : Symbol::Xi;
        const HomogeneityFit fit = fit_homogeneity(sym, opt);
        py::dict out;
        out["slope"] = fit.slope;
        out["stderr"] = fit.stderr_slope;
        out["expected"] = fit.expected;
        out["lambdas"] = fit.lambdas;
        out["moments"] = fit.moments;
        return out;
    });

    m.def("k_functional_core", [](std::vector<double> deltas, std::vector<double> small_norm,
                                  std::vector<double> large_mod, std::vector<double> lambdas,
                                  double two_alpha) {
        const KFunctionalResult r =
            k_functional_core(deltas, small_norm, large_mod, lambdas, two_alpha);
        py::dict out;
        out["argmin_slope"] = r.argmin_slope;
        out["k_slope"] = r.k_slope;
        std::vector<double> ls, ds, ks;
        for (const auto& row : r.rows) {
            ls.push_back(row.lambda);
            ds.push_back(row.delta_argmin);
            ks.push_back(row.K_value);
        }
        out["lambda"] = ls;
        out["delta_argmin"] = ds;
        out["K"] = ks;
        return out;
    });
}
