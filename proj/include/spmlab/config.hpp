#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "spmlab/nonlinearity.hpp"
#include "spmlab/spde_solver.hpp"
#include "spmlab/torus_grid.hpp"

namespace spmlab {

// Thrown for unreadable files, unknown keys or invalid values (CLI exit 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Experiment configuration parsed from a flat "key = value" file with
// '#' comments. Unknown keys are rejected; seed is mandatory.
struct ExperimentConfig {
    std::uint64_t seed = 0;
    int ensemble = 100;
    std::string out_dir = "out";

    Grid grid;

    // nonlinearity
    std::string diffusion = "regularized";  // porous | regularized | constant
    double M = 1.5;
    double eps_reg = 0.1;
    double a_const = 1.0;
    std::string sigma = "power";  // power | constant | zero
    int N = 3;
    double C_supp = 1.0;
    double sigma_const = 1.0;

    // noise
    std::string noise_kind = "space_white";  // space_white | coloured | none
    int K_max = 16;
    double alpha_prime = 0.9;
    double mollifier_eps = 0.01;

    // model / analysis
    double alpha = 0.9;
    double epsilon_hom = 0.01;  // the small epsilon in e(tau)
    double beta = 1.3;
    double R = 0.25;
    double p_energy = 2.0;

    std::string scheme = "rk2";  // rk2 | imex
    int threads = 1;

    // amplitude of the default initial condition 1 + amp*cos(2 pi x1)
    double u0_offset = 0.0;
    double u0_amplitude = 0.5;

    Nonlinearity make_nonlinearity() const;
    Scheme make_scheme() const;
    std::string canonical_text() const;  // sorted key=value lines
    std::uint64_t hash() const;          // FNV-1a of the canonical text

    static ExperimentConfig parse_file(const std::string& path);
    static ExperimentConfig parse_text(const std::string& text);
};

}  // namespace spmlab
