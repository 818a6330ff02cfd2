#include <CLI11.hpp>

#include <cstdint>
#include <optional>
#include <string>

#include "spmlab/runner.hpp"

int main(int argc, char** argv) {
    CLI::App app{"spm - numerical laboratory for the renormalized stochastic porous medium equation"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::string trajectory;
    int threads = 0;
    std::uint64_t seed_override = 0;
    bool have_seed_override = false;

    const char* names[] = {"model-check", "solve", "kinetic-check", "split",
                           "seminorms",   "energy", "interpolate",  "validate"};
    const char* descriptions[] = {
        "recentering laws, counterterm identity, vanishing expectations, homogeneity fits",
        "time-step one trajectory and write the slab + traces",
        "kinetic-formulation residual refinement study",
        "delta-scaling of the small-velocity part u^<",
        "Besov / modelledness / test-function seminorm reports",
        "renormalized energy ledger",
        "K-functional balancing table",
        "assumption validators (nonlinearity, noise, initial data)"};

    for (std::size_t i = 0; i < std::size(names); ++i) {
        CLI::App* sub = app.add_subcommand(names[i], descriptions[i]);
        sub->add_option("--config", config_path, "experiment config file")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config)");
        sub->add_option("--threads", threads, "worker threads (overrides config)");
        sub->add_option("--seed-override", seed_override, "replaces the config seed")
            ->each([&](const std::string&) { have_seed_override = true; });
        if (std::string(names[i]) == "split" || std::string(names[i]) == "seminorms" ||
            std::string(names[i]) == "energy" || std::string(names[i]) == "interpolate") {
            sub->add_option("--traj", trajectory, "trajectory slab produced by `spm solve`");
        }
    }

    CLI11_PARSE(app, argc, argv);

    spmlab::RunnerOptions options;
    options.out_dir = out_dir;
    options.threads = threads;
    options.trajectory = trajectory;
    if (have_seed_override) options.seed_override = seed_override;
    return spmlab::run_subcommand(app.get_subcommands().front()->get_name(), config_path, options);
}
