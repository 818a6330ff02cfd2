#pragma once

#include <optional>
#include <string>

#include "spmlab/config.hpp"

namespace spmlab {

struct RunnerOptions {
    std::string out_dir;                    // overrides config when nonempty
    std::optional<std::uint64_t> seed_override;
    int threads = 0;                        // 0: take the config value
    std::string trajectory;                 // optional u.bin produced by `solve`
};

// Executes one subcommand; returns the CLI exit code (0 ok, 2 config error,
// 3 numerical abort). Writes CSV + JSON artifacts into the output directory.
int run_subcommand(const std::string& name, const std::string& config_path,
                   const RunnerOptions& options);

}  // namespace spmlab
