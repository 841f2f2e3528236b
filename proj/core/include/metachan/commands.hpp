#pragma once

// The four analysis commands behind the metachan CLI. Each writes its data
// files atomically (staged .tmp, renamed on success) into the output
// directory and returns a process exit code:
//   0 ok, 1 config error, 2 analysis precondition failure,
//   3 step budget exceeded, 4 validation failure.

#include <optional>
#include <string>

#include "metachan/config.hpp"

namespace metachan {

struct CommandOptions {
    std::optional<std::uint64_t> seed;      // overrides run.seed
    std::optional<std::string> out_dir;     // overrides config.output
    int threads = 0;                        // 0 = hardware concurrency
    std::optional<bool> emit_trajectories;  // overrides run.emit_trajectories
};

int cmd_spectrum(const ExperimentConfig& cfg, const CommandOptions& opt);
int cmd_ems(const ExperimentConfig& cfg, const CommandOptions& opt);
int cmd_simulate(const ExperimentConfig& cfg, const CommandOptions& opt);
int cmd_validate(const ExperimentConfig& cfg, const CommandOptions& opt);

/// Load the config file, dispatch by command name, map errors to exit codes.
int run_command(const std::string& command, const std::string& config_path,
                const CommandOptions& opt);

/// 17-significant-digit formatting used in every CSV cell (lossless for
/// doubles).
std::string num17(double value);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace metachan
