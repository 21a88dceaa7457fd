#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "quasieq/cli/config.hpp"
#include "quasieq/cli/output.hpp"

namespace quasieq::cli {

enum class Command { kSolve, kBounds, kWindow, kSweep, kSimulate };

std::optional<Command> parse_command(std::string_view name);
std::string to_string(Command command);

struct CommandResult {
  std::vector<OutputFile> files;
  std::string summary;  // one line for the terminal
  bool ok = true;       // false when a hard inequality check failed
};

// Relative paths inside the config (generator_csv) resolve against
// `base_dir`. Every command returns its files without touching the disk.

/// Stationary laws of the returned chain (for the configured mu and for
/// delta_s) and of the accelerated process on the optimized truncation set;
/// for mpp models, the Gaussian comparison of the truncated process.
CommandResult cmd_solve(const Json& config, const Overrides& overrides,
                        const std::filesystem::path& base_dir);

/// Hitting statistics, zeta search, every bound, and the exact quantities
/// each bound controls, with a pass flag per inequality.
CommandResult cmd_bounds(const Json& config, const Overrides& overrides,
                         const std::filesystem::path& base_dir);

/// d_TV(L_s(X(t)), target) over a time grid, exact or simulated, next to
/// the time-dependent bound curves.
CommandResult cmd_window(const Json& config, const Overrides& overrides,
                         const std::filesystem::path& base_dir);

/// Scaling study over A (birth-death-family) or N (mpp).
CommandResult cmd_sweep(const Json& config, const Overrides& overrides,
                        const std::filesystem::path& base_dir);

/// Trajectory files and Monte Carlo estimates next to their exact values.
CommandResult cmd_simulate(const Json& config, const Overrides& overrides,
                           const std::filesystem::path& base_dir);

CommandResult run_command(Command command, const Json& config, const Overrides& overrides,
                          const std::filesystem::path& base_dir);

}  // namespace quasieq::cli
