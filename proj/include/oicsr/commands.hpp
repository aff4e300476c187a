// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#ifndef OICSR_COMMANDS_HPP
#define OICSR_COMMANDS_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "oicsr/config.hpp"

namespace oicsr {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct CommandOptions {
  std::filesystem::path config;
  std::vector<std::string> overrides;
  std::filesystem::path out;
  std::optional<std::uint64_t> seed;
  std::filesystem::path checkpoint;
  std::vector<std::filesystem::path> runs;
};

/// Loads the config file, applies overrides and --seed.
ExperimentConfig resolve_config(const CommandOptions& opts);

/// Writes model.ckpt, metrics.csv and energy.csv into opts.out.
void cmd_train(const CommandOptions& opts, std::ostream& log);

/// Prunes opts.checkpoint per the [prune] section. Writes pruned.ckpt,
/// plans.csv, prune_report.csv, flops_iter<t>.csv, finetune_metrics.csv and
/// energy_pruned.csv into opts.out.
void cmd_prune(const CommandOptions& opts, std::ostream& log);

/// Prints the eval-split accuracy of opts.checkpoint; never writes to it.
double cmd_eval(const CommandOptions& opts, std::ostream& log);

/// Merges run directories into accuracy_vs_flops.{csv,svg} and
/// energy_histogram.{csv,svg} inside opts.out. Each run is labelled by its
/// directory name.
void cmd_report(const CommandOptions& opts, std::ostream& log);

/// Maps an exception from a command to an exit code and prints it.
int exit_code_for(const std::exception& e);

}  // namespace oicsr

#endif  // OICSR_COMMANDS_HPP
