// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#ifndef OICSR_CONFIG_HPP
#define OICSR_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "oicsr/dataset.hpp"
#include "oicsr/model.hpp"
#include "oicsr/trainer.hpp"

namespace oicsr {

struct DataConfig {
  std::string source = "synthetic";  // synthetic | idx
  SyntheticTask task = SyntheticTask::striped_images;
  std::size_t train_size = 800;
  std::size_t eval_size = 400;
  std::uint64_t seed = 7;
  std::filesystem::path train_images, train_labels, eval_images, eval_labels;
};

struct ExperimentConfig {
  Architecture architecture;
  DataConfig data;
  RunConfig run;
  std::size_t prune_iterations = 0;
};

/// Flat "section.key" -> raw value map, as read from the config file.
using ConfigValues = std::map<std::string, std::string>;

/// Every accepted key, "section.key" form.
const std::vector<std::string>& config_keys();

/// Reads an INI-style file with [model], [data], [train] and [prune]
/// sections. Unknown sections or keys throw ConfigError.
ConfigValues read_config_file(const std::filesystem::path& path);
ConfigValues parse_config_text(const std::string& text);

/// Applies KEY=VALUE overrides. KEY is "section.key" or a bare key that is
/// unique across sections.
void apply_overrides(ConfigValues& values, const std::vector<std::string>& overrides);

/// Type-checks and converts; errors name the offending key.
ExperimentConfig to_experiment(const ConfigValues& values);

/// (train, eval) datasets described by the [data] section.
std::pair<Dataset, Dataset> load_datasets(const DataConfig& data);

}  // namespace oicsr

#endif  // OICSR_CONFIG_HPP
