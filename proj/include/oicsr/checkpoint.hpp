// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#ifndef OICSR_CHECKPOINT_HPP
#define OICSR_CHECKPOINT_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "oicsr/model.hpp"
#include "oicsr/pruner.hpp"

namespace oicsr {

inline constexpr int kCheckpointVersion = 1;

struct CheckpointMeta {
  nlohmann::json run_config = nlohmann::json::object();
  std::vector<PruningPlan> history;
  /// FLOPs of the model before any pruning; 0 means "not recorded".
  std::uint64_t original_flops = 0;
};

struct LoadedCheckpoint {
  Model model;
  CheckpointMeta meta;
};

/// Single-file checkpoint, written atomically (temp file + rename):
///
///   oicsr-checkpoint\n
///   version 1\n
///   header-bytes N\n   followed by N bytes of JSON (architecture, pairs,
///                      parameter sizes, run config, pruning history)
///   payload-bytes M\n  followed by M bytes: every parameter buffer in layer
///                      order (weight, bias, gamma, beta), IEEE-754 binary64
///                      little-endian
///   fnv1a64 XXXXXXXXXXXXXXXX\n   checksum of all bytes through the payload
void save_checkpoint(const Model& model, const CheckpointMeta& meta, const std::filesystem::path& path);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

std::string serialize_checkpoint(const Model& model, const CheckpointMeta& meta);
LoadedCheckpoint parse_checkpoint(const std::string& bytes);

nlohmann::json plan_to_json(const PruningPlan& plan);
PruningPlan plan_from_json(const nlohmann::json& j);

}  // namespace oicsr

#endif  // OICSR_CHECKPOINT_HPP
