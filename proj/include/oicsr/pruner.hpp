// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#ifndef OICSR_PRUNER_HPP
#define OICSR_PRUNER_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "oicsr/importance.hpp"
#include "oicsr/model.hpp"

namespace oicsr {

/// Header line written into every FLOPs report.
inline constexpr const char* kFlopsConvention = "# flops convention: one multiply-add = 2 FLOPs";

struct LayerCost {
  std::size_t layer = 0;
  std::uint64_t flops = 0;
  std::uint64_t params = 0;
};

struct FlopsReport {
  std::vector<LayerCost> per_layer;
  std::uint64_t total_flops = 0;
  std::uint64_t total_params = 0;
};

/// Per-sample cost. conv: 2*OC*IC*k*k*H'*W', dense: 2*OC*IC, others 0.
/// Params count weights, biases, gamma and beta.
FlopsReport count_flops(const Model& model);

/// count_flops for the model with `removed[p]` channels of each pair p gone,
/// without touching any weights. Spatial extents do not depend on channel
/// counts, so only per-layer channel counts change.
FlopsReport simulate_flops(const Model& model, std::span<const std::size_t> removed);

struct PruningPlan {
  std::size_t iteration = 0;
  double target_ratio = 0.0;
  /// Ascending energy, subject to the per-pair cap.
  std::vector<OutInChannelGroup> removals;
  /// Fraction of the original model's FLOPs removed once this plan is applied.
  double achieved_flops_ratio = 0.0;
  std::uint64_t predicted_flops = 0;
  std::uint64_t predicted_params = 0;
  /// Pairs where the per-iteration cap stopped a removal the budget needed.
  std::vector<std::size_t> capped_pairs;
  /// Channel count of each pair when the plan was made; guards against stale plans.
  std::vector<std::size_t> pair_channel_counts;
};

/// At most this many channels of a pair may go in one iteration.
std::size_t per_iteration_cap(std::size_t channel_count);

/// Greedy global selection: walk groups by ascending energy and remove them
/// until simulated FLOPs drop below (1 - target_ratio) * original_flops,
/// skipping groups of pairs that already lost half their channels in this
/// iteration. An unreachable target yields the maximal capped plan.
PruningPlan select_prune_set(const Model& model, std::vector<OutInChannelGroup> scores, double target_ratio,
                             std::uint64_t original_flops, std::size_t iteration = 1);

/// Physically removes each planned group: out-layer row and bias entry,
/// in-layer column block, and the per-channel state of intervening
/// scale_shift layers. Throws SurgeryError for plans that do not fit.
Model apply_surgery(const Model& model, const PruningPlan& plan);

/// Zeroes the same parameters apply_surgery would remove, keeping shapes.
void zero_groups(Model& model, std::span<const OutInChannelGroup> groups);

struct PruneSchedule {
  /// Cumulative FLOPs ratios, one per iteration, nondecreasing in [0, 1).
  std::vector<double> ratios;
  Criterion criterion = Criterion::out_in_channel;
};

struct IterationReport {
  PruningPlan plan;
  FlopsReport flops;
  double accuracy_before_fine_tune = 0.0;
  double accuracy_after_fine_tune = 0.0;
};

struct PruneHooks {
  std::function<double(const Model&)> evaluate;
  /// Called after every surgery; may be empty (no fine-tuning).
  std::function<void(Model&, std::size_t iteration)> fine_tune;
  std::function<void(const std::string&)> warn;
};

struct PruneResult {
  Model model;
  std::vector<IterationReport> iterations;
};

/// Iterative score -> select -> surgery -> fine-tune loop. Targets always
/// refer to `original_flops`, the FLOPs of the unpruned model.
PruneResult prune_loop(Model model, const PruneSchedule& schedule, const PruneHooks& hooks,
                       std::optional<std::uint64_t> original_flops = std::nullopt);

void write_flops_csv(std::ostream& os, const Model& model, const FlopsReport& report);
/// Columns: iteration,pair_id,channel,energy
void write_plan_csv(std::ostream& os, std::span<const PruningPlan> plans);
/// Reloads removals written by write_plan_csv, grouped by iteration.
std::vector<PruningPlan> read_plan_csv(std::istream& is);

}  // namespace oicsr

#endif  // OICSR_PRUNER_HPP
