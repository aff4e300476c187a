// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#ifndef OICSR_TRAINER_HPP
#define OICSR_TRAINER_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <json.hpp>

#include "oicsr/dataset.hpp"
#include "oicsr/importance.hpp"
#include "oicsr/model.hpp"
#include "oicsr/regularizers.hpp"

namespace oicsr {

/// Groups below this out-in-channel energy count as dead in metrics.
inline constexpr double kDeadGroupEnergy = 1e-8;

struct RunConfig {
  double lr = 0.05;
  double momentum = 0.9;
  double weight_decay = 1e-4;
  double lambda_s = 1e-4;
  RegularizerKind regularizer = RegularizerKind::oicsr_gl;
  std::size_t batch_size = 32;
  std::size_t epochs = 20;
  /// (epoch, multiplier) pairs, epochs strictly increasing; multipliers
  /// compound from that epoch on. Empty means x0.1 at 50% and 75% of the run.
  std::vector<std::pair<std::size_t, double>> lr_schedule;
  std::uint64_t seed = 1;
  /// Cumulative FLOPs pruning target per iteration; its length is T.
  std::vector<double> prune_ratios;
  /// Defaults to the criterion matching the regularizer.
  std::optional<Criterion> criterion;
  std::size_t fine_tune_epochs = 5;
  double fine_tune_lr = 0.01;

  [[nodiscard]] Criterion effective_criterion() const {
    return criterion.value_or(default_criterion(regularizer));
  }
};

/// Throws ConfigError naming the offending field.
void validate(const RunConfig& config);
nlohmann::json to_json(const RunConfig& config);
RunConfig run_config_from_json(const nlohmann::json& j);

/// Learning rate in effect during `epoch` (0-based) of a run of `epochs`.
double learning_rate_at(const RunConfig& config, double base_lr, std::size_t epoch, std::size_t epochs);

struct EpochMetrics {
  std::size_t epoch = 0;
  double loss = 0.0;       // mean data loss over the epoch
  double reg = 0.0;        // lambda_s * structured term at epoch end
  double train_acc = 0.0;  // running accuracy over the epoch's batches
  double eval_acc = 0.0;
  double energy_sum = 0.0;  // sum of out-in-channel energies
  std::size_t dead_groups = 0;
};

using TrainMetrics = std::vector<EpochMetrics>;
using MetricsSink = std::function<void(const EpochMetrics&)>;

/// w <- w - lr * (g + momentum * v') - lr * decay * w, with v' = momentum * v + g.
void sgd_nesterov_step(std::span<double> weights, std::span<const double> grads, std::span<double> velocity,
                       double lr, double momentum, double decay);

/// Momentum buffers for every parameter of one model; decay applies to
/// dense/conv weights only.
class SgdNesterov {
 public:
  explicit SgdNesterov(Model& model);
  void step(Model& model, double lr, double momentum, double weight_decay);

 private:
  std::vector<std::vector<double>> velocity_;
};

double evaluate(const Model& model, const Dataset& data, std::size_t batch_size = 256);

/// Minimizes mean cross-entropy + lambda_s * structured term, with decoupled
/// weight decay. Deterministic given config.seed. Throws DivergenceError on
/// a non-finite loss.
TrainMetrics train(Model& model, const Dataset& train_set, const Dataset* eval_set, const RunConfig& config,
                   const MetricsSink& sink = {});

/// train() from the current weights with fresh momentum, for `epochs`
/// epochs at config.fine_tune_lr, keeping the structured term active.
TrainMetrics fine_tune(Model& model, const Dataset& train_set, const Dataset* eval_set, const RunConfig& config,
                       std::size_t epochs, std::uint64_t seed, const MetricsSink& sink = {});

/// Columns: epoch,loss,reg,train_acc,eval_acc,energy_sum,dead_groups
void write_metrics_header(std::ostream& os);
void write_metrics_row(std::ostream& os, const EpochMetrics& m);

}  // namespace oicsr

#endif  // OICSR_TRAINER_HPP
