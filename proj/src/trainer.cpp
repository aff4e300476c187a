// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include "oicsr/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <random>
#include <string>

#include "oicsr/errors.hpp"
#include "oicsr/format.hpp"

namespace oicsr {

void validate(const RunConfig& c) {
  if (!(c.lr > 0.0)) throw ConfigError("train.lr must be > 0");
  if (!(c.momentum >= 0.0 && c.momentum < 1.0)) throw ConfigError("train.momentum must lie in [0, 1)");
  if (!(c.weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be >= 0");
  if (!(c.lambda_s >= 0.0)) throw ConfigError("train.lambda_s must be >= 0");
  if (c.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (!(c.fine_tune_lr > 0.0)) throw ConfigError("prune.fine_tune_lr must be > 0");
  for (std::size_t i = 0; i < c.lr_schedule.size(); ++i) {
    if (i > 0 && c.lr_schedule[i].first <= c.lr_schedule[i - 1].first) {
      throw ConfigError("train.lr_schedule epochs must be strictly increasing");
    }
    if (!(c.lr_schedule[i].second > 0.0)) throw ConfigError("train.lr_schedule multipliers must be > 0");
  }
  double prev = 0.0;
  for (double r : c.prune_ratios) {
    if (!(r >= 0.0 && r < 1.0)) throw ConfigError("prune.ratios entries must lie in [0, 1)");
    if (r < prev) throw ConfigError("prune.ratios must be nondecreasing");
    prev = r;
  }
}

nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json schedule = nlohmann::json::array();
  for (const auto& [epoch, mult] : c.lr_schedule) schedule.push_back({epoch, mult});
  return {{"lr", c.lr},
          {"momentum", c.momentum},
          {"weight_decay", c.weight_decay},
          {"lambda_s", c.lambda_s},
          {"regularizer", std::string(to_string(c.regularizer))},
          {"batch_size", c.batch_size},
          {"epochs", c.epochs},
          {"lr_schedule", schedule},
          {"seed", c.seed},
          {"prune_ratios", c.prune_ratios},
          {"criterion", c.criterion ? std::string(to_string(*c.criterion)) : std::string("auto")},
          {"fine_tune_epochs", c.fine_tune_epochs},
          {"fine_tune_lr", c.fine_tune_lr}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    c.lr = j.at("lr").get<double>();
    c.momentum = j.at("momentum").get<double>();
    c.weight_decay = j.at("weight_decay").get<double>();
    c.lambda_s = j.at("lambda_s").get<double>();
    c.regularizer = parse_regularizer(j.at("regularizer").get<std::string>());
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.epochs = j.at("epochs").get<std::size_t>();
    for (const auto& e : j.at("lr_schedule")) c.lr_schedule.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<double>());
    c.seed = j.at("seed").get<std::uint64_t>();
    c.prune_ratios = j.at("prune_ratios").get<std::vector<double>>();
    const auto crit = j.at("criterion").get<std::string>();
    if (crit != "auto") c.criterion = parse_criterion(crit);
    c.fine_tune_epochs = j.at("fine_tune_epochs").get<std::size_t>();
    c.fine_tune_lr = j.at("fine_tune_lr").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("run config snapshot is incomplete: ") + e.what());
  }
  return c;
}

double learning_rate_at(const RunConfig& config, double base_lr, std::size_t epoch, std::size_t epochs) {
  double lr = base_lr;
  if (config.lr_schedule.empty()) {
    const std::size_t half = epochs / 2;
    const std::size_t three_quarters = (3 * epochs) / 4;
    if (half > 0 && epoch >= half) lr *= 0.1;
    if (three_quarters > half && epoch >= three_quarters) lr *= 0.1;
    return lr;
  }
  for (const auto& [at, mult] : config.lr_schedule) {
    if (epoch >= at) lr *= mult;
  }
  return lr;
}

void sgd_nesterov_step(std::span<double> weights, std::span<const double> grads, std::span<double> velocity,
                       double lr, double momentum, double decay) {
  for (std::size_t i = 0; i < weights.size(); ++i) {
    velocity[i] = momentum * velocity[i] + grads[i];
    weights[i] -= lr * (grads[i] + momentum * velocity[i]) + lr * decay * weights[i];
  }
}

SgdNesterov::SgdNesterov(Model& model) {
  for (Tensor* t : model.parameters()) velocity_.emplace_back(t->size(), 0.0);
}

void SgdNesterov::step(Model& model, double lr, double momentum, double weight_decay) {
  std::size_t k = 0;
  for (auto& layer : model.mutable_layers()) {
    for (Tensor* t : {&layer.weight, &layer.bias, &layer.gamma, &layer.beta}) {
      if (t->empty()) continue;
      if (k >= velocity_.size() || velocity_[k].size() != t->size()) {
        throw UsageError("optimizer state does not match the model; create a new optimizer after surgery");
      }
      const double decay = (t == &layer.weight) ? weight_decay : 0.0;
      sgd_nesterov_step(t->data(), t->ensure_grad(), velocity_[k], lr, momentum, decay);
      ++k;
    }
  }
}

namespace {

std::size_t argmax_row(std::span<const double> row) {
  return static_cast<std::size_t>(std::max_element(row.begin(), row.end()) - row.begin());
}

void add_scaled(Model& model, const ModelGrads& grads, double scale) {
  auto& layers = model.mutable_layers();
  for (std::size_t li = 0; li < layers.size(); ++li) {
    auto apply = [scale](Tensor& t, const std::vector<double>& g) {
      if (t.empty()) return;
      auto dst = t.ensure_grad();
      for (std::size_t i = 0; i < g.size(); ++i) dst[i] += scale * g[i];
    };
    apply(layers[li].weight, grads[li].weight);
    apply(layers[li].bias, grads[li].bias);
    apply(layers[li].gamma, grads[li].gamma);
    apply(layers[li].beta, grads[li].beta);
  }
}

void fill_energy_metrics(const Model& model, EpochMetrics& m) {
  m.energy_sum = 0.0;
  m.dead_groups = 0;
  for (const auto& g : score_all(model, Criterion::out_in_channel)) {
    m.energy_sum += g.energy;
    if (g.energy < kDeadGroupEnergy) ++m.dead_groups;
  }
}

TrainMetrics run_training(Model& model, const Dataset& train_set, const Dataset* eval_set, const RunConfig& config,
                          double base_lr, std::size_t epochs, std::uint64_t seed, const MetricsSink& sink) {
  validate(config);
  validate(train_set);
  if (eval_set) validate(*eval_set);
  if (train_set.sample_shape() != model.input_shape()) {
    throw ShapeError("dataset samples are " + shape_string(train_set.sample_shape()) + " but the model expects " +
                     shape_string(model.input_shape()));
  }
  const Shape out = model.output_shape();
  if (out.size() != 1 || out[0] != train_set.num_classes) {
    throw ShapeError("model produces " + shape_string(out) + " logits for " + std::to_string(train_set.num_classes) +
                     " classes");
  }
  const bool structured = config.lambda_s > 0.0 && config.regularizer != RegularizerKind::l2;

  SgdNesterov optimizer(model);
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  TrainMetrics history;

  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    const double lr = learning_rate_at(config, base_lr, epoch, epochs);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const auto labels = train_set.gather_labels(rows);

      model.zero_grad();
      Graph g;
      const Var logits = model.forward(g, g.constant(train_set.gather_inputs(rows)));
      const Var loss = softmax_cross_entropy(g, logits, labels);
      const double loss_value = g.value(loss)[0];
      if (!std::isfinite(loss_value)) {
        throw DivergenceError("loss became non-finite in epoch " + std::to_string(epoch) + " (lr " +
                              format_double(lr) + ")");
      }
      g.backward(loss);
      if (structured) {
        add_scaled(model, structured_value_grad(model, config.regularizer).grads, config.lambda_s);
      }
      optimizer.step(model, lr, config.momentum, config.weight_decay);

      loss_sum += loss_value * static_cast<double>(rows.size());
      const auto& lv = g.value(logits);
      const std::size_t classes = lv.dim(1);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (argmax_row(lv.data().subspan(r * classes, classes)) == static_cast<std::size_t>(labels[r])) ++correct;
      }
    }
    model.zero_grad();

    EpochMetrics m;
    m.epoch = epoch + 1;
    m.loss = loss_sum / static_cast<double>(order.size());
    m.reg = structured ? config.lambda_s * structured_value_grad(model, config.regularizer).value : 0.0;
    m.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
    m.eval_acc = evaluate(model, eval_set ? *eval_set : train_set);
    if (!model.pairs().empty()) fill_energy_metrics(model, m);
    if (!std::isfinite(m.reg)) throw DivergenceError("structured term became non-finite");
    history.push_back(m);
    if (sink) sink(m);
  }
  return history;
}

}  // namespace

double evaluate(const Model& model, const Dataset& data, std::size_t batch_size) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    const std::size_t end = std::min(data.size(), start + batch_size);
    rows.resize(end - start);
    std::iota(rows.begin(), rows.end(), start);
    const Tensor logits = model.predict(data.gather_inputs(rows));
    const std::size_t classes = logits.dim(1);
    for (std::size_t r = 0; r < rows.size(); ++r) {
      if (argmax_row(logits.data().subspan(r * classes, classes)) == static_cast<std::size_t>(data.labels[rows[r]])) {
        ++correct;
      }
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

TrainMetrics train(Model& model, const Dataset& train_set, const Dataset* eval_set, const RunConfig& config,
                   const MetricsSink& sink) {
  return run_training(model, train_set, eval_set, config, config.lr, config.epochs, config.seed, sink);
}

TrainMetrics fine_tune(Model& model, const Dataset& train_set, const Dataset* eval_set, const RunConfig& config,
                       std::size_t epochs, std::uint64_t seed, const MetricsSink& sink) {
  return run_training(model, train_set, eval_set, config, config.fine_tune_lr, epochs, seed, sink);
}

void write_metrics_header(std::ostream& os) { os << "epoch,loss,reg,train_acc,eval_acc,energy_sum,dead_groups\n"; }

void write_metrics_row(std::ostream& os, const EpochMetrics& m) {
  os << m.epoch << ',' << format_double(m.loss) << ',' << format_double(m.reg) << ',' << format_double(m.train_acc)
     << ',' << format_double(m.eval_acc) << ',' << format_double(m.energy_sum) << ',' << m.dead_groups << '\n';
}

}  // namespace oicsr
