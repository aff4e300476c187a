// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include <algorithm>
#include <string>

#include "doctest.h"
#include "oicsr/config.hpp"
#include "oicsr/errors.hpp"

using namespace oicsr;

namespace {

const std::string kMinimal = R"(
[model]
input = 2
layers = dense:4, relu, dense:2

[data]
source = synthetic
task = two_moons
train_size = 40
eval_size = 20

[train]
lr = 0.02
epochs = 2
lr_schedule = 1:0.5
)";

}  // namespace

TEST_CASE("minimal config fills defaults") {
  const auto cfg = to_experiment(parse_config_text(kMinimal));
  CHECK(cfg.architecture.input_shape == Shape{2});
  CHECK(cfg.architecture.layers.size() == 3);
  CHECK(cfg.data.task == SyntheticTask::two_moons);
  CHECK(cfg.data.train_size == 40);
  CHECK(cfg.run.lr == 0.02);
  CHECK(cfg.run.momentum == 0.9);
  CHECK(cfg.run.weight_decay == 1e-4);
  CHECK(cfg.run.lambda_s == 1e-4);
  CHECK(cfg.run.regularizer == RegularizerKind::oicsr_gl);
  CHECK(cfg.run.lr_schedule == std::vector<std::pair<std::size_t, double>>{{1, 0.5}});
  CHECK(cfg.prune_iterations == 0);
  CHECK_FALSE(cfg.run.criterion.has_value());
}

TEST_CASE("overrides take section keys or unique bare keys") {
  auto values = parse_config_text(kMinimal);
  apply_overrides(values, {"train.lambda_s=0", "regularizer=l2", "ratios = 0.2, 0.4", "criterion=out_channel"});
  const auto cfg = to_experiment(values);
  CHECK(cfg.run.lambda_s == 0.0);
  CHECK(cfg.run.regularizer == RegularizerKind::l2);
  CHECK(cfg.run.prune_ratios == std::vector<double>{0.2, 0.4});
  CHECK(cfg.prune_iterations == 2);
  CHECK(cfg.run.criterion == Criterion::out_channel);
  CHECK_THROWS_WITH_AS(apply_overrides(values, {"seed=3"}), doctest::Contains("ambiguous"), ConfigError);
  CHECK_THROWS_WITH_AS(apply_overrides(values, {"train.speed=3"}), doctest::Contains("train.speed"), ConfigError);
  CHECK_THROWS_AS(apply_overrides(values, {"lr"}), ConfigError);
}

TEST_CASE("errors name the offending key") {
  CHECK_THROWS_WITH_AS(parse_config_text("[train]\nlearning_rate = 0.1\n"), doctest::Contains("learning_rate"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(parse_config_text("[extras]\nx = 1\n"), doctest::Contains("extras"), ConfigError);
  CHECK_THROWS_WITH_AS(to_experiment(parse_config_text("[model]\ninput = 2\n")), doctest::Contains("model.layers"),
                       ConfigError);
  auto values = parse_config_text(kMinimal);
  values["train.lr"] = "fast";
  CHECK_THROWS_WITH_AS(to_experiment(values), doctest::Contains("train.lr"), ConfigError);
  values = parse_config_text(kMinimal);
  values["prune.ratios"] = "0.2";
  values["prune.iterations"] = "3";
  CHECK_THROWS_WITH_AS(to_experiment(values), doctest::Contains("prune.iterations"), ConfigError);
  values = parse_config_text(kMinimal);
  values["train.regularizer"] = "l1_scale";
  CHECK_THROWS_WITH_AS(to_experiment(values), doctest::Contains("train.regularizer"), ConfigError);
  values = parse_config_text(kMinimal);
  values["prune.criterion"] = "scale_magnitude";
  CHECK_THROWS_WITH_AS(to_experiment(values), doctest::Contains("prune.criterion"), ConfigError);
  values = parse_config_text(kMinimal);
  values.erase("data.source");
  CHECK_THROWS_WITH_AS(to_experiment(values), doctest::Contains("data.source"), ConfigError);
  values["data.source"] = "idx";
  CHECK_THROWS_WITH_AS(to_experiment(values), doctest::Contains("data.train_images"), ConfigError);
  values = parse_config_text(kMinimal);
  values["model.layers"] = "dense:4, wobble";
  CHECK_THROWS_AS(to_experiment(values), ConfigError);
}

TEST_CASE("datasets follow the data section") {
  const auto cfg = to_experiment(parse_config_text(kMinimal));
  const auto [train, eval] = load_datasets(cfg.data);
  CHECK(train.size() == 40);
  CHECK(eval.size() == 20);
  CHECK(eval.split == Split::eval);
  CHECK_FALSE(std::equal(eval.inputs.data().begin(), eval.inputs.data().end(), train.inputs.data().begin()));
}
