// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oicsr/errors.hpp"
#include "oicsr/regularizers.hpp"
#include "support/oracles.hpp"

using namespace oicsr;
using namespace oicsr::testing;

namespace {

// input 2 -> dense:1 (w = [3, 4]) -> dense:1 (w = [12])
Model three_four_twelve() {
  std::vector<Layer> layers(2);
  layers[0].spec = {LayerKind::dense, 1, 0, 1, 0, false};
  layers[0].weight = Tensor({1, 2}, {3, 4});
  layers[1].spec = {LayerKind::dense, 1, 0, 1, 0, false};
  layers[1].weight = Tensor({1, 1}, {12});
  return Model::from_layers({2}, std::move(layers));
}

}  // namespace

TEST_CASE("out-in-channel group of [3, 4] and [12]") {
  const Model m = three_four_twelve();
  const auto r = oicsr_gl_value_grad(m);
  CHECK(r.value == doctest::Approx(13.0).epsilon(1e-15));
  CHECK(r.grads[0].weight[0] == doctest::Approx(3.0 / 13.0));
  CHECK(r.grads[0].weight[1] == doctest::Approx(4.0 / 13.0));
  CHECK(r.grads[1].weight[0] == doctest::Approx(12.0 / 13.0));
  // separated: only the out-layer row [3, 4]
  const auto s = separated_gl_value_grad(m);
  CHECK(s.value == doctest::Approx(5.0));
  CHECK(s.grads[1].weight[0] == 0.0);
  CHECK(l2_value_grad(m).value == doctest::Approx(9.0 + 16.0 + 144.0));
}

TEST_CASE("regularizer gradients match finite differences") {
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    Model m = random_model(rng);
    CHECK(regularizer_gradient_error(m, l2_value_grad) <= 1e-5);
    CHECK(regularizer_gradient_error(m, separated_gl_value_grad) <= 1e-5);
    CHECK(regularizer_gradient_error(m, oicsr_gl_value_grad) <= 1e-5);
    bool has_scale = false;
    for (const auto& l : m.layers()) has_scale = has_scale || l.spec.kind == LayerKind::scale_shift;
    if (has_scale) CHECK(regularizer_gradient_error(m, l1_scale_value_grad) <= 1e-5);
  }
}

TEST_CASE("oicsr value is the sum of concatenated group norms") {
  for (int seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const Model m = random_model(rng);
    double expected = 0.0;
    for (std::size_t p = 0; p < m.pairs().size(); ++p)
      for (std::size_t c = 0; c < m.pairs()[p].channel_count; ++c) expected += concat_group_norm(m, p, c);
    CHECK(oicsr_gl_value_grad(m).value == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("middle-layer weights receive one contribution from each group they sit in") {
  int checked = 0;
  for (int seed = 0; checked < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const Model m = random_model(rng);
    if (m.pairs().size() < 2) continue;
    ++checked;
    std::vector<std::vector<double>> oracle(m.layers().size());
    for (std::size_t l = 0; l < m.layers().size(); ++l) oracle[l].assign(m.layers()[l].weight.size(), 0.0);
    for (std::size_t p = 0; p < m.pairs().size(); ++p) {
      const auto& pair = m.pairs()[p];
      const auto& wo = m.layers()[pair.out_layer].weight;
      const auto& wi = m.layers()[pair.in_layer].weight;
      for (std::size_t c = 0; c < pair.channel_count; ++c) {
        const double norm = concat_group_norm(m, p, c);
        for (auto i : direct_out_indices(wo, c)) oracle[pair.out_layer][i] += wo[i] / norm;
        for (auto i : direct_in_indices(wi, c, pair.in_multiplicity)) oracle[pair.in_layer][i] += wi[i] / norm;
      }
    }
    const auto r = oicsr_gl_value_grad(m);
    const std::size_t middle = m.pairs()[0].in_layer;
    REQUIRE(middle == m.pairs()[1].out_layer);
    CHECK(max_abs_diff(r.grads[middle].weight, oracle[middle]) <= 1e-12);
    // and the middle gradient is not what either group alone would give
    const auto& w = m.layers()[middle].weight;
    const double single = w[0] / concat_group_norm(m, 1, 0);
    CHECK(std::abs(r.grads[middle].weight[0] - single) > 1e-12);
    for (std::size_t l = 0; l < m.layers().size(); ++l) {
      if (!m.layers()[l].weight.empty()) CHECK(max_abs_diff(r.grads[l].weight, oracle[l]) <= 1e-12);
    }
  }
}

TEST_CASE("zero groups have zero subgradient") {
  Model m = three_four_twelve();
  m.mutable_layers()[0].weight = Tensor({1, 2}, 0.0);
  m.mutable_layers()[1].weight = Tensor({1, 1}, 0.0);
  const auto r = oicsr_gl_value_grad(m);
  CHECK(r.value == 0.0);
  CHECK(r.grads[0].weight == std::vector<double>{0.0, 0.0});
  CHECK(r.grads[1].weight == std::vector<double>{0.0});
}

TEST_CASE("configuration errors for models without the needed structure") {
  std::vector<Layer> one(1);
  one[0].spec = {LayerKind::dense, 2, 0, 1, 0, true};
  one[0].weight = Tensor({2, 3}, 1.0);
  one[0].bias = Tensor({2}, 0.0);
  const Model single = Model::from_layers({3}, std::move(one));
  CHECK_THROWS_AS(oicsr_gl_value_grad(single), ConfigError);
  CHECK_THROWS_AS(l1_scale_value_grad(three_four_twelve()), ConfigError);
  CHECK(structured_value_grad(three_four_twelve(), RegularizerKind::l2).value == 0.0);
  CHECK(parse_regularizer("oicsr_gl") == RegularizerKind::oicsr_gl);
  CHECK_THROWS_AS(parse_regularizer("l3"), ConfigError);
}
