// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0
//
// Test-only reference computations. Nothing here calls the slice, energy,
// regularizer, selection or FLOPs code it is used to check.

#ifndef OICSR_TESTS_ORACLES_HPP
#define OICSR_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <set>
#include <tuple>
#include <utility>
#include <span>
#include <vector>

#include "oicsr/autodiff.hpp"
#include "oicsr/importance.hpp"
#include "oicsr/regularizers.hpp"
#include "oicsr/model.hpp"
#include "oicsr/tensor.hpp"

namespace oicsr::testing {

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Tensor t(shape);
  for (auto& v : t.data()) v = dist(rng);
  return t;
}

/// sum(x * coeffs) with its own reverse rule, so checks see a non-uniform
/// upstream gradient.
inline Var weighted_sum(Graph& g, Var x, std::vector<double> coeffs) {
  double total = 0.0;
  const auto& xv = g.value(x);
  for (std::size_t i = 0; i < xv.size(); ++i) total += xv[i] * coeffs[i];
  return g.record(Tensor({1}, {total}), {x}, [coeffs = std::move(coeffs)](const BackwardArgs& args) {
    if (args.in_grads[0].empty()) return;
    for (std::size_t i = 0; i < coeffs.size(); ++i) args.in_grads[0][i] += args.out_grad[0] * coeffs[i];
  });
}

/// Central differences of f with respect to every entry of `x`.
inline std::vector<double> numeric_gradient(const std::function<double()>& f, std::span<double> x, double h = 1e-6) {
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f();
    x[i] = keep - h;
    const double down = f();
    x[i] = keep;
    out[i] = (up - down) / (2.0 * h);
  }
  return out;
}

/// ||a - b|| / max(||a||, ||b||), 0 when both vanish.
inline double relative_error(std::span<const double> a, std::span<const double> b) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(std::max(na, nb));
  return denom < 1e-300 ? 0.0 : std::sqrt(diff) / denom;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

using OpBuilder = std::function<Var(Graph&, const std::vector<Var>&)>;

// Checks d(sum(R * op(inputs)))/d(inputs) against central differences.
inline double op_gradient_error(const OpBuilder& op, std::vector<Tensor> inputs, std::mt19937_64& rng) {
  std::vector<double> coeffs;
  auto run = [&](bool grads) {
    Graph g;
    std::vector<Var> vars;
    for (auto& t : inputs) vars.push_back(g.parameter(t));
    Var out = op(g, vars);
    if (coeffs.empty()) {
      std::uniform_real_distribution<double> dist(-1.0, 1.0);
      coeffs.resize(g.value(out).size());
      for (auto& c : coeffs) c = dist(rng);
    }
    Var loss = weighted_sum(g, out, coeffs);
    if (grads) g.backward(loss);
    return g.value(loss)[0];
  };
  for (auto& t : inputs) t.clear_grad();
  run(true);
  double worst = 0.0;
  for (auto& t : inputs) {
    const std::vector<double> analytic(t.grad().begin(), t.grad().end());
    const auto numeric = numeric_gradient([&] { return run(false); }, t.data());
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}


/// Worst relative error between a regularizer's analytic gradient and
/// central differences of its value, over every parameter tensor.
template <typename RegFn>
double regularizer_gradient_error(Model& model, RegFn fn) {
  const auto analytic = fn(model).grads;
  double worst = 0.0;
  auto& layers = model.mutable_layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::pair<Tensor*, const std::vector<double>*> parts[] = {{&layers[l].weight, &analytic[l].weight},
                                                                     {&layers[l].bias, &analytic[l].bias},
                                                                     {&layers[l].gamma, &analytic[l].gamma},
                                                                     {&layers[l].beta, &analytic[l].beta}};
    for (const auto& [tensor, grad] : parts) {
      if (tensor->empty()) continue;
      const auto numeric = numeric_gradient([&] { return fn(model).value; }, tensor->data());
      std::vector<double> g = grad->empty() ? std::vector<double>(tensor->size(), 0.0) : *grad;
      worst = std::max(worst, relative_error(g, numeric));
    }
  }
  return worst;
}

/// Relative error of the full parameter gradient (all tensors concatenated)
/// against central differences of `loss`. Expects grads already filled.
template <typename LossFn>
double network_gradient_error(Model& model, LossFn loss) {
  std::vector<double> analytic, numeric;
  for (Tensor* p : model.parameters()) {
    analytic.insert(analytic.end(), p->grad().begin(), p->grad().end());
    const auto n = numeric_gradient(loss, p->data());
    numeric.insert(numeric.end(), n.begin(), n.end());
  }
  return relative_error(analytic, numeric);
}

// ---- direct index arithmetic for out/in channels --------------------------

/// Flat indices of row `channel` of a dense or conv weight, from explicit
/// multi-index loops.
inline std::vector<std::size_t> direct_out_indices(const Tensor& w, std::size_t channel) {
  std::vector<std::size_t> out;
  if (w.rank() == 2) {
    for (std::size_t j = 0; j < w.dim(1); ++j) out.push_back(channel * w.dim(1) + j);
  } else {
    const std::size_t ic = w.dim(1), kh = w.dim(2), kw = w.dim(3);
    for (std::size_t c = 0; c < ic; ++c)
      for (std::size_t y = 0; y < kh; ++y)
        for (std::size_t x = 0; x < kw; ++x) out.push_back(((channel * ic + c) * kh + y) * kw + x);
  }
  return out;
}

/// Flat indices of the in-layer weights that read feature map `channel`,
/// where each incoming channel feeds `multiplicity` consecutive inputs.
inline std::vector<std::size_t> direct_in_indices(const Tensor& w, std::size_t channel, std::size_t multiplicity) {
  std::vector<std::size_t> out;
  if (w.rank() == 2) {
    for (std::size_t o = 0; o < w.dim(0); ++o)
      for (std::size_t j = channel * multiplicity; j < (channel + 1) * multiplicity; ++j)
        out.push_back(o * w.dim(1) + j);
  } else {
    const std::size_t ic = w.dim(1), kh = w.dim(2), kw = w.dim(3);
    for (std::size_t o = 0; o < w.dim(0); ++o)
      for (std::size_t y = 0; y < kh; ++y)
        for (std::size_t x = 0; x < kw; ++x) out.push_back(((o * ic + channel) * kh + y) * kw + x);
  }
  return out;
}

inline std::vector<double> pick(const Tensor& w, const std::vector<std::size_t>& idx) {
  std::vector<double> out;
  for (auto i : idx) out.push_back(w[i]);
  return out;
}

inline std::vector<double> direct_out_channel(const Tensor& w, std::size_t channel) {
  return pick(w, direct_out_indices(w, channel));
}

inline std::vector<double> direct_in_channel(const Tensor& w, std::size_t channel, std::size_t multiplicity) {
  return pick(w, direct_in_indices(w, channel, multiplicity));
}

inline double sum_squares(const std::vector<double>& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return acc;
}

/// Out-in-channel group norm via concatenation and a single Euclidean norm.
inline double concat_group_norm(const Model& m, std::size_t pair_id, std::size_t channel) {
  const auto& pair = m.pairs()[pair_id];
  auto v = direct_out_channel(m.layers()[pair.out_layer].weight, channel);
  const auto in = direct_in_channel(m.layers()[pair.in_layer].weight, channel, pair.in_multiplicity);
  v.insert(v.end(), in.begin(), in.end());
  return std::sqrt(sum_squares(v));
}

// ---- FLOPs by hand formula -------------------------------------------------

/// Walks the layers with its own shape bookkeeping.
inline std::uint64_t hand_flops(const Model& m) {
  Shape cur = m.input_shape();
  std::uint64_t total = 0;
  for (const auto& l : m.layers()) {
    switch (l.spec.kind) {
      case LayerKind::conv2d: {
        const std::size_t k = l.spec.kernel, s = l.spec.stride, p = l.spec.padding;
        const std::size_t oh = (cur[1] + 2 * p - k) / s + 1, ow = (cur[2] + 2 * p - k) / s + 1;
        total += 2ULL * l.weight.dim(0) * l.weight.dim(1) * k * k * oh * ow;
        cur = {l.weight.dim(0), oh, ow};
        break;
      }
      case LayerKind::dense:
        total += 2ULL * l.weight.dim(0) * l.weight.dim(1);
        cur = {l.weight.dim(0)};
        break;
      case LayerKind::maxpool:
        cur = {cur[0], (cur[1] - l.spec.kernel) / l.spec.stride + 1, (cur[2] - l.spec.kernel) / l.spec.stride + 1};
        break;
      case LayerKind::flatten:
        cur = {cur[0] * cur[1] * cur[2]};
        break;
      default:
        break;
    }
  }
  return total;
}

/// hand_flops with `removed[p]` channels of pair p taken out.
inline std::uint64_t hand_flops_removed(const Model& m, const std::vector<std::size_t>& removed) {
  std::vector<std::size_t> layer_removed(m.layers().size(), 0);
  for (std::size_t p = 0; p < m.pairs().size(); ++p) layer_removed[m.pairs()[p].out_layer] = removed[p];
  Shape cur = m.input_shape();
  std::uint64_t total = 0;
  for (std::size_t i = 0; i < m.layers().size(); ++i) {
    const auto& l = m.layers()[i];
    switch (l.spec.kind) {
      case LayerKind::conv2d: {
        const std::size_t k = l.spec.kernel, s = l.spec.stride, p = l.spec.padding;
        const std::size_t oh = (cur[1] + 2 * p - k) / s + 1, ow = (cur[2] + 2 * p - k) / s + 1;
        const std::size_t oc = l.weight.dim(0) - layer_removed[i];
        total += 2ULL * oc * cur[0] * k * k * oh * ow;
        cur = {oc, oh, ow};
        break;
      }
      case LayerKind::dense: {
        const std::size_t oc = l.weight.dim(0) - layer_removed[i];
        total += 2ULL * oc * cur[0];
        cur = {oc};
        break;
      }
      case LayerKind::maxpool:
        cur = {cur[0], (cur[1] - l.spec.kernel) / l.spec.stride + 1, (cur[2] - l.spec.kernel) / l.spec.stride + 1};
        break;
      case LayerKind::flatten:
        cur = {cur[0] * cur[1] * cur[2]};
        break;
      default:
        break;
    }
  }
  return total;
}

struct GreedyResult {
  std::vector<std::pair<std::size_t, std::size_t>> removals;  // (pair, channel) in removal order
  std::set<std::size_t> capped;
  std::uint64_t flops = 0;
};

/// Step-by-step simulation: stable order by (energy, pair, channel); before
/// each candidate, stop once FLOPs are under budget; a pair at floor(c/2)
/// removals skips its remaining candidates.
inline GreedyResult greedy_oracle(const Model& m, std::vector<std::tuple<double, std::size_t, std::size_t>> groups,
                                  double ratio, std::uint64_t original) {
  GreedyResult r;
  std::vector<std::size_t> removed(m.pairs().size(), 0);
  r.flops = hand_flops_removed(m, removed);
  if (ratio == 0.0) return r;
  std::sort(groups.begin(), groups.end());
  const double budget = (1.0 - ratio) * static_cast<double>(original);
  for (const auto& [energy, pair, channel] : groups) {
    if (static_cast<double>(r.flops) < budget) break;
    if (removed[pair] >= m.pairs()[pair].channel_count / 2) {
      r.capped.insert(pair);
      continue;
    }
    ++removed[pair];
    r.removals.emplace_back(pair, channel);
    r.flops = hand_flops_removed(m, removed);
  }
  return r;
}


/// One score per group; about a third of them drawn from a tiny set so that
/// ties are common.
inline std::vector<OutInChannelGroup> random_scores(const Model& m, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(0.0, 10.0);
  std::vector<OutInChannelGroup> out;
  for (std::size_t p = 0; p < m.pairs().size(); ++p)
    for (std::size_t c = 0; c < m.pairs()[p].channel_count; ++c) {
      const double e = rng() % 3 == 0 ? static_cast<double>(rng() % 3) : dist(rng);
      out.push_back({p, c, e});
    }
  return out;
}

/// Random set of groups leaving at least one channel in every pair.
inline std::vector<OutInChannelGroup> random_removal_set(const Model& m, std::mt19937_64& rng) {
  std::vector<OutInChannelGroup> out;
  for (std::size_t p = 0; p < m.pairs().size(); ++p) {
    std::vector<std::size_t> channels(m.pairs()[p].channel_count);
    for (std::size_t c = 0; c < channels.size(); ++c) channels[c] = c;
    std::shuffle(channels.begin(), channels.end(), rng);
    const std::size_t take = rng() % channels.size();
    for (std::size_t k = 0; k < take; ++k) out.push_back({p, channels[k], 0.0});
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

// ---- constructed fixtures --------------------------------------------------

/// input 4 -> dense:3 -> dense:2. Channel 0 has a small out-row and a large
/// in-column; channel 1 the reverse. Out-channel energies 0.04 / 4 / 16,
/// out-in energies 200.04 / 4.02 / 18. Total 36 FLOPs; one removal leaves 24.
inline Model criterion_fixture() {
  std::vector<Layer> layers(2);
  layers[0].spec = {LayerKind::dense, 3, 0, 1, 0, true};
  layers[0].weight = Tensor({3, 4}, {0.1, 0.1, 0.1, 0.1, 1.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 2.0});
  layers[0].bias = Tensor({3}, {0.5, -0.5, 0.25});
  layers[1].spec = {LayerKind::dense, 2, 0, 1, 0, true};
  layers[1].weight = Tensor({2, 3}, {10.0, 0.1, 1.0, -10.0, 0.1, 1.0});
  layers[1].bias = Tensor({2}, {0.0, 0.0});
  return Model::from_layers({4}, std::move(layers));
}

// ---- random sequential architectures ---------------------------------------

/// Random sequential net with 2..4 weighted layers, mixing conv->conv,
/// conv->flatten->dense and dense->dense pairs with relu / maxpool /
/// scale_shift in between. Always ends in a dense classifier.
inline Architecture random_architecture(std::mt19937_64& rng, std::size_t max_weighted = 4) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  auto coin = [&] { return pick(0, 1) == 1; };
  Architecture arch;
  const std::size_t weighted = pick(2, max_weighted);
  const std::size_t convs = pick(0, weighted - 1);
  if (convs > 0) {
    arch.input_shape = {pick(1, 3), 6, 6};
  } else {
    arch.input_shape = {pick(2, 6)};
  }
  std::size_t side = 6;
  for (std::size_t c = 0; c < convs; ++c) {
    const std::size_t kernel = coin() ? 3 : 1;
    arch.layers.push_back({LayerKind::conv2d, pick(2, 5), kernel, 1, kernel == 3 ? 1u : 0u, coin()});
    if (coin()) arch.layers.push_back({LayerKind::scale_shift});
    if (coin()) arch.layers.push_back({LayerKind::relu});
    if (side >= 4 && coin()) {
      arch.layers.push_back({LayerKind::maxpool, 0, 2, 2, 0, true});
      side /= 2;
    }
  }
  if (convs > 0) {
    arch.layers.push_back({LayerKind::flatten});
    if (coin()) arch.layers.push_back({LayerKind::scale_shift});
  }
  for (std::size_t d = convs; d < weighted; ++d) {
    const bool last = d + 1 == weighted;
    arch.layers.push_back({LayerKind::dense, last ? 3u : pick(2, 6), 0, 1, 0, coin()});
    if (!last) {
      if (coin()) arch.layers.push_back({LayerKind::scale_shift});
      if (coin()) arch.layers.push_back({LayerKind::relu});
    }
  }
  return arch;
}

/// Builds the architecture and randomizes biases / gamma / beta too, so that
/// no parameter is trivially zero or one.
inline Model random_model(std::mt19937_64& rng, std::size_t max_weighted = 4) {
  Model m = Model::build(random_architecture(rng, max_weighted), rng());
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (auto& l : m.mutable_layers()) {
    for (Tensor* t : {&l.bias, &l.beta}) {
      for (auto& v : t->data()) v = dist(rng);
    }
    for (auto& v : l.gamma.data()) v = 1.0 + dist(rng);
  }
  return m;
}

inline Tensor random_batch(const Model& m, std::size_t n, std::mt19937_64& rng) {
  Shape shape{n};
  shape.insert(shape.end(), m.input_shape().begin(), m.input_shape().end());
  return random_tensor(shape, rng);
}

}  // namespace oicsr::testing

#endif  // OICSR_TESTS_ORACLES_HPP
