// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include "oicsr/regularizers.hpp"

#include <cmath>

#include "oicsr/errors.hpp"

namespace oicsr {

std::string_view to_string(RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::l2: return "l2";
    case RegularizerKind::separated_gl: return "separated_gl";
    case RegularizerKind::oicsr_gl: return "oicsr_gl";
    case RegularizerKind::l1_scale: return "l1_scale";
  }
  return "?";
}

RegularizerKind parse_regularizer(std::string_view text) {
  if (text == "l2") return RegularizerKind::l2;
  if (text == "separated_gl") return RegularizerKind::separated_gl;
  if (text == "oicsr_gl") return RegularizerKind::oicsr_gl;
  if (text == "l1_scale") return RegularizerKind::l1_scale;
  throw ConfigError("unknown regularizer '" + std::string(text) +
                    "' (expected l2, separated_gl, oicsr_gl or l1_scale)");
}

ModelGrads zero_grads_like(const Model& model) {
  ModelGrads grads(model.layers().size());
  for (std::size_t i = 0; i < grads.size(); ++i) {
    const auto& l = model.layers()[i];
    grads[i].weight.assign(l.weight.size(), 0.0);
    grads[i].bias.assign(l.bias.size(), 0.0);
    grads[i].gamma.assign(l.gamma.size(), 0.0);
    grads[i].beta.assign(l.beta.size(), 0.0);
  }
  return grads;
}

RegValueGrad l2_value_grad(const Model& model) {
  RegValueGrad out{0.0, zero_grads_like(model)};
  for (std::size_t li = 0; li < model.layers().size(); ++li) {
    const auto& layer = model.layers()[li];
    if (!layer.is_weighted()) continue;
    auto& g = out.grads[li].weight;
    const auto w = layer.weight.data();
    for (std::size_t j = 0; j < w.size(); ++j) {
      out.value += w[j] * w[j];
      g[j] = 2.0 * w[j];
    }
  }
  return out;
}

RegValueGrad separated_gl_value_grad(const Model& model) {
  RegValueGrad out{0.0, zero_grads_like(model)};
  for (std::size_t p = 0; p < model.pairs().size(); ++p) {
    const auto& pair = model.pairs()[p];
    const auto w = model.layers()[pair.out_layer].weight.data();
    auto& g = out.grads[pair.out_layer].weight;
    for (std::size_t i = 0; i < pair.channel_count; ++i) {
      const auto slice = model.out_channel_slice(p, i);
      const double norm = std::sqrt(squared_norm(w, slice));
      if (norm <= kGroupNormEpsilon) continue;
      out.value += norm;
      slice.for_each_index([&](std::size_t k) { g[k] += w[k] / norm; });
    }
  }
  return out;
}

RegValueGrad oicsr_gl_value_grad(const Model& model) {
  if (model.pairs().empty()) {
    throw ConfigError("oicsr_gl needs at least two consecutive weighted layers");
  }
  RegValueGrad out{0.0, zero_grads_like(model)};
  for (std::size_t p = 0; p < model.pairs().size(); ++p) {
    const auto& pair = model.pairs()[p];
    const auto w_out = model.layers()[pair.out_layer].weight.data();
    const auto w_in = model.layers()[pair.in_layer].weight.data();
    auto& g_out = out.grads[pair.out_layer].weight;
    auto& g_in = out.grads[pair.in_layer].weight;
    for (std::size_t i = 0; i < pair.channel_count; ++i) {
      const auto out_slice = model.out_channel_slice(p, i);
      const auto in_slice = model.in_channel_slice(p, i);
      const double norm = std::sqrt(squared_norm(w_out, out_slice) + squared_norm(w_in, in_slice));
      if (norm <= kGroupNormEpsilon) continue;
      out.value += norm;
      out_slice.for_each_index([&](std::size_t k) { g_out[k] += w_out[k] / norm; });
      in_slice.for_each_index([&](std::size_t k) { g_in[k] += w_in[k] / norm; });
    }
  }
  return out;
}

RegValueGrad l1_scale_value_grad(const Model& model) {
  RegValueGrad out{0.0, zero_grads_like(model)};
  bool found = false;
  for (std::size_t li = 0; li < model.layers().size(); ++li) {
    const auto& layer = model.layers()[li];
    if (layer.spec.kind != LayerKind::scale_shift) continue;
    found = true;
    const auto gamma = layer.gamma.data();
    auto& g = out.grads[li].gamma;
    for (std::size_t c = 0; c < gamma.size(); ++c) {
      out.value += std::abs(gamma[c]);
      g[c] = gamma[c] > 0.0 ? 1.0 : (gamma[c] < 0.0 ? -1.0 : 0.0);
    }
  }
  if (!found) throw ConfigError("l1_scale needs at least one scale_shift layer");
  return out;
}

RegValueGrad structured_value_grad(const Model& model, RegularizerKind kind) {
  switch (kind) {
    case RegularizerKind::l2: return RegValueGrad{0.0, zero_grads_like(model)};
    case RegularizerKind::separated_gl: return separated_gl_value_grad(model);
    case RegularizerKind::oicsr_gl: return oicsr_gl_value_grad(model);
    case RegularizerKind::l1_scale: return l1_scale_value_grad(model);
  }
  throw ConfigError("unknown regularizer");
}

}  // namespace oicsr
