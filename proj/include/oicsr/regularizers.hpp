// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#ifndef OICSR_REGULARIZERS_HPP
#define OICSR_REGULARIZERS_HPP

#include <string>
#include <string_view>
#include <vector>

#include "oicsr/model.hpp"

namespace oicsr {

enum class RegularizerKind { l2, separated_gl, oicsr_gl, l1_scale };

std::string_view to_string(RegularizerKind kind);
RegularizerKind parse_regularizer(std::string_view text);

/// Group norms at or below this are treated as zero: the subgradient there is 0.
inline constexpr double kGroupNormEpsilon = 1e-12;

/// Gradient buffers shaped like the model's parameters; a buffer is empty
/// where the layer has no such parameter.
struct LayerGrads {
  std::vector<double> weight;
  std::vector<double> bias;
  std::vector<double> gamma;
  std::vector<double> beta;
};
using ModelGrads = std::vector<LayerGrads>;

ModelGrads zero_grads_like(const Model& model);

struct RegValueGrad {
  double value = 0.0;
  ModelGrads grads;
};

/// Sum of squared dense/conv weights; gradient 2w.
RegValueGrad l2_value_grad(const Model& model);

/// Group Lasso over the out-channels (rows) of every non-final weighted layer.
RegValueGrad separated_gl_value_grad(const Model& model);

/// Group Lasso over out-in-channel groups: for every pair and channel i,
/// sqrt(|out-slice i|^2 + |in-slice i|^2). A weight lying in the in-slice of
/// one pair and the out-slice of the next receives both contributions.
/// Throws ConfigError for a model without pairs.
RegValueGrad oicsr_gl_value_grad(const Model& model);

/// Sum of |gamma| over scale_shift layers; gradient sign(gamma), sign(0) = 0.
/// Throws ConfigError if the model has no scale_shift layer.
RegValueGrad l1_scale_value_grad(const Model& model);

/// The structured term selected by `kind`; l2 has none and yields zero.
RegValueGrad structured_value_grad(const Model& model, RegularizerKind kind);

}  // namespace oicsr

#endif  // OICSR_REGULARIZERS_HPP
