// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#ifndef OICSR_MODEL_HPP
#define OICSR_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "oicsr/autodiff.hpp"
#include "oicsr/tensor.hpp"

namespace oicsr {

enum class LayerKind { dense, conv2d, scale_shift, relu, maxpool, flatten };

std::string_view to_string(LayerKind kind);
LayerKind parse_layer_kind(std::string_view text);

/// One entry of an architecture description. `out_channels` applies to
/// dense and conv2d; `kernel`/`stride` to conv2d and maxpool; `padding` to
/// conv2d only.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t out_channels = 0;
  std::size_t kernel = 0;
  std::size_t stride = 1;
  std::size_t padding = 0;
  bool bias = true;

  [[nodiscard]] bool is_weighted_kind() const noexcept {
    return kind == LayerKind::dense || kind == LayerKind::conv2d;
  }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Per-sample input shape ({features} or {C, H, W}) plus the layer list.
struct Architecture {
  Shape input_shape;
  std::vector<LayerSpec> layers;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// Text form used by config files and checkpoints, e.g.
/// "conv:8:3:1:1, relu, maxpool:2:2, flatten, dense:10".
std::string format_layers(const std::vector<LayerSpec>& layers);
std::vector<LayerSpec> parse_layers(std::string_view text);
std::string format_shape(const Shape& shape);  // "1x12x12"
Shape parse_shape(std::string_view text);

struct Layer {
  LayerSpec spec;
  Tensor weight;  // dense: OC x IC; conv2d: OC x IC x k x k
  Tensor bias;    // length OC, absent when spec.bias is false
  Tensor gamma;   // scale_shift only
  Tensor beta;

  [[nodiscard]] bool is_weighted() const noexcept {
    return spec.kind == LayerKind::dense || spec.kind == LayerKind::conv2d;
  }
  [[nodiscard]] std::size_t out_channels() const { return weight.dim(0); }
  [[nodiscard]] std::size_t in_channels() const { return weight.dim(1); }
};

/// A consecutive pair of weighted layers whose out-channel i (rows of
/// out_layer) and in-channel i (column block i of in_layer) form one
/// regularization / pruning group.
struct ChannelPair {
  std::size_t out_layer = 0;
  std::size_t in_layer = 0;
  std::size_t channel_count = 0;
  /// In-layer columns per out-channel: 1, or H*W when a flatten sits between.
  std::size_t in_multiplicity = 1;
  /// relu / maxpool / scale_shift layers between the two.
  std::vector<std::size_t> intervening;

  friend bool operator==(const ChannelPair&, const ChannelPair&) = default;
};

/// Strided index set into one layer's weight buffer: `count` segments of
/// `length` contiguous values, starting at `offset`, `stride` apart.
struct SliceLayout {
  std::size_t layer = 0;
  std::size_t offset = 0;
  std::size_t count = 0;
  std::size_t length = 0;
  std::size_t stride = 0;

  [[nodiscard]] std::size_t size() const noexcept { return count * length; }

  template <typename F>
  void for_each_index(F&& f) const {
    for (std::size_t s = 0; s < count; ++s) {
      const std::size_t base = offset + s * stride;
      for (std::size_t j = 0; j < length; ++j) f(base + j);
    }
  }
};

std::vector<double> gather(std::span<const double> buffer, const SliceLayout& slice);
double squared_norm(std::span<const double> buffer, const SliceLayout& slice);

/// Per-sample activation shape entering and leaving a layer.
struct LayerGeometry {
  Shape in_shape;
  Shape out_shape;
};

/// Sequential network with derived out-in-channel pairs.
class Model {
 public:
  Model() = default;

  /// Builds and initializes weights (He-normal, zero biases, gamma=1, beta=0).
  static Model build(const Architecture& arch, std::uint64_t seed);
  /// Wraps existing layers; validates the chain and derives pairs.
  static Model from_layers(Shape input_shape, std::vector<Layer> layers);

  [[nodiscard]] const Shape& input_shape() const noexcept { return input_shape_; }
  [[nodiscard]] const std::vector<Layer>& layers() const noexcept { return layers_; }
  /// Mutable access for training and surgery. Call refresh() after any
  /// change of shape.
  [[nodiscard]] std::vector<Layer>& mutable_layers() noexcept { return layers_; }
  void refresh();

  [[nodiscard]] const std::vector<ChannelPair>& pairs() const noexcept { return pairs_; }
  [[nodiscard]] const std::vector<LayerGeometry>& geometry() const noexcept { return geometry_; }
  [[nodiscard]] Architecture architecture() const;
  [[nodiscard]] Shape output_shape() const;
  /// Index of the last weighted layer, or layers().size() if there is none.
  [[nodiscard]] std::size_t classifier_index() const noexcept { return classifier_; }

  [[nodiscard]] SliceLayout out_channel_slice(std::size_t pair_id, std::size_t channel) const;
  [[nodiscard]] SliceLayout in_channel_slice(std::size_t pair_id, std::size_t channel) const;

  /// Builds the forward pass; parameters are bound as graph leaves, so
  /// backward() fills their grad buffers.
  Var forward(Graph& g, Var input);
  /// Inference on a batch (N x input_shape); no gradients.
  [[nodiscard]] Tensor predict(const Tensor& batch) const;

  [[nodiscard]] std::vector<Tensor*> parameters();
  void zero_grad();

 private:
  void derive();

  Shape input_shape_;
  std::vector<Layer> layers_;
  std::vector<ChannelPair> pairs_;
  std::vector<LayerGeometry> geometry_;
  std::size_t classifier_ = 0;
};

}  // namespace oicsr

#endif  // OICSR_MODEL_HPP
