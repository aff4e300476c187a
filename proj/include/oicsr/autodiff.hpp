// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#ifndef OICSR_AUTODIFF_HPP
#define OICSR_AUTODIFF_HPP

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "oicsr/tensor.hpp"

namespace oicsr {

/// Handle to a node of a Graph. Only valid for the graph that created it.
struct Var {
  std::size_t id = 0;
};

/// Data handed to an op's reverse rule.
struct BackwardArgs {
  std::span<const double> out_grad;
  const Tensor& out_value;
  std::vector<const Tensor*> in_values;
  /// One span per input; empty when the input does not require a gradient.
  std::vector<std::span<double>> in_grads;
};

using BackwardFn = std::function<void(const BackwardArgs&)>;

/// Tape of a single forward pass.
///
/// Nodes are appended in execution order, so every input precedes its
/// consumer. backward() visits nodes in exact reverse order; accumulation is
/// sequential and therefore bit-reproducible.
///
/// Parameter leaves refer to caller-owned tensors, which must outlive the
/// graph. backward() adds into their grad buffers (it never zeroes them), so
/// repeated calls accumulate.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  Var constant(Tensor value);
  Var parameter(Tensor& param);

  /// Appends an op node. Used by the operator implementations.
  Var record(Tensor value, std::vector<Var> inputs, BackwardFn backward);

  [[nodiscard]] const Tensor& value(Var v) const;
  /// Gradient of the last backward() root with respect to node v (zeros if
  /// the node does not require a gradient).
  [[nodiscard]] std::span<const double> grad(Var v) const;
  [[nodiscard]] bool requires_grad(Var v) const;
  [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }

  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Tensor* param = nullptr;
    bool requires_grad = false;
    std::vector<double> grad;
  };

  const Node& node(Var v) const;

  std::vector<Node> nodes_;
};

// Operators. None of them broadcast; shape violations throw ShapeError.

Var matmul(Graph& g, Var a, Var b);
/// Fully-connected product x * w^T for x: N x IC, w: OC x IC.
Var linear(Graph& g, Var x, Var w);
Var conv2d(Graph& g, Var x, Var w, std::size_t stride, std::size_t padding);
Var relu(Graph& g, Var x);
Var add(Graph& g, Var a, Var b);
/// Adds b[c] to every element of channel c (axis 1) of a rank-2 or rank-4 x.
Var add_channel_bias(Graph& g, Var x, Var b);
/// y = gamma[c] * x + beta[c] along axis 1 of a rank-2 or rank-4 x.
Var scale_shift(Graph& g, Var x, Var gamma, Var beta);
Var maxpool2d(Graph& g, Var x, std::size_t size, std::size_t stride);
/// N x C x H x W -> N x (C*H*W), channel-major.
Var flatten(Graph& g, Var x);
/// Mean over the batch of -log softmax(logits)[label].
Var softmax_cross_entropy(Graph& g, Var logits, std::span<const int> labels);
Var sum(Graph& g, Var x);
Var mul_scalar(Graph& g, Var x, double c);

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding);
std::size_t pool_output_extent(std::size_t in, std::size_t size, std::size_t stride);

}  // namespace oicsr

#endif  // OICSR_AUTODIFF_HPP
