// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include "oicsr/model.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <utility>

#include "oicsr/errors.hpp"

namespace oicsr {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv";
    case LayerKind::scale_shift: return "scale_shift";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::flatten: return "flatten";
  }
  return "?";
}

LayerKind parse_layer_kind(std::string_view text) {
  if (text == "dense") return LayerKind::dense;
  if (text == "conv" || text == "conv2d") return LayerKind::conv2d;
  if (text == "scale_shift") return LayerKind::scale_shift;
  if (text == "relu") return LayerKind::relu;
  if (text == "maxpool") return LayerKind::maxpool;
  if (text == "flatten") return LayerKind::flatten;
  throw ConstructionError("unknown layer kind '" + std::string(text) + "'");
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

std::size_t parse_count(const std::string& token, const std::string& context) {
  std::size_t pos = 0;
  unsigned long long v = 0;
  try {
    v = std::stoull(token, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (token.empty() || pos != token.size() || token[0] == '-') {
    throw ConstructionError("expected a non-negative integer in '" + context + "', got '" + token + "'");
  }
  return static_cast<std::size_t>(v);
}

}  // namespace

std::string format_layers(const std::vector<LayerSpec>& layers) {
  std::ostringstream os;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& l = layers[i];
    if (i) os << ", ";
    os << to_string(l.kind);
    switch (l.kind) {
      case LayerKind::dense:
        os << ':' << l.out_channels;
        break;
      case LayerKind::conv2d:
        os << ':' << l.out_channels << ':' << l.kernel << ':' << l.stride << ':' << l.padding;
        break;
      case LayerKind::maxpool:
        os << ':' << l.kernel << ':' << l.stride;
        break;
      default:
        break;
    }
    if (l.is_weighted_kind() && !l.bias) os << ":nobias";
  }
  return os.str();
}

std::vector<LayerSpec> parse_layers(std::string_view text) {
  std::vector<LayerSpec> out;
  if (trim(text).empty()) return out;
  for (const auto& item : split(text, ',')) {
    auto parts = split(item, ':');
    LayerSpec spec;
    spec.kind = parse_layer_kind(parts[0]);
    if (spec.is_weighted_kind() && parts.size() > 1 && parts.back() == "nobias") {
      spec.bias = false;
      parts.pop_back();
    }
    const std::size_t args = parts.size() - 1;
    auto arg = [&](std::size_t i) { return parse_count(parts[i + 1], item); };
    switch (spec.kind) {
      case LayerKind::dense:
        if (args != 1) throw ConstructionError("dense takes dense:OUT, got '" + item + "'");
        spec.out_channels = arg(0);
        break;
      case LayerKind::conv2d:
        if (args < 2 || args > 4) {
          throw ConstructionError("conv takes conv:OUT:KERNEL[:STRIDE[:PADDING]], got '" + item + "'");
        }
        spec.out_channels = arg(0);
        spec.kernel = arg(1);
        spec.stride = args > 2 ? arg(2) : 1;
        spec.padding = args > 3 ? arg(3) : 0;
        break;
      case LayerKind::maxpool:
        if (args < 1 || args > 2) throw ConstructionError("maxpool takes maxpool:SIZE[:STRIDE], got '" + item + "'");
        spec.kernel = arg(0);
        spec.stride = args > 1 ? arg(1) : spec.kernel;
        break;
      default:
        if (args != 0) throw ConstructionError("layer '" + parts[0] + "' takes no arguments");
        break;
    }
    out.push_back(spec);
  }
  return out;
}

std::string format_shape(const Shape& shape) {
  std::ostringstream os;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  return os.str();
}

Shape parse_shape(std::string_view text) {
  Shape shape;
  for (const auto& part : split(text, 'x')) shape.push_back(parse_count(part, std::string(text)));
  if (shape.size() != 1 && shape.size() != 3) {
    throw ConstructionError("input shape must be FEATURES or CxHxW, got '" + std::string(text) + "'");
  }
  for (auto e : shape) {
    if (e == 0) throw ConstructionError("input extents must be positive");
  }
  return shape;
}

std::vector<double> gather(std::span<const double> buffer, const SliceLayout& slice) {
  std::vector<double> out;
  out.reserve(slice.size());
  slice.for_each_index([&](std::size_t i) { out.push_back(buffer[i]); });
  return out;
}

double squared_norm(std::span<const double> buffer, const SliceLayout& slice) {
  double acc = 0.0;
  slice.for_each_index([&](std::size_t i) { acc += buffer[i] * buffer[i]; });
  return acc;
}

Model Model::build(const Architecture& arch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  Shape cur = arch.input_shape;
  for (std::size_t idx = 0; idx < arch.layers.size(); ++idx) {
    const auto& spec = arch.layers[idx];
    Layer layer;
    layer.spec = spec;
    const std::string where = "layer " + std::to_string(idx) + " (" + std::string(to_string(spec.kind)) + ")";
    switch (spec.kind) {
      case LayerKind::conv2d: {
        if (cur.size() != 3) throw ConstructionError(where + ": conv needs a CxHxW input");
        if (spec.out_channels == 0 || spec.kernel == 0 || spec.stride == 0) {
          throw ConstructionError(where + ": channels, kernel and stride must be positive");
        }
        layer.weight = Tensor({spec.out_channels, cur[0], spec.kernel, spec.kernel});
        break;
      }
      case LayerKind::dense:
        if (cur.size() != 1) throw ConstructionError(where + ": dense needs a flat input; add a flatten layer");
        if (spec.out_channels == 0) throw ConstructionError(where + ": channels must be positive");
        layer.weight = Tensor({spec.out_channels, cur[0]});
        break;
      case LayerKind::scale_shift:
        layer.gamma = Tensor({cur[0]}, 1.0);
        layer.beta = Tensor({cur[0]}, 0.0);
        break;
      default:
        break;
    }
    if (layer.is_weighted()) {
      const double fan_in = static_cast<double>(layer.weight.size() / layer.weight.dim(0));
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / fan_in));
      for (auto& w : layer.weight.data()) w = dist(rng);
      if (spec.bias) layer.bias = Tensor({spec.out_channels}, 0.0);
    }
    layers.push_back(std::move(layer));
    // Advance the shape using the validated chain built so far.
    cur = Model::from_layers(arch.input_shape, layers).output_shape();
  }
  return from_layers(arch.input_shape, std::move(layers));
}

Model Model::from_layers(Shape input_shape, std::vector<Layer> layers) {
  Model m;
  m.input_shape_ = std::move(input_shape);
  m.layers_ = std::move(layers);
  m.derive();
  return m;
}

void Model::refresh() { derive(); }

void Model::derive() {
  if (input_shape_.size() != 1 && input_shape_.size() != 3) {
    throw ConstructionError("input shape must be FEATURES or CxHxW, got " + shape_string(input_shape_));
  }
  geometry_.clear();
  pairs_.clear();
  classifier_ = layers_.size();

  Shape cur = input_shape_;
  std::size_t prev_weighted = layers_.size();
  std::vector<std::size_t> intervening;
  std::size_t multiplicity = 1;

  for (std::size_t idx = 0; idx < layers_.size(); ++idx) {
    auto& layer = layers_[idx];
    const auto& spec = layer.spec;
    const std::string where = "layer " + std::to_string(idx) + " (" + std::string(to_string(spec.kind)) + ")";
    LayerGeometry geo{cur, cur};
    try {
      switch (spec.kind) {
        case LayerKind::conv2d: {
          if (cur.size() != 3) throw ConstructionError(where + ": conv needs a CxHxW input");
          if (layer.weight.rank() != 4 || layer.weight.dim(2) != spec.kernel || layer.weight.dim(3) != spec.kernel) {
            throw ConstructionError(where + ": weight must be OCxICx" + std::to_string(spec.kernel) + "x" +
                                    std::to_string(spec.kernel));
          }
          if (layer.weight.dim(1) != cur[0]) {
            throw ConstructionError(where + ": expects " + std::to_string(layer.weight.dim(1)) +
                                    " input channels, previous layer produces " + std::to_string(cur[0]));
          }
          geo.out_shape = {layer.weight.dim(0), conv_output_extent(cur[1], spec.kernel, spec.stride, spec.padding),
                           conv_output_extent(cur[2], spec.kernel, spec.stride, spec.padding)};
          break;
        }
        case LayerKind::dense:
          if (cur.size() != 1) throw ConstructionError(where + ": dense needs a flat input; add a flatten layer");
          if (layer.weight.rank() != 2) throw ConstructionError(where + ": weight must be OCxIC");
          if (layer.weight.dim(1) != cur[0]) {
            throw ConstructionError(where + ": expects " + std::to_string(layer.weight.dim(1)) +
                                    " inputs, previous layer produces " + std::to_string(cur[0]));
          }
          geo.out_shape = {layer.weight.dim(0)};
          break;
        case LayerKind::scale_shift:
          if (layer.gamma.rank() != 1 || layer.gamma.dim(0) != cur[0] || layer.beta.shape() != layer.gamma.shape()) {
            throw ConstructionError(where + ": gamma/beta length must equal the " + std::to_string(cur[0]) +
                                    " incoming channels");
          }
          break;
        case LayerKind::maxpool:
          if (cur.size() != 3) throw ConstructionError(where + ": maxpool needs a CxHxW input");
          geo.out_shape = {cur[0], pool_output_extent(cur[1], spec.kernel, spec.stride),
                           pool_output_extent(cur[2], spec.kernel, spec.stride)};
          break;
        case LayerKind::flatten:
          if (cur.size() != 3) throw ConstructionError(where + ": flatten needs a CxHxW input");
          geo.out_shape = {cur[0] * cur[1] * cur[2]};
          break;
        case LayerKind::relu:
          break;
      }
    } catch (const ShapeError& e) {
      throw ConstructionError(where + ": " + e.what());
    }
    if (layer.is_weighted()) {
      if (!layer.bias.empty() && (layer.bias.rank() != 1 || layer.bias.dim(0) != layer.weight.dim(0))) {
        throw ConstructionError(where + ": bias length must equal output channels");
      }
      layer.spec.out_channels = layer.weight.dim(0);
      layer.spec.bias = !layer.bias.empty();
    }

    if (layer.is_weighted()) {
      if (prev_weighted < layers_.size()) {
        ChannelPair pair;
        pair.out_layer = prev_weighted;
        pair.in_layer = idx;
        pair.channel_count = layers_[prev_weighted].out_channels();
        pair.in_multiplicity = multiplicity;
        pair.intervening = intervening;
        if (layer.in_channels() != pair.channel_count * pair.in_multiplicity) {
          throw ConstructionError(where + ": in-channels do not match the paired out-channels");
        }
        pairs_.push_back(std::move(pair));
      }
      prev_weighted = idx;
      classifier_ = idx;
      intervening.clear();
      multiplicity = 1;
    } else if (prev_weighted < layers_.size()) {
      if (spec.kind == LayerKind::flatten) {
        multiplicity *= cur[1] * cur[2];
      } else {
        intervening.push_back(idx);
      }
    }
    geometry_.push_back(geo);
    cur = geo.out_shape;
  }
}

Architecture Model::architecture() const {
  Architecture arch;
  arch.input_shape = input_shape_;
  for (const auto& l : layers_) arch.layers.push_back(l.spec);
  return arch;
}

Shape Model::output_shape() const { return geometry_.empty() ? input_shape_ : geometry_.back().out_shape; }

SliceLayout Model::out_channel_slice(std::size_t pair_id, std::size_t channel) const {
  if (pair_id >= pairs_.size()) throw InputError("pair " + std::to_string(pair_id) + " out of range");
  const auto& pair = pairs_[pair_id];
  if (channel >= pair.channel_count) {
    throw InputError("channel " + std::to_string(channel) + " out of range for pair " + std::to_string(pair_id) +
                     " with " + std::to_string(pair.channel_count) + " channels");
  }
  const auto& w = layers_[pair.out_layer].weight;
  const std::size_t row = w.size() / w.dim(0);
  return SliceLayout{pair.out_layer, channel * row, 1, row, row};
}

SliceLayout Model::in_channel_slice(std::size_t pair_id, std::size_t channel) const {
  if (pair_id >= pairs_.size()) throw InputError("pair " + std::to_string(pair_id) + " out of range");
  const auto& pair = pairs_[pair_id];
  if (channel >= pair.channel_count) {
    throw InputError("channel " + std::to_string(channel) + " out of range for pair " + std::to_string(pair_id) +
                     " with " + std::to_string(pair.channel_count) + " channels");
  }
  const auto& w = layers_[pair.in_layer].weight;
  const std::size_t row = w.size() / w.dim(0);     // IC * k * k
  const std::size_t spatial = row / w.dim(1);      // k * k, or 1 for dense
  const std::size_t block = pair.in_multiplicity * spatial;
  return SliceLayout{pair.in_layer, channel * block, w.dim(0), block, row};
}

namespace {

template <typename Layers, typename Bind>
Var run_layers(Graph& g, Var h, Layers& layers, Bind&& bind) {
  for (auto& layer : layers) {
    switch (layer.spec.kind) {
      case LayerKind::dense:
        h = linear(g, h, bind(layer.weight));
        if (!layer.bias.empty()) h = add_channel_bias(g, h, bind(layer.bias));
        break;
      case LayerKind::conv2d:
        h = conv2d(g, h, bind(layer.weight), layer.spec.stride, layer.spec.padding);
        if (!layer.bias.empty()) h = add_channel_bias(g, h, bind(layer.bias));
        break;
      case LayerKind::scale_shift:
        h = scale_shift(g, h, bind(layer.gamma), bind(layer.beta));
        break;
      case LayerKind::relu:
        h = relu(g, h);
        break;
      case LayerKind::maxpool:
        h = maxpool2d(g, h, layer.spec.kernel, layer.spec.stride);
        break;
      case LayerKind::flatten:
        h = flatten(g, h);
        break;
    }
  }
  return h;
}

void check_batch(const Shape& input_shape, const Tensor& batch) {
  const auto& s = batch.shape();
  if (s.size() != input_shape.size() + 1 || !std::equal(input_shape.begin(), input_shape.end(), s.begin() + 1)) {
    throw ShapeError("model expects N x " + shape_string(input_shape) + ", got " + shape_string(s));
  }
}

}  // namespace

Var Model::forward(Graph& g, Var input) {
  check_batch(input_shape_, g.value(input));
  return run_layers(g, input, layers_, [&g](Tensor& t) { return g.parameter(t); });
}

Tensor Model::predict(const Tensor& batch) const {
  check_batch(input_shape_, batch);
  Graph g;
  const Var out = run_layers(g, g.constant(batch), layers_, [&g](const Tensor& t) { return g.constant(t); });
  return g.value(out);
}

std::vector<Tensor*> Model::parameters() {
  std::vector<Tensor*> out;
  for (auto& l : layers_) {
    for (Tensor* t : {&l.weight, &l.bias, &l.gamma, &l.beta}) {
      if (!t->empty()) out.push_back(t);
    }
  }
  return out;
}

void Model::zero_grad() {
  for (Tensor* t : parameters()) t->zero_grad();
}

}  // namespace oicsr
