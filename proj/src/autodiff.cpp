// Copyright 2026 The oicsr Authors
// Licensed under the Apache License, Version 2.0

#include "oicsr/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "oicsr/errors.hpp"

namespace oicsr {

Var Graph::constant(Tensor value) {
  if (value.empty()) throw ShapeError("graph constant must not be empty");
  Node n;
  n.value = std::move(value);
  n.value.clear_grad();
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::parameter(Tensor& param) {
  if (param.empty()) throw ShapeError("graph parameter must not be empty");
  Node n;
  n.value = Tensor(param.shape(), param.values());
  n.param = &param;
  n.requires_grad = true;
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Var Graph::record(Tensor value, std::vector<Var> inputs, BackwardFn backward) {
  Node n;
  n.value = std::move(value);
  for (auto in : inputs) {
    if (in.id >= nodes_.size()) throw UsageError("op input refers to an unknown node");
    n.inputs.push_back(in.id);
    n.requires_grad = n.requires_grad || nodes_[in.id].requires_grad;
  }
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

const Graph::Node& Graph::node(Var v) const {
  if (v.id >= nodes_.size()) throw UsageError("unknown graph node " + std::to_string(v.id));
  return nodes_[v.id];
}

const Tensor& Graph::value(Var v) const { return node(v).value; }

std::span<const double> Graph::grad(Var v) const { return node(v).grad; }

bool Graph::requires_grad(Var v) const { return node(v).requires_grad; }

void Graph::backward(Var loss) {
  const Node& root = node(loss);
  if (root.value.size() != 1) {
    throw UsageError("backward() needs a scalar root, got shape " + shape_string(root.value.shape()));
  }
  for (auto& n : nodes_) {
    if (n.requires_grad) {
      n.grad.assign(n.value.size(), 0.0);
    } else {
      n.grad.clear();
    }
  }
  if (nodes_[loss.id].requires_grad) nodes_[loss.id].grad[0] = 1.0;

  for (std::size_t id = loss.id + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || !n.backward) continue;
    BackwardArgs args{n.grad, n.value, {}, {}};
    args.in_values.reserve(n.inputs.size());
    args.in_grads.reserve(n.inputs.size());
    for (auto in : n.inputs) {
      Node& src = nodes_[in];
      args.in_values.push_back(&src.value);
      args.in_grads.emplace_back(src.requires_grad ? std::span<double>(src.grad) : std::span<double>());
    }
    n.backward(args);
  }

  for (auto& n : nodes_) {
    if (n.param == nullptr) continue;
    auto dst = n.param->ensure_grad();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += n.grad[i];
  }
}

std::size_t conv_output_extent(std::size_t in, std::size_t kernel, std::size_t stride, std::size_t padding) {
  if (stride == 0) throw ShapeError("convolution stride must be positive");
  const std::size_t padded = in + 2 * padding;
  if (kernel == 0 || padded < kernel) {
    throw ShapeError("kernel " + std::to_string(kernel) + " does not fit padded extent " + std::to_string(padded));
  }
  if ((padded - kernel) % stride != 0) {
    throw ShapeError("non-integral convolution output extent: (" + std::to_string(in) + "+2*" +
                     std::to_string(padding) + "-" + std::to_string(kernel) + ")/" + std::to_string(stride));
  }
  return (padded - kernel) / stride + 1;
}

std::size_t pool_output_extent(std::size_t in, std::size_t size, std::size_t stride) {
  if (size == 0 || stride == 0) throw ShapeError("pool size and stride must be positive");
  if (in < size) {
    throw ShapeError("pool window " + std::to_string(size) + " exceeds extent " + std::to_string(in));
  }
  return (in - size) / stride + 1;
}

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* op) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
  }
}

// out[m x n] += a[m x k] * b[k x n]
void gemm_nn(const double* a, const double* b, double* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = out + i * n;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = a[i * k + p];
      if (av == 0.0) continue;
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

// out[m x n] += a[m x k] * b[n x k]^T
void gemm_nt(const double* a, const double* b, double* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      out[i * n + j] += acc;
    }
  }
}

// out[m x n] += a[k x m]^T * b[k x n]
void gemm_tn(const double* a, const double* b, double* out, std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t p = 0; p < k; ++p) {
    const double* brow = b + p * n;
    for (std::size_t i = 0; i < m; ++i) {
      const double av = a[p * m + i];
      if (av == 0.0) continue;
      double* row = out + i * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += av * brow[j];
    }
  }
}

struct ConvGeometry {
  std::size_t channels, height, width;
  std::size_t kh, kw, stride, padding;
  std::size_t out_h, out_w;
};

// col[(C*kh*kw) x (out_h*out_w)]
void im2col(const double* img, const ConvGeometry& g, double* col) {
  const std::size_t spatial = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        double* dst = col + ((c * g.kh + ki) * g.kw + kj) * spatial;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.padding);
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.padding);
            const bool inside = iy >= 0 && ix >= 0 && iy < static_cast<long>(g.height) &&
                                ix < static_cast<long>(g.width);
            dst[oy * g.out_w + ox] = inside ? img[(c * g.height + iy) * g.width + ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* col, const ConvGeometry& g, double* img) {
  const std::size_t spatial = g.out_h * g.out_w;
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t ki = 0; ki < g.kh; ++ki) {
      for (std::size_t kj = 0; kj < g.kw; ++kj) {
        const double* src = col + ((c * g.kh + ki) * g.kw + kj) * spatial;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ki) - static_cast<long>(g.padding);
          if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kj) - static_cast<long>(g.padding);
            if (ix < 0 || ix >= static_cast<long>(g.width)) continue;
            img[(c * g.height + iy) * g.width + ix] += src[oy * g.out_w + ox];
          }
        }
      }
    }
  }
}

// Channel axis helpers for rank-2 (N x C) and rank-4 (N x C x H x W) tensors.
struct ChannelLayout {
  std::size_t batch, channels, inner;
};

ChannelLayout channel_layout(const Tensor& x, const char* op) {
  if (x.rank() == 2) return {x.dim(0), x.dim(1), 1};
  if (x.rank() == 4) return {x.dim(0), x.dim(1), x.dim(2) * x.dim(3)};
  throw ShapeError(std::string(op) + ": expected rank 2 or 4, got " + shape_string(x.shape()));
}

void require_vector(const Tensor& v, std::size_t len, const char* op) {
  if (v.rank() != 1 || v.dim(0) != len) {
    throw ShapeError(std::string(op) + ": expected per-channel vector of length " + std::to_string(len) +
                     ", got " + shape_string(v.shape()));
  }
}

}  // namespace

Var matmul(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  require_rank(av, 2, "matmul");
  require_rank(bv, 2, "matmul");
  const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
  if (bv.dim(0) != k) {
    throw ShapeError("matmul: inner extents differ, " + shape_string(av.shape()) + " * " + shape_string(bv.shape()));
  }
  Tensor out({m, n});
  gemm_nn(av.data().data(), bv.data().data(), out.data().data(), m, k, n);
  return g.record(std::move(out), {a, b}, [m, k, n](const BackwardArgs& args) {
    const double* a_val = args.in_values[0]->data().data();
    const double* b_val = args.in_values[1]->data().data();
    if (!args.in_grads[0].empty()) gemm_nt(args.out_grad.data(), b_val, args.in_grads[0].data(), m, n, k);
    if (!args.in_grads[1].empty()) gemm_tn(a_val, args.out_grad.data(), args.in_grads[1].data(), k, m, n);
  });
}

Var linear(Graph& g, Var x, Var w) {
  const Tensor& xv = g.value(x);
  const Tensor& wv = g.value(w);
  require_rank(xv, 2, "linear input");
  require_rank(wv, 2, "linear weight");
  const std::size_t batch = xv.dim(0), in = xv.dim(1), out_features = wv.dim(0);
  if (wv.dim(1) != in) {
    throw ShapeError("linear: input has " + std::to_string(in) + " features, weight expects " +
                     std::to_string(wv.dim(1)));
  }
  Tensor out({batch, out_features});
  gemm_nt(xv.data().data(), wv.data().data(), out.data().data(), batch, in, out_features);
  return g.record(std::move(out), {x, w}, [batch, in, out_features](const BackwardArgs& args) {
    const double* x_val = args.in_values[0]->data().data();
    const double* w_val = args.in_values[1]->data().data();
    if (!args.in_grads[0].empty()) {
      gemm_nn(args.out_grad.data(), w_val, args.in_grads[0].data(), batch, out_features, in);
    }
    if (!args.in_grads[1].empty()) {
      gemm_tn(args.out_grad.data(), x_val, args.in_grads[1].data(), out_features, batch, in);
    }
  });
}

Var conv2d(Graph& g, Var x, Var w, std::size_t stride, std::size_t padding) {
  const Tensor& xv = g.value(x);
  const Tensor& wv = g.value(w);
  require_rank(xv, 4, "conv2d input");
  require_rank(wv, 4, "conv2d weight");
  if (xv.dim(1) != wv.dim(1)) {
    throw ShapeError("conv2d: input has " + std::to_string(xv.dim(1)) + " channels, weight expects " +
                     std::to_string(wv.dim(1)));
  }
  ConvGeometry geo{xv.dim(1), xv.dim(2), xv.dim(3), wv.dim(2), wv.dim(3), stride, padding, 0, 0};
  geo.out_h = conv_output_extent(geo.height, geo.kh, stride, padding);
  geo.out_w = conv_output_extent(geo.width, geo.kw, stride, padding);
  const std::size_t batch = xv.dim(0), oc = wv.dim(0);
  const std::size_t k = geo.channels * geo.kh * geo.kw;
  const std::size_t spatial = geo.out_h * geo.out_w;
  const std::size_t in_sample = geo.channels * geo.height * geo.width;

  Tensor out({batch, oc, geo.out_h, geo.out_w});
  std::vector<double> col(k * spatial);
  for (std::size_t n = 0; n < batch; ++n) {
    im2col(xv.data().data() + n * in_sample, geo, col.data());
    gemm_nn(wv.data().data(), col.data(), out.data().data() + n * oc * spatial, oc, k, spatial);
  }
  return g.record(std::move(out), {x, w}, [geo, batch, oc, k, spatial, in_sample](const BackwardArgs& args) {
    const double* x_val = args.in_values[0]->data().data();
    const double* w_val = args.in_values[1]->data().data();
    std::vector<double> col(k * spatial);
    std::vector<double> dcol;
    for (std::size_t n = 0; n < batch; ++n) {
      const double* dout = args.out_grad.data() + n * oc * spatial;
      if (!args.in_grads[1].empty()) {
        im2col(x_val + n * in_sample, geo, col.data());
        gemm_nt(dout, col.data(), args.in_grads[1].data(), oc, spatial, k);
      }
      if (!args.in_grads[0].empty()) {
        dcol.assign(k * spatial, 0.0);
        gemm_tn(w_val, dout, dcol.data(), k, oc, spatial);
        col2im_add(dcol.data(), geo, args.in_grads[0].data() + n * in_sample);
      }
    }
  });
}

Var relu(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = xv[i] > 0.0 ? xv[i] : 0.0;
  return g.record(std::move(out), {x}, [](const BackwardArgs& args) {
    if (args.in_grads[0].empty()) return;
    const Tensor& in = *args.in_values[0];
    for (std::size_t i = 0; i < in.size(); ++i) {
      if (in[i] > 0.0) args.in_grads[0][i] += args.out_grad[i];
    }
  });
}

Var add(Graph& g, Var a, Var b) {
  const Tensor& av = g.value(a);
  const Tensor& bv = g.value(b);
  if (av.shape() != bv.shape()) {
    throw ShapeError("add: shapes differ, " + shape_string(av.shape()) + " vs " + shape_string(bv.shape()));
  }
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
  return g.record(std::move(out), {a, b}, [](const BackwardArgs& args) {
    for (auto& dst : args.in_grads) {
      for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += args.out_grad[i];
    }
  });
}

Var add_channel_bias(Graph& g, Var x, Var b) {
  const Tensor& xv = g.value(x);
  const auto lay = channel_layout(xv, "add_channel_bias");
  require_vector(g.value(b), lay.channels, "add_channel_bias");
  const Tensor& bv = g.value(b);
  Tensor out(xv.shape());
  for (std::size_t n = 0; n < lay.batch; ++n) {
    for (std::size_t c = 0; c < lay.channels; ++c) {
      const std::size_t base = (n * lay.channels + c) * lay.inner;
      for (std::size_t s = 0; s < lay.inner; ++s) out[base + s] = xv[base + s] + bv[c];
    }
  }
  return g.record(std::move(out), {x, b}, [lay](const BackwardArgs& args) {
    auto dx = args.in_grads[0];
    auto db = args.in_grads[1];
    for (std::size_t n = 0; n < lay.batch; ++n) {
      for (std::size_t c = 0; c < lay.channels; ++c) {
        const std::size_t base = (n * lay.channels + c) * lay.inner;
        for (std::size_t s = 0; s < lay.inner; ++s) {
          const double d = args.out_grad[base + s];
          if (!dx.empty()) dx[base + s] += d;
          if (!db.empty()) db[c] += d;
        }
      }
    }
  });
}

Var scale_shift(Graph& g, Var x, Var gamma, Var beta) {
  const Tensor& xv = g.value(x);
  const auto lay = channel_layout(xv, "scale_shift");
  require_vector(g.value(gamma), lay.channels, "scale_shift gamma");
  require_vector(g.value(beta), lay.channels, "scale_shift beta");
  const Tensor& gv = g.value(gamma);
  const Tensor& bv = g.value(beta);
  Tensor out(xv.shape());
  for (std::size_t n = 0; n < lay.batch; ++n) {
    for (std::size_t c = 0; c < lay.channels; ++c) {
      const std::size_t base = (n * lay.channels + c) * lay.inner;
      for (std::size_t s = 0; s < lay.inner; ++s) out[base + s] = gv[c] * xv[base + s] + bv[c];
    }
  }
  return g.record(std::move(out), {x, gamma, beta}, [lay](const BackwardArgs& args) {
    const Tensor& xin = *args.in_values[0];
    const Tensor& gin = *args.in_values[1];
    auto dx = args.in_grads[0];
    auto dg = args.in_grads[1];
    auto db = args.in_grads[2];
    for (std::size_t n = 0; n < lay.batch; ++n) {
      for (std::size_t c = 0; c < lay.channels; ++c) {
        const std::size_t base = (n * lay.channels + c) * lay.inner;
        for (std::size_t s = 0; s < lay.inner; ++s) {
          const double d = args.out_grad[base + s];
          if (!dx.empty()) dx[base + s] += gin[c] * d;
          if (!dg.empty()) dg[c] += xin[base + s] * d;
          if (!db.empty()) db[c] += d;
        }
      }
    }
  });
}

Var maxpool2d(Graph& g, Var x, std::size_t size, std::size_t stride) {
  const Tensor& xv = g.value(x);
  require_rank(xv, 4, "maxpool2d");
  const std::size_t batch = xv.dim(0), ch = xv.dim(1), h = xv.dim(2), w = xv.dim(3);
  const std::size_t oh = pool_output_extent(h, size, stride);
  const std::size_t ow = pool_output_extent(w, size, stride);
  Tensor out({batch, ch, oh, ow});
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t plane = 0; plane < batch * ch; ++plane) {
    const std::size_t in_base = plane * h * w;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        // Row-major scan with strict '>' keeps the lowest flat index on ties.
        std::size_t best = in_base + (oy * stride) * w + ox * stride;
        for (std::size_t ky = 0; ky < size; ++ky) {
          for (std::size_t kx = 0; kx < size; ++kx) {
            const std::size_t idx = in_base + (oy * stride + ky) * w + (ox * stride + kx);
            if (xv[idx] > xv[best]) best = idx;
          }
        }
        const std::size_t o = (plane * oh + oy) * ow + ox;
        out[o] = xv[best];
        argmax[o] = best;
      }
    }
  }
  return g.record(std::move(out), {x}, [argmax = std::move(argmax)](const BackwardArgs& args) {
    if (args.in_grads[0].empty()) return;
    for (std::size_t o = 0; o < argmax.size(); ++o) args.in_grads[0][argmax[o]] += args.out_grad[o];
  });
}

Var flatten(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  require_rank(xv, 4, "flatten");
  Tensor out = xv.reshaped({xv.dim(0), xv.dim(1) * xv.dim(2) * xv.dim(3)});
  return g.record(std::move(out), {x}, [](const BackwardArgs& args) {
    if (args.in_grads[0].empty()) return;
    for (std::size_t i = 0; i < args.out_grad.size(); ++i) args.in_grads[0][i] += args.out_grad[i];
  });
}

Var softmax_cross_entropy(Graph& g, Var logits, std::span<const int> labels) {
  const Tensor& lv = g.value(logits);
  require_rank(lv, 2, "softmax_cross_entropy");
  const std::size_t batch = lv.dim(0), classes = lv.dim(1);
  if (labels.size() != batch) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(labels.size()) + " labels for batch of " +
                     std::to_string(batch));
  }
  std::vector<int> lab(labels.begin(), labels.end());
  for (int y : lab) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw InputError("label " + std::to_string(y) + " out of range for " + std::to_string(classes) + " classes");
    }
  }
  std::vector<double> prob(lv.size());
  double loss = 0.0;
  for (std::size_t n = 0; n < batch; ++n) {
    const double* row = lv.data().data() + n * classes;
    const double mx = *std::max_element(row, row + classes);
    double z = 0.0;
    for (std::size_t c = 0; c < classes; ++c) {
      prob[n * classes + c] = std::exp(row[c] - mx);
      z += prob[n * classes + c];
    }
    for (std::size_t c = 0; c < classes; ++c) prob[n * classes + c] /= z;
    loss += -(row[lab[n]] - mx - std::log(z));
  }
  loss /= static_cast<double>(batch);
  return g.record(Tensor({1}, {loss}), {logits},
                  [prob = std::move(prob), lab = std::move(lab), batch, classes](const BackwardArgs& args) {
                    if (args.in_grads[0].empty()) return;
                    const double scale = args.out_grad[0] / static_cast<double>(batch);
                    for (std::size_t n = 0; n < batch; ++n) {
                      for (std::size_t c = 0; c < classes; ++c) {
                        const double target = static_cast<std::size_t>(lab[n]) == c ? 1.0 : 0.0;
                        args.in_grads[0][n * classes + c] += scale * (prob[n * classes + c] - target);
                      }
                    }
                  });
}

Var sum(Graph& g, Var x) {
  const Tensor& xv = g.value(x);
  double total = 0.0;
  for (double v : xv.data()) total += v;
  return g.record(Tensor({1}, {total}), {x}, [](const BackwardArgs& args) {
    if (args.in_grads[0].empty()) return;
    for (auto& d : args.in_grads[0]) d += args.out_grad[0];
  });
}

Var mul_scalar(Graph& g, Var x, double c) {
  const Tensor& xv = g.value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = c * xv[i];
  return g.record(std::move(out), {x}, [c](const BackwardArgs& args) {
    if (args.in_grads[0].empty()) return;
    for (std::size_t i = 0; i < args.out_grad.size(); ++i) args.in_grads[0][i] += c * args.out_grad[i];
  });
}

}  // namespace oicsr
