#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "reil/nn/attention.hpp"
#include "reil/nn/ops.hpp"
#include "reil/nn/params.hpp"

namespace reil::nn {

enum class Activation { None, Relu, Tanh };

template <class T>
Var activate(Tape<T>& tape, Var x, Activation act) {
  switch (act) {
    case Activation::None: return x;
    case Activation::Relu: return relu(tape, x);
    case Activation::Tanh: return tanh(tape, x);
  }
  return x;
}

/// Parameter-free pass-through.
struct Identity {
  template <class T>
  Var forward(Tape<T>&, const Vector<T>&, Var x) const {
    return x;
  }
};

/// y = x W + b
struct Dense {
  ParamBlock weight;
  ParamBlock bias;
  Eigen::Index in = 0;
  Eigen::Index out = 0;

  static Dense create(ParamLayout& layout, const std::string& name, Eigen::Index in, Eigen::Index out,
                      Init init = Init::FanInUniform) {
    Dense d;
    d.in = in;
    d.out = out;
    d.weight = layout.add(name + ".w", in, out, init, static_cast<double>(in));
    d.bias = layout.add(name + ".b", 1, out, init, static_cast<double>(in));
    return d;
  }

  template <class T>
  Var forward(Tape<T>& tape, const Vector<T>& params, Var x) const {
    if (tape.value(x).cols() != in) {
      throw Error(ErrorCode::ShapeError, "dense: expected " + std::to_string(in) + " inputs, got " +
                                             std::to_string(tape.value(x).cols()));
    }
    return add_row(tape, matmul(tape, x, read(tape, params, weight)), read(tape, params, bias));
  }
};

/// Stack of dense layers; `hidden` is applied between layers, `output` last.
struct Mlp {
  std::vector<Dense> layers;
  Activation hidden = Activation::Relu;
  Activation output = Activation::None;

  static Mlp create(ParamLayout& layout, const std::string& name, const std::vector<Eigen::Index>& sizes,
                    Activation hidden = Activation::Relu, Activation output = Activation::None) {
    Mlp m;
    m.hidden = hidden;
    m.output = output;
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
      m.layers.push_back(Dense::create(layout, name + "." + std::to_string(i), sizes[i], sizes[i + 1]));
    }
    layout.note(name + ":act" + std::to_string(int(hidden)) + "/" + std::to_string(int(output)));
    return m;
  }

  Eigen::Index in() const { return layers.front().in; }
  Eigen::Index out() const { return layers.back().out; }

  template <class T>
  Var forward(Tape<T>& tape, const Vector<T>& params, Var x) const {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      x = layers[i].forward(tape, params, x);
      x = activate(tape, x, i + 1 < layers.size() ? hidden : output);
    }
    return x;
  }
};

struct ConvGeometry {
  Eigen::Index channels = 3;
  Eigen::Index height = 30;
  Eigen::Index width = 40;
  Eigen::Index out_channels = 16;
  Eigen::Index kernel = 4;
  Eigen::Index stride = 2;

  Eigen::Index out_height() const { return (height - kernel) / stride + 1; }
  Eigen::Index out_width() const { return (width - kernel) / stride + 1; }
  Eigen::Index in_size() const { return channels * height * width; }
  Eigen::Index out_size() const { return out_channels * out_height() * out_width(); }
  Eigen::Index patch() const { return channels * kernel * kernel; }
};

namespace detail {
// Unfolds sample n of x (CHW layout) into (Ho*Wo) x (C*k*k) patches.
template <class T>
Matrix<T> im2col(const Matrix<T>& x, Eigen::Index n, const ConvGeometry& g) {
  const Eigen::Index ho = g.out_height(), wo = g.out_width(), k = g.kernel;
  Matrix<T> cols(ho * wo, g.patch());
  for (Eigen::Index oh = 0; oh < ho; ++oh) {
    for (Eigen::Index ow = 0; ow < wo; ++ow) {
      const Eigen::Index r = oh * wo + ow;
      for (Eigen::Index c = 0; c < g.channels; ++c) {
        for (Eigen::Index ki = 0; ki < k; ++ki) {
          for (Eigen::Index kj = 0; kj < k; ++kj) {
            cols(r, (c * k + ki) * k + kj) =
                x(n, c * g.height * g.width + (oh * g.stride + ki) * g.width + (ow * g.stride + kj));
          }
        }
      }
    }
  }
  return cols;
}
}  // namespace detail

/// Valid (unpadded) strided 2-D convolution over rows of CHW-flattened images.
template <class T>
Var conv2d(Tape<T>& tape, Var x, Var w, Var b, const ConvGeometry& g) {
  const auto& X = tape.value(x);
  const auto& W = tape.value(w);
  if (X.cols() != g.in_size() || W.rows() != g.out_channels || W.cols() != g.patch() ||
      tape.value(b).cols() != g.out_channels) {
    throw Error(ErrorCode::ShapeError, "conv2d: input or kernel shape mismatch");
  }
  const Eigen::Index hw = g.out_height() * g.out_width();
  Matrix<T> out(X.rows(), g.out_size());
  for (Eigen::Index n = 0; n < X.rows(); ++n) {
    Matrix<T> y = detail::im2col(X, n, g) * W.transpose();
    y.rowwise() += tape.value(b).row(0);
    for (Eigen::Index f = 0; f < g.out_channels; ++f) out.row(n).segment(f * hw, hw) = y.col(f).transpose();
  }
  const bool rg = tape.requires_grad(x) || tape.requires_grad(w) || tape.requires_grad(b);
  return tape.push(std::move(out), rg, [x, w, b, g](Tape<T>& t, int self) {
    const auto& G = t.grad(self);
    const auto& X = t.value(x);
    const auto& W = t.value(w);
    const Eigen::Index hw = g.out_height() * g.out_width(), wo = g.out_width(), k = g.kernel;
    Matrix<T> dW = Matrix<T>::Zero(W.rows(), W.cols());
    Matrix<T> db = Matrix<T>::Zero(1, W.rows());
    Matrix<T> dX = Matrix<T>::Zero(X.rows(), X.cols());
    for (Eigen::Index n = 0; n < X.rows(); ++n) {
      Matrix<T> gs(hw, g.out_channels);
      for (Eigen::Index f = 0; f < g.out_channels; ++f) gs.col(f) = G.row(n).segment(f * hw, hw).transpose();
      const Matrix<T> cols = detail::im2col(X, n, g);
      dW += gs.transpose() * cols;
      db += gs.colwise().sum();
      if (!t.requires_grad(x)) continue;
      const Matrix<T> dcols = gs * W;
      for (Eigen::Index r = 0; r < hw; ++r) {
        const Eigen::Index oh = r / wo, ow = r % wo;
        for (Eigen::Index c = 0; c < g.channels; ++c) {
          for (Eigen::Index ki = 0; ki < k; ++ki) {
            for (Eigen::Index kj = 0; kj < k; ++kj) {
              dX(n, c * g.height * g.width + (oh * g.stride + ki) * g.width + (ow * g.stride + kj)) +=
                  dcols(r, (c * k + ki) * k + kj);
            }
          }
        }
      }
    }
    t.add_grad(w, dW);
    t.add_grad(b, db);
    t.add_grad(x, dX);
  });
}

struct Conv2d {
  ConvGeometry geometry;
  ParamBlock weight;
  ParamBlock bias;

  static Conv2d create(ParamLayout& layout, const std::string& name, ConvGeometry g) {
    Conv2d c;
    c.geometry = g;
    c.weight = layout.add(name + ".w", g.out_channels, g.patch(), Init::FanInUniform, double(g.patch()));
    c.bias = layout.add(name + ".b", 1, g.out_channels, Init::FanInUniform, double(g.patch()));
    return c;
  }

  template <class T>
  Var forward(Tape<T>& tape, const Vector<T>& params, Var x) const {
    return conv2d(tape, x, read(tape, params, weight), read(tape, params, bias), geometry);
  }
};

/// Kernel-2 dilated causal convolution over the rows (time) of x:
/// y[t] = x[t] W_now + x[t - d] W_prev + b.
struct CausalConv1d {
  ParamBlock w_now;
  ParamBlock w_prev;
  ParamBlock bias;
  Eigen::Index in = 0;
  Eigen::Index filters = 0;
  Eigen::Index dilation = 1;

  static CausalConv1d create(ParamLayout& layout, const std::string& name, Eigen::Index in,
                             Eigen::Index filters, Eigen::Index dilation, Init init = Init::FanInUniform) {
    CausalConv1d c;
    c.in = in;
    c.filters = filters;
    c.dilation = dilation;
    c.w_now = layout.add(name + ".w_now", in, filters, init, double(2 * in));
    c.w_prev = layout.add(name + ".w_prev", in, filters, init, double(2 * in));
    c.bias = layout.add(name + ".b", 1, filters, init, double(2 * in));
    layout.note(name + ":d" + std::to_string(dilation));
    return c;
  }

  template <class T>
  Var forward(Tape<T>& tape, const Vector<T>& params, Var x) const {
    Var now = matmul(tape, x, read(tape, params, w_now));
    Var prev = matmul(tape, shift_down(tape, x, dilation), read(tape, params, w_prev));
    return add_row(tape, add(tape, now, prev), read(tape, params, bias));
  }
};

/// Gated dilated causal convolution whose output is appended to its input.
struct DenseBlock {
  CausalConv1d filter;
  CausalConv1d gate;

  static DenseBlock create(ParamLayout& layout, const std::string& name, Eigen::Index in, Eigen::Index filters,
                           Eigen::Index dilation, Init init = Init::FanInUniform) {
    return {CausalConv1d::create(layout, name + ".f", in, filters, dilation, init),
            CausalConv1d::create(layout, name + ".g", in, filters, dilation, init)};
  }

  Eigen::Index out() const { return filter.in + filter.filters; }

  template <class T>
  Var forward(Tape<T>& tape, const Vector<T>& params, Var x) const {
    Var act = mul(tape, tanh(tape, filter.forward(tape, params, x)), sigmoid(tape, gate.forward(tape, params, x)));
    return concat_cols(tape, {x, act});
  }
};

/// Number of dense blocks a temporal-convolution block needs to cover L steps.
inline Eigen::Index tc_levels(Eigen::Index seq_len) {
  Eigen::Index levels = 0;
  while ((Eigen::Index{1} << levels) < seq_len) ++levels;
  return levels;
}

/// Dense blocks with dilations 1, 2, 4, ... covering seq_len positions.
struct TCBlock {
  std::vector<DenseBlock> blocks;
  Eigen::Index in = 0;
  Eigen::Index seq_len = 0;

  static TCBlock create(ParamLayout& layout, const std::string& name, Eigen::Index in, Eigen::Index seq_len,
                        Eigen::Index filters, Init init = Init::FanInUniform) {
    TCBlock tc;
    tc.in = in;
    tc.seq_len = seq_len;
    Eigen::Index channels = in;
    for (Eigen::Index level = 0; level < tc_levels(seq_len); ++level) {
      tc.blocks.push_back(DenseBlock::create(layout, name + "." + std::to_string(level), channels, filters,
                                             Eigen::Index{1} << level, init));
      channels += filters;
    }
    return tc;
  }

  Eigen::Index out() const { return blocks.empty() ? in : blocks.back().out(); }

  std::vector<Eigen::Index> dilations() const {
    std::vector<Eigen::Index> d;
    for (const auto& b : blocks) d.push_back(b.filter.dilation);
    return d;
  }

  template <class T>
  Var forward(Tape<T>& tape, const Vector<T>& params, Var x) const {
    const auto n = tape.value(x).rows();
    if (n == 0) throw Error(ErrorCode::EmptySequence, "tc_block on an empty sequence");
    if (n > seq_len) throw Error(ErrorCode::SeqTooLong, "sequence longer than TC block length");
    for (const auto& b : blocks) x = b.forward(tape, params, x);
    return x;
  }
};

/// Causal self-attention with a learned linear recency bias; the read vector
/// is appended to the input.
struct AttentionBlock {
  Dense query;
  Dense key;
  Dense value;
  ParamBlock slope;
  Eigen::Index in = 0;

  static AttentionBlock create(ParamLayout& layout, const std::string& name, Eigen::Index in,
                               Eigen::Index key_dim, Eigen::Index value_dim, double initial_slope = 1.0) {
    AttentionBlock a;
    a.in = in;
    a.query = Dense::create(layout, name + ".q", in, key_dim);
    a.key = Dense::create(layout, name + ".k", in, key_dim);
    a.value = Dense::create(layout, name + ".v", in, value_dim);
    a.slope = layout.add(name + ".m", 1, 1, Init::Constant, initial_slope);
    return a;
  }

  Eigen::Index out() const { return in + value.out; }

  template <class T>
  Var forward(Tape<T>& tape, const Vector<T>& params, Var x, std::vector<int> times) const {
    Var q = query.forward(tape, params, x);
    Var k = key.forward(tape, params, x);
    Var v = value.forward(tape, params, x);
    Var m = relu(tape, read(tape, params, slope));
    return concat_cols(tape, {x, alibi_attention(tape, q, k, v, m, std::move(times))});
  }
};

}  // namespace reil::nn
