#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "reil/nn/tape.hpp"

namespace reil::nn {

namespace detail {
inline void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::ShapeError, what);
}
template <class T>
bool any_grad(const Tape<T>& tape, std::initializer_list<Var> vs) {
  for (Var v : vs) {
    if (tape.requires_grad(v)) return true;
  }
  return false;
}
}  // namespace detail

template <class T>
Var matmul(Tape<T>& tape, Var a, Var b) {
  const auto& A = tape.value(a);
  const auto& B = tape.value(b);
  if (A.cols() != B.rows()) {
    throw Error(ErrorCode::ShapeError, "matmul: inner dimensions differ (" + std::to_string(A.cols()) + " vs " +
                                           std::to_string(B.rows()) + ")");
  }
  const bool rg = detail::any_grad(tape, {a, b});
  return tape.push(A * B, rg, [a, b](Tape<T>& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(a)) t.add_grad(a, g * t.value(b).transpose());
    if (t.requires_grad(b)) t.add_grad(b, t.value(a).transpose() * g);
  });
}

template <class T>
Var add(Tape<T>& tape, Var a, Var b) {
  detail::require(tape.value(a).rows() == tape.value(b).rows() && tape.value(a).cols() == tape.value(b).cols(),
                  "add: shape mismatch");
  return tape.push(tape.value(a) + tape.value(b), detail::any_grad(tape, {a, b}), [a, b](Tape<T>& t, int self) {
    t.add_grad(a, t.grad(self));
    t.add_grad(b, t.grad(self));
  });
}

template <class T>
Var sub(Tape<T>& tape, Var a, Var b) {
  detail::require(tape.value(a).rows() == tape.value(b).rows() && tape.value(a).cols() == tape.value(b).cols(),
                  "sub: shape mismatch");
  return tape.push(tape.value(a) - tape.value(b), detail::any_grad(tape, {a, b}), [a, b](Tape<T>& t, int self) {
    t.add_grad(a, t.grad(self));
    t.add_grad(b, -t.grad(self));
  });
}

/// Elementwise product.
template <class T>
Var mul(Tape<T>& tape, Var a, Var b) {
  detail::require(tape.value(a).rows() == tape.value(b).rows() && tape.value(a).cols() == tape.value(b).cols(),
                  "mul: shape mismatch");
  return tape.push(tape.value(a).cwiseProduct(tape.value(b)), detail::any_grad(tape, {a, b}),
                   [a, b](Tape<T>& t, int self) {
                     if (t.requires_grad(a)) t.add_grad(a, t.grad(self).cwiseProduct(t.value(b)));
                     if (t.requires_grad(b)) t.add_grad(b, t.grad(self).cwiseProduct(t.value(a)));
                   });
}

/// Adds a 1 x c row to every row of a.
template <class T>
Var add_row(Tape<T>& tape, Var a, Var row) {
  const auto& A = tape.value(a);
  const auto& R = tape.value(row);
  detail::require(R.rows() == 1 && R.cols() == A.cols(), "add_row: bias shape mismatch");
  typename Tape<T>::Mat out = A.rowwise() + R.row(0);
  return tape.push(std::move(out), detail::any_grad(tape, {a, row}), [a, row](Tape<T>& t, int self) {
    t.add_grad(a, t.grad(self));
    if (t.requires_grad(row)) t.add_grad(row, t.grad(self).colwise().sum());
  });
}

/// Scales row i of a by w(i, 0).
template <class T>
Var scale_rows(Tape<T>& tape, Var a, Var w) {
  const auto& A = tape.value(a);
  const auto& W = tape.value(w);
  detail::require(W.cols() == 1 && W.rows() == A.rows(), "scale_rows: weight column mismatch");
  typename Tape<T>::Mat out = W.col(0).asDiagonal() * A;
  return tape.push(std::move(out), detail::any_grad(tape, {a, w}), [a, w](Tape<T>& t, int self) {
    const auto& g = t.grad(self);
    if (t.requires_grad(a)) t.add_grad(a, typename Tape<T>::Mat(t.value(w).col(0).asDiagonal() * g));
    if (t.requires_grad(w)) t.add_grad(w, g.cwiseProduct(t.value(a)).rowwise().sum());
  });
}

/// Multiplies column j of a by the constant s[j].
template <class T>
Var scale_cols(Tape<T>& tape, Var a, const Vector<T>& s) {
  detail::require(tape.value(a).cols() == s.size(), "scale_cols: size mismatch");
  typename Tape<T>::Mat out = tape.value(a) * s.asDiagonal();
  return tape.push(std::move(out), tape.requires_grad(a), [a, s](Tape<T>& t, int self) {
    t.add_grad(a, typename Tape<T>::Mat(t.grad(self) * s.asDiagonal()));
  });
}

template <class T>
Var scale(Tape<T>& tape, Var a, T s) {
  return tape.push(tape.value(a) * s, tape.requires_grad(a),
                   [a, s](Tape<T>& t, int self) { t.add_grad(a, t.grad(self) * s); });
}

template <class T>
Var add_constant(Tape<T>& tape, Var a, const typename Tape<T>::Mat& c) {
  detail::require(c.rows() == tape.value(a).rows() && c.cols() == tape.value(a).cols(), "add_constant: shape");
  return tape.push(tape.value(a) + c, tape.requires_grad(a),
                   [a](Tape<T>& t, int self) { t.add_grad(a, t.grad(self)); });
}

template <class T>
Var relu(Tape<T>& tape, Var a) {
  return tape.push(tape.value(a).cwiseMax(T(0)), tape.requires_grad(a), [a](Tape<T>& t, int self) {
    t.add_grad(a, t.grad(self).cwiseProduct(
                      t.value(a).unaryExpr([](T x) { return x > T(0) ? T(1) : T(0); })));
  });
}

template <class T>
Var tanh(Tape<T>& tape, Var a) {
  typename Tape<T>::Mat y = tape.value(a).array().tanh().matrix();
  return tape.push(std::move(y), tape.requires_grad(a), [a](Tape<T>& t, int self) {
    const auto& y = t.value(self);
    t.add_grad(a, t.grad(self).cwiseProduct((T(1) - y.array().square()).matrix()));
  });
}

template <class T>
Var sigmoid(Tape<T>& tape, Var a) {
  typename Tape<T>::Mat y = tape.value(a).unaryExpr([](T x) {
    return x >= T(0) ? T(1) / (T(1) + std::exp(-x)) : std::exp(x) / (T(1) + std::exp(x));
  });
  return tape.push(std::move(y), tape.requires_grad(a), [a](Tape<T>& t, int self) {
    const auto& y = t.value(self);
    t.add_grad(a, t.grad(self).cwiseProduct((y.array() * (T(1) - y.array())).matrix()));
  });
}

template <class T>
Var square(Tape<T>& tape, Var a) {
  return tape.push(tape.value(a).array().square().matrix(), tape.requires_grad(a), [a](Tape<T>& t, int self) {
    t.add_grad(a, (T(2) * t.grad(self).array() * t.value(a).array()).matrix());
  });
}

/// Natural log; the input must be positive.
template <class T>
Var log(Tape<T>& tape, Var a) {
  return tape.push(tape.value(a).array().log().matrix(), tape.requires_grad(a), [a](Tape<T>& t, int self) {
    t.add_grad(a, (t.grad(self).array() / t.value(a).array()).matrix());
  });
}

/// Clamps to [lo, hi]; gradient is zero where clamping is active.
template <class T>
Var clamp(Tape<T>& tape, Var a, T lo, T hi) {
  return tape.push(tape.value(a).cwiseMax(lo).cwiseMin(hi), tape.requires_grad(a),
                   [a, lo, hi](Tape<T>& t, int self) {
                     t.add_grad(a, t.grad(self).cwiseProduct(t.value(a).unaryExpr(
                                       [lo, hi](T x) { return (x >= lo && x <= hi) ? T(1) : T(0); })));
                   });
}

template <class T>
Var concat_cols(Tape<T>& tape, const std::vector<Var>& parts) {
  detail::require(!parts.empty(), "concat_cols: nothing to concatenate");
  const Eigen::Index rows = tape.value(parts[0]).rows();
  Eigen::Index cols = 0;
  bool rg = false;
  for (Var p : parts) {
    detail::require(tape.value(p).rows() == rows, "concat_cols: row count mismatch");
    cols += tape.value(p).cols();
    rg = rg || tape.requires_grad(p);
  }
  typename Tape<T>::Mat out(rows, cols);
  Eigen::Index c = 0;
  for (Var p : parts) {
    out.middleCols(c, tape.value(p).cols()) = tape.value(p);
    c += tape.value(p).cols();
  }
  return tape.push(std::move(out), rg, [parts](Tape<T>& t, int self) {
    Eigen::Index c = 0;
    for (Var p : parts) {
      const Eigen::Index w = t.value(p).cols();
      if (t.requires_grad(p)) t.add_grad(p, t.grad(self).middleCols(c, w));
      c += w;
    }
  });
}

template <class T>
Var slice_cols(Tape<T>& tape, Var a, Eigen::Index start, Eigen::Index count) {
  detail::require(start >= 0 && start + count <= tape.value(a).cols(), "slice_cols: out of range");
  typename Tape<T>::Mat out = tape.value(a).middleCols(start, count);
  return tape.push(std::move(out), tape.requires_grad(a), [a, start, count](Tape<T>& t, int self) {
    typename Tape<T>::Mat g = Tape<T>::Mat::Zero(t.value(a).rows(), t.value(a).cols());
    g.middleCols(start, count) = t.grad(self);
    t.add_grad(a, g);
  });
}

template <class T>
Var slice_rows(Tape<T>& tape, Var a, Eigen::Index start, Eigen::Index count) {
  detail::require(start >= 0 && start + count <= tape.value(a).rows(), "slice_rows: out of range");
  typename Tape<T>::Mat out = tape.value(a).middleRows(start, count);
  return tape.push(std::move(out), tape.requires_grad(a), [a, start, count](Tape<T>& t, int self) {
    typename Tape<T>::Mat g = Tape<T>::Mat::Zero(t.value(a).rows(), t.value(a).cols());
    g.middleRows(start, count) = t.grad(self);
    t.add_grad(a, g);
  });
}

/// out[t] = a[t - d], zero for t < d. Building block of causal convolutions.
template <class T>
Var shift_down(Tape<T>& tape, Var a, Eigen::Index d) {
  const auto& A = tape.value(a);
  typename Tape<T>::Mat out = Tape<T>::Mat::Zero(A.rows(), A.cols());
  if (d < A.rows()) out.bottomRows(A.rows() - d) = A.topRows(A.rows() - d);
  return tape.push(std::move(out), tape.requires_grad(a), [a, d](Tape<T>& t, int self) {
    const auto& g = t.grad(self);
    typename Tape<T>::Mat ga = Tape<T>::Mat::Zero(g.rows(), g.cols());
    if (d < g.rows()) ga.topRows(g.rows() - d) = g.bottomRows(g.rows() - d);
    t.add_grad(a, ga);
  });
}

template <class T>
Var sum(Tape<T>& tape, Var a) {
  typename Tape<T>::Mat out(1, 1);
  out(0, 0) = tape.value(a).sum();
  return tape.push(std::move(out), tape.requires_grad(a), [a](Tape<T>& t, int self) {
    const T g = t.grad(self)(0, 0);
    t.add_grad(a, Tape<T>::Mat::Constant(t.value(a).rows(), t.value(a).cols(), g));
  });
}

template <class T>
Var mean(Tape<T>& tape, Var a) {
  const auto n = static_cast<T>(tape.value(a).size());
  detail::require(n > 0, "mean of an empty matrix");
  return scale(tape, sum(tape, a), T(1) / n);
}

/// Row sums: n x c -> n x 1.
template <class T>
Var row_sum(Tape<T>& tape, Var a) {
  typename Tape<T>::Mat out = tape.value(a).rowwise().sum();
  return tape.push(std::move(out), tape.requires_grad(a), [a](Tape<T>& t, int self) {
    typename Tape<T>::Mat g = t.grad(self).col(0).replicate(1, t.value(a).cols());
    t.add_grad(a, g);
  });
}

}  // namespace reil::nn
