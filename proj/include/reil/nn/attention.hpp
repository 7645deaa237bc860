#pragma once

#include <cmath>
#include <cstdlib>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "reil/nn/tape.hpp"

namespace reil::nn {

template <class T>
struct AttentionResult {
  Matrix<T> output;   // n_q x d_v
  Matrix<T> weights;  // n_q x n_k, masked entries exactly zero
};

/// softmax(Q K^T / sqrt(d_k) - m |t_q - t_k| + M) V with a causal mask M.
///
/// Rows of Q are the last n_q positions of the key sequence, so query i sits at
/// key position n_k - n_q + i and may attend to keys 0..that position. `times`
/// holds one time frame per key; a demonstration prefix followed by a rollout
/// is expressed as [1..T_demo, 1..t].
template <class T>
AttentionResult<T> alibi_attention(const Matrix<T>& Q, const Matrix<T>& K, const Matrix<T>& V, T m,
                                   std::span<const int> times) {
  if (m < T(0)) throw Error(ErrorCode::InvalidSlope, "ALiBi slope must be non-negative");
  const Eigen::Index nq = Q.rows(), nk = K.rows();
  if (Q.cols() != K.cols() || V.rows() != nk || static_cast<Eigen::Index>(times.size()) != nk || nq > nk ||
      nq == 0) {
    throw Error(ErrorCode::ShapeError, "alibi_attention: inconsistent shapes");
  }
  const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(Q.cols()));
  const Eigen::Index offset = nk - nq;
  Matrix<T> W = Matrix<T>::Zero(nq, nk);
  Matrix<T> logits = Q * K.transpose() * inv_sqrt;
  for (Eigen::Index i = 0; i < nq; ++i) {
    const Eigen::Index pos = offset + i;
    T top = -std::numeric_limits<T>::infinity();
    for (Eigen::Index j = 0; j <= pos; ++j) {
      logits(i, j) -= m * static_cast<T>(std::abs(times[pos] - times[j]));
      top = std::max(top, logits(i, j));
    }
    T z = 0;
    for (Eigen::Index j = 0; j <= pos; ++j) {
      W(i, j) = std::exp(logits(i, j) - top);
      z += W(i, j);
    }
    W.row(i).head(pos + 1) /= z;
  }
  return {W * V, std::move(W)};
}

/// Tape version. `m` is a 1x1 node holding a non-negative slope.
template <class T>
Var alibi_attention(Tape<T>& tape, Var q, Var k, Var v, Var m, std::vector<int> times) {
  auto res = alibi_attention<T>(tape.value(q), tape.value(k), tape.value(v), tape.value(m)(0, 0), times);
  Matrix<T> weights = std::move(res.weights);
  const bool rg = tape.requires_grad(q) || tape.requires_grad(k) || tape.requires_grad(v) || tape.requires_grad(m);
  return tape.push(std::move(res.output), rg,
                   [q, k, v, m, times = std::move(times), weights = std::move(weights)](Tape<T>& t, int self) {
                     const auto& G = t.grad(self);
                     const auto& Q = t.value(q);
                     const auto& K = t.value(k);
                     const auto& V = t.value(v);
                     const T inv_sqrt = T(1) / std::sqrt(static_cast<T>(Q.cols()));
                     if (t.requires_grad(v)) t.add_grad(v, weights.transpose() * G);
                     Matrix<T> dP = G * V.transpose();
                     // Softmax Jacobian, row by row; masked weights are zero so they drop out.
                     Matrix<T> dS = weights.cwiseProduct(
                         (dP.colwise() - (weights.cwiseProduct(dP)).rowwise().sum()).eval());
                     if (t.requires_grad(q)) t.add_grad(q, dS * K * inv_sqrt);
                     if (t.requires_grad(k)) t.add_grad(k, dS.transpose() * Q * inv_sqrt);
                     if (t.requires_grad(m)) {
                       const Eigen::Index offset = K.rows() - Q.rows();
                       T dm = 0;
                       for (Eigen::Index i = 0; i < dS.rows(); ++i) {
                         const int tq = times[offset + i];
                         for (Eigen::Index j = 0; j <= offset + i; ++j) dm -= dS(i, j) * T(std::abs(tq - times[j]));
                       }
                       Matrix<T> g(1, 1);
                       g(0, 0) = dm;
                       t.add_grad(m, g);
                     }
                   });
}

}  // namespace reil::nn
