#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "oracles/attention_loop.hpp"
#include "oracles/finite_diff.hpp"
#include "reil/nn/gradient.hpp"
#include "reil/nn/models.hpp"

namespace support {

using reil::nn::Matrix;
using reil::nn::Tape;
using reil::nn::Var;
using reil::nn::Vector;

inline Matrix<double> random_matrix(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix<double> m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

inline oracle::Rows to_rows(const Matrix<double>& m) {
  oracle::Rows rows(m.rows(), std::vector<double>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) rows[i][j] = m(i, j);
  return rows;
}

// loss = sum(out .* R) for a fixed random R.
struct WeightedSum {
  Matrix<double> r;
  Var operator()(Tape<double>& t, Var out) const {
    return reil::nn::sum(t, reil::nn::mul(t, out, t.constant(r)));
  }
};

// Largest relative error between the tape gradient and central differences
// of the same scalar function.
template <class Forward>
double fd_error(const Vector<double>& params, Forward forward, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Tape<double> probe;
  const auto shape = probe.value(forward(probe, params));
  WeightedSum head{random_matrix(shape.rows(), shape.cols(), rng)};
  const Vector<double> analytic = reil::nn::gradient(params, forward, head);
  auto f = [&](const Eigen::VectorXd& p) {
    Vector<double> pv = p;
    Tape<double> t;
    return t.scalar(head(t, forward(t, pv)));
  };
  const Eigen::VectorXd numeric = oracle::central_difference(f, params, 1e-5);
  return oracle::max_relative_error(analytic, numeric);
}

inline reil::nn::SnailConfig tiny_snail(reil::nn::EncoderKind enc = reil::nn::EncoderKind::Mlp) {
  reil::nn::SnailConfig c;
  c.obs_dim = 3;
  c.latent_dim = 4;
  c.tc_filters = 2;
  c.attn_key_dim = 3;
  c.attn_value_dim = 3;
  c.seq_len = 16;
  c.encoder = enc;
  c.image = reil::nn::ConvGeometry{2, 14, 14, 3, 4, 2};
  c.conv_channels_2 = 4;
  c.action_dim = 2;
  c.with_tf_head = true;
  return c;
}

inline reil::nn::ModelInput<double> random_sequence(const reil::nn::SnailConfig& c, int t_demo, int t_exp,
                                                    std::mt19937_64& rng) {
  std::vector<std::vector<double>> demo, exp;
  std::vector<std::uint8_t> f;
  std::normal_distribution<double> n;
  std::bernoulli_distribution coin(0.3);
  const auto dim = c.input_size();
  for (int i = 0; i < t_demo; ++i) {
    demo.emplace_back(dim);
    for (auto& v : demo.back()) v = n(rng);
  }
  for (int i = 0; i < t_exp; ++i) {
    exp.emplace_back(dim);
    for (auto& v : exp.back()) v = n(rng);
    f.push_back(coin(rng));
  }
  return reil::nn::make_sequence_input<double>(demo, exp, f);
}

}  // namespace support
