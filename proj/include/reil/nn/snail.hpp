#pragma once

#include <string>
#include <vector>

#include "reil/nn/layers.hpp"

namespace reil::nn {

enum class EncoderKind { Mlp, Conv };

struct SnailConfig {
  Eigen::Index obs_dim = 18;  // flat observation size for the MLP encoder
  Eigen::Index latent_dim = 100;
  Eigen::Index tc_filters = 30;
  Eigen::Index attn_key_dim = 16;
  Eigen::Index attn_value_dim = 16;
  Eigen::Index seq_len = 75;
  EncoderKind encoder = EncoderKind::Mlp;
  ConvGeometry image{3, 30, 40, 16, 4, 2};  // CONV encoder input; out_channels of the first layer
  Eigen::Index conv_channels_2 = 32;
  Eigen::Index action_dim = 2;
  bool with_tf_head = true;

  void validate() const {
    const bool ok = obs_dim >= 1 && latent_dim >= 1 && tc_filters >= 1 && attn_key_dim >= 1 &&
                    attn_value_dim >= 1 && seq_len >= 1 && action_dim >= 1;
    if (!ok) throw Error(ErrorCode::ConfigError, "snail config: all dimensions must be >= 1");
  }

  Eigen::Index input_size() const { return encoder == EncoderKind::Mlp ? obs_dim : image.in_size(); }

  std::string describe() const {
    return "snail(obs=" + std::to_string(input_size()) + ",latent=" + std::to_string(latent_dim) +
           ",tc=" + std::to_string(tc_filters) + ",k=" + std::to_string(attn_key_dim) +
           ",v=" + std::to_string(attn_value_dim) + ",L=" + std::to_string(seq_len) +
           ",enc=" + (encoder == EncoderKind::Mlp ? "mlp" : "conv") + ",a=" + std::to_string(action_dim) +
           ",tf=" + (with_tf_head ? "1" : "0") + ")";
  }
};

/// Rows fed to a model. For sequence models the rows are one causal
/// sequence (demonstration prefix, then rollout); for flat models they are
/// independent samples and `prev_flag`/`times` are ignored.
template <class T>
struct ModelInput {
  Matrix<T> obs;        // n x obs_dim
  Matrix<T> prev_flag;  // n x 1, f_demo of the previous step
  std::vector<int> times;

  Eigen::Index rows() const { return obs.rows(); }
};

/// Builds the sequence input: demonstration rows carry times 1..T_demo and a
/// previous-flag of 1; rollout rows carry times 1..t and the rollout's own
/// previous f_demo (0 before the first step).
template <class T>
ModelInput<T> make_sequence_input(const std::vector<std::vector<double>>& demo_obs,
                                  const std::vector<std::vector<double>>& exp_obs,
                                  const std::vector<std::uint8_t>& exp_f_demo) {
  if (exp_obs.size() != exp_f_demo.size()) throw Error(ErrorCode::ShapeError, "f_demo length mismatch");
  const std::size_t n = demo_obs.size() + exp_obs.size();
  if (n == 0) throw Error(ErrorCode::EmptySequence, "sequence input is empty");
  const std::size_t dim = demo_obs.empty() ? exp_obs.front().size() : demo_obs.front().size();
  ModelInput<T> in;
  in.obs.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(dim));
  in.prev_flag.resize(static_cast<Eigen::Index>(n), 1);
  in.times.resize(n);
  Eigen::Index r = 0;
  for (std::size_t i = 0; i < demo_obs.size(); ++i, ++r) {
    if (demo_obs[i].size() != dim) throw Error(ErrorCode::ShapeError, "observation size mismatch");
    for (std::size_t c = 0; c < dim; ++c) in.obs(r, Eigen::Index(c)) = static_cast<T>(demo_obs[i][c]);
    in.prev_flag(r, 0) = T(1);
    in.times[r] = static_cast<int>(i + 1);
  }
  for (std::size_t i = 0; i < exp_obs.size(); ++i, ++r) {
    if (exp_obs[i].size() != dim) throw Error(ErrorCode::ShapeError, "observation size mismatch");
    for (std::size_t c = 0; c < dim; ++c) in.obs(r, Eigen::Index(c)) = static_cast<T>(exp_obs[i][c]);
    in.prev_flag(r, 0) = i == 0 ? T(0) : static_cast<T>(exp_f_demo[i - 1]);
    in.times[r] = static_cast<int>(i + 1);
  }
  return in;
}

/// Encoder -> [latent, f_demo(t-1)] -> TCBlock -> ALiBi attention -> TCBlock.
struct SnailTrunk {
  SnailConfig config;
  Mlp mlp_encoder;
  Conv2d conv1;
  Conv2d conv2;
  Mlp conv_head;
  TCBlock tc1;
  AttentionBlock attention;
  TCBlock tc2;

  static SnailTrunk create(ParamLayout& layout, const std::string& name, const SnailConfig& cfg) {
    cfg.validate();
    SnailTrunk s;
    s.config = cfg;
    layout.note(cfg.describe());
    if (cfg.encoder == EncoderKind::Mlp) {
      s.mlp_encoder = Mlp::create(layout, name + ".enc", {cfg.obs_dim, cfg.latent_dim, cfg.latent_dim},
                                  Activation::Relu, Activation::Relu);
    } else {
      s.conv1 = Conv2d::create(layout, name + ".conv1", cfg.image);
      ConvGeometry g2{cfg.image.out_channels, cfg.image.out_height(), cfg.image.out_width(), cfg.conv_channels_2,
                      cfg.image.kernel, cfg.image.stride};
      s.conv2 = Conv2d::create(layout, name + ".conv2", g2);
      s.conv_head = Mlp::create(layout, name + ".enc", {g2.out_size(), cfg.latent_dim, cfg.latent_dim},
                                Activation::Relu, Activation::Relu);
    }
    s.tc1 = TCBlock::create(layout, name + ".tc1", cfg.latent_dim + 1, cfg.seq_len, cfg.tc_filters);
    s.attention = AttentionBlock::create(layout, name + ".attn", s.tc1.out(), cfg.attn_key_dim, cfg.attn_value_dim);
    s.tc2 = TCBlock::create(layout, name + ".tc2", s.attention.out(), cfg.seq_len, cfg.tc_filters);
    return s;
  }

  Eigen::Index out() const { return tc2.out(); }

  template <class T>
  Var encode(Tape<T>& tape, const Vector<T>& params, Var obs) const {
    if (config.encoder == EncoderKind::Mlp) return mlp_encoder.forward(tape, params, obs);
    Var h = relu(tape, conv1.forward(tape, params, obs));
    h = relu(tape, conv2.forward(tape, params, h));
    return conv_head.forward(tape, params, h);
  }

  template <class T>
  Var forward(Tape<T>& tape, const Vector<T>& params, const ModelInput<T>& in) const {
    const Eigen::Index n = in.rows();
    if (n == 0) throw Error(ErrorCode::EmptySequence, "snail input is empty");
    if (n > config.seq_len) {
      throw Error(ErrorCode::SeqTooLong, "sequence of " + std::to_string(n) + " exceeds L=" +
                                             std::to_string(config.seq_len));
    }
    if (in.obs.cols() != config.input_size() || in.prev_flag.rows() != n ||
        static_cast<Eigen::Index>(in.times.size()) != n) {
      throw Error(ErrorCode::ShapeError, "snail input shape mismatch");
    }
    Var latent = encode(tape, params, tape.constant(in.obs));
    Var x = concat_cols(tape, {latent, tape.constant(in.prev_flag)});
    x = tc1.forward(tape, params, x);
    x = attention.forward(tape, params, x, in.times);
    return tc2.forward(tape, params, x);
  }
};

}  // namespace reil::nn
