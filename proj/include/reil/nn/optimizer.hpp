#pragma once

#include <cmath>
#include <string>

#include "reil/nn/tape.hpp"

namespace reil::nn {

enum class OptimizerKind { Sgd, Adam };

inline std::string to_string(OptimizerKind k) { return k == OptimizerKind::Sgd ? "SGD" : "ADAM"; }

inline OptimizerKind optimizer_kind_from_string(const std::string& s) {
  if (s == "SGD") return OptimizerKind::Sgd;
  if (s == "ADAM") return OptimizerKind::Adam;
  throw Error(ErrorCode::ConfigError, "optimizer: unknown kind '" + s + "'");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::Sgd;
  double lr = 1e-4;
  double weight_decay = 0.0;  // L2 term added to the gradient
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Plain SGD or Adam over one flat parameter vector.
template <class T>
class Optimizer {
 public:
  Optimizer() = default;
  explicit Optimizer(OptimizerConfig cfg) : cfg_(cfg) {}

  void step(Vector<T>& params, const Vector<T>& grad) {
    if (grad.size() != params.size()) throw Error(ErrorCode::ShapeError, "optimizer: gradient size mismatch");
    const T lr = static_cast<T>(cfg_.lr);
    if (lr == T(0)) return;
    Vector<T> g = grad;
    if (cfg_.weight_decay != 0.0) g += static_cast<T>(cfg_.weight_decay) * params;
    if (cfg_.kind == OptimizerKind::Sgd) {
      params -= lr * g;
      return;
    }
    if (m_.size() != params.size()) {
      m_ = Vector<T>::Zero(params.size());
      v_ = Vector<T>::Zero(params.size());
    }
    ++t_;
    const T b1 = static_cast<T>(cfg_.beta1), b2 = static_cast<T>(cfg_.beta2);
    const T c1 = T(1) / (T(1) - std::pow(b1, T(t_)));
    const T c2 = T(1) / (T(1) - std::pow(b2, T(t_)));
    const T eps = static_cast<T>(cfg_.eps);
    m_.array() = b1 * m_.array() + (T(1) - b1) * g.array();
    v_.array() = b2 * v_.array() + (T(1) - b2) * g.array().square();
    params.array() -= lr * c1 * m_.array() / ((c2 * v_.array()).sqrt() + eps);
  }

  const OptimizerConfig& config() const { return cfg_; }
  long steps() const { return t_; }

 private:
  OptimizerConfig cfg_;
  Vector<T> m_;
  Vector<T> v_;
  long t_ = 0;
};

/// target <- (1 - tau) target + tau online
template <class T>
void polyak_update(Vector<T>& target, const Vector<T>& online, double tau) {
  if (!(tau > 0.0 && tau <= 1.0)) throw Error(ErrorCode::InvalidTau, "tau must lie in (0, 1]");
  if (target.size() != online.size()) throw Error(ErrorCode::ShapeError, "polyak: size mismatch");
  if (tau == 1.0) {
    target = online;
    return;
  }
  const T t = static_cast<T>(tau);
  target = (T(1) - t) * target + t * online;
}

}  // namespace reil::nn
