#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "reil/nn/tape.hpp"

namespace reil::nn {

enum class Init { FanInUniform, Zero, Constant };

struct ParamBlock {
  Eigen::Index offset = 0;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  Eigen::Index size() const { return rows * cols; }
};

/// Allocates named blocks inside one flat parameter vector and remembers how
/// to initialize them. The textual description doubles as topology identity.
class ParamLayout {
 public:
  ParamBlock add(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                 Init init = Init::FanInUniform, double arg = 0.0) {
    ParamBlock block{size_, rows, cols};
    entries_.push_back({name, block, init, init == Init::FanInUniform && arg <= 0.0 ? double(rows) : arg});
    size_ += rows * cols;
    description_ += name + ":" + std::to_string(rows) + "x" + std::to_string(cols) + ";";
    return block;
  }

  /// Free-form text folded into the topology identity (activations, sizes).
  void note(const std::string& text) { description_ += "[" + text + "]"; }

  Eigen::Index size() const { return size_; }
  const std::string& description() const { return description_; }

  /// FNV-1a over the description.
  std::uint64_t hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : description_) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    return h;
  }

  template <class T>
  Vector<T> initialize(std::uint64_t seed) const {
    Vector<T> params(size_);
    std::mt19937_64 rng(seed);
    for (const auto& e : entries_) {
      for (Eigen::Index i = 0; i < e.block.size(); ++i) {
        T v{};
        switch (e.init) {
          case Init::FanInUniform: {
            const double bound = 1.0 / std::sqrt(e.arg);
            v = static_cast<T>(std::uniform_real_distribution<double>(-bound, bound)(rng));
            break;
          }
          case Init::Zero: v = T(0); break;
          case Init::Constant: v = static_cast<T>(e.arg); break;
        }
        params[e.block.offset + i] = v;
      }
    }
    return params;
  }

 private:
  struct Entry {
    std::string name;
    ParamBlock block;
    Init init;
    double arg;
  };
  std::vector<Entry> entries_;
  Eigen::Index size_ = 0;
  std::string description_;
};

template <class T>
Var read(Tape<T>& tape, const Vector<T>& params, const ParamBlock& b) {
  return tape.parameter(params, b.offset, b.rows, b.cols);
}

}  // namespace reil::nn
