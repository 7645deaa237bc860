#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "reil/error.hpp"

namespace reil::nn {

template <class T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

/// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

/// Reverse-mode tape over dense matrices.
///
/// Nodes are appended in evaluation order; backward() walks them in reverse.
/// Parameter leaves remember which flat vector and offset they were read from
/// so gradients can be scattered back into a vector of the same layout.
template <class T>
class Tape {
 public:
  using Mat = Matrix<T>;
  using BackwardFn = std::function<void(Tape&, int)>;

  Tape() { nodes_.reserve(256); }

  Var constant(Mat value) { return push(std::move(value), false, {}); }

  Var parameter(const Vector<T>& params, Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
    if (offset + rows * cols > params.size()) {
      throw Error(ErrorCode::ShapeError, "parameter block exceeds parameter vector");
    }
    Mat value = Eigen::Map<const Mat>(params.data() + offset, rows, cols);
    Var v = push(std::move(value), true, {});
    leaves_.push_back({v.id, offset, &params});
    return v;
  }

  Var push(Mat value, bool requires_grad, BackwardFn fn) {
    nodes_.push_back(Node{std::move(value), Mat(), requires_grad, std::move(fn)});
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  const Mat& value(int id) const { return nodes_[id].value; }
  bool requires_grad(Var v) const { return nodes_[v.id].requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradient of node `id`; empty if nothing flowed into it.
  const Mat& grad(int id) const { return nodes_[id].grad; }
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }

  template <class Expr>
  void add_grad(Var v, const Expr& g) {
    Node& n = nodes_[v.id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  T scalar(Var v) const {
    const Mat& m = value(v);
    if (m.rows() != 1 || m.cols() != 1) throw Error(ErrorCode::ShapeError, "expected a 1x1 value");
    return m(0, 0);
  }

  void backward(Var root) {
    const Mat& r = value(root);
    if (r.rows() != 1 || r.cols() != 1) {
      throw Error(ErrorCode::ShapeError, "loss must be scalar, got " + std::to_string(r.rows()) + "x" +
                                             std::to_string(r.cols()));
    }
    for (auto& n : nodes_) n.grad.resize(0, 0);
    if (!nodes_[root.id].requires_grad) return;
    nodes_[root.id].grad = Mat::Ones(1, 1);
    for (int id = root.id; id >= 0; --id) {
      Node& n = nodes_[id];
      if (n.grad.size() == 0 || !n.backward) continue;
      n.backward(*this, id);
    }
  }

  /// Adds gradients of every leaf read from `params` into `out`.
  void accumulate_param_grads(const Vector<T>& params, Vector<T>& out) const {
    if (out.size() != params.size()) out = Vector<T>::Zero(params.size());
    for (const auto& leaf : leaves_) {
      if (leaf.source != &params) continue;
      const Mat& g = nodes_[leaf.node].grad;
      if (g.size() == 0) continue;
      Eigen::Map<Mat>(out.data() + leaf.offset, g.rows(), g.cols()) += g;
    }
  }

  Vector<T> param_grads(const Vector<T>& params) const {
    Vector<T> out = Vector<T>::Zero(params.size());
    accumulate_param_grads(params, out);
    return out;
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool requires_grad = false;
    BackwardFn backward;
  };
  struct Leaf {
    int node;
    Eigen::Index offset;
    const Vector<T>* source;
  };

  std::vector<Node> nodes_;
  std::vector<Leaf> leaves_;
};

}  // namespace reil::nn
