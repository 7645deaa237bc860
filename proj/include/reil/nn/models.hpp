#pragma once

#include <memory>
#include <string>
#include <vector>

#include "reil/core/action_box.hpp"
#include "reil/nn/snail.hpp"

namespace reil::nn {

enum class ModelKind { Mlp, Snail };

/// Everything needed to build matching actor and critic topologies.
struct ModelSpec {
  ModelKind kind = ModelKind::Mlp;
  Eigen::Index obs_dim = 4;
  ActionBox box = ActionBox::symmetric({1.0});
  std::vector<Eigen::Index> hidden{64, 64};
  SnailConfig snail;
  Eigen::Index critic_head_hidden = 32;
  bool with_tf_head = false;

  Eigen::Index action_dim() const { return static_cast<Eigen::Index>(box.dim()); }
  bool sequential() const { return kind == ModelKind::Snail; }
};

template <class T>
struct ActorOutput {
  Var action;  // n x action_dim, inside the action box
  Var tf;      // n x 1 termination probability; invalid without a head
};

template <class T>
class ActorModel {
 public:
  virtual ~ActorModel() = default;
  virtual ActorOutput<T> forward(Tape<T>& tape, const Vector<T>& params, const ModelInput<T>& in) const = 0;
  const ParamLayout& layout() const { return layout_; }
  Eigen::Index param_count() const { return layout_.size(); }
  Vector<T> init(std::uint64_t seed) const { return layout_.template initialize<T>(seed); }
  bool has_tf_head() const { return spec_.with_tf_head; }
  const ModelSpec& spec() const { return spec_; }

 protected:
  explicit ActorModel(ModelSpec spec) : spec_(std::move(spec)) {}

  // tanh squashing into [low, high] componentwise.
  Var squash(Tape<T>& tape, Var raw) const {
    const auto a = spec_.action_dim();
    Vector<T> half(a);
    Matrix<T> center(tape.value(raw).rows(), a);
    for (Eigen::Index i = 0; i < a; ++i) {
      half[i] = static_cast<T>(spec_.box.half_range(static_cast<std::size_t>(i)));
      center.col(i).setConstant(static_cast<T>(spec_.box.center(static_cast<std::size_t>(i))));
    }
    return add_constant(tape, scale_cols(tape, tanh(tape, raw), half), center);
  }

  ActorOutput<T> split_head(Tape<T>& tape, Var raw) const {
    const auto a = spec_.action_dim();
    if (!spec_.with_tf_head) return {squash(tape, raw), Var{}};
    return {squash(tape, slice_cols(tape, raw, 0, a)), sigmoid(tape, slice_cols(tape, raw, a, 1))};
  }

  ModelSpec spec_;
  ParamLayout layout_;
};

template <class T>
class CriticModel {
 public:
  virtual ~CriticModel() = default;
  /// Q value per row (n x 1) for the given actions.
  virtual Var forward(Tape<T>& tape, const Vector<T>& params, const ModelInput<T>& in, Var action) const = 0;
  const ParamLayout& layout() const { return layout_; }
  Eigen::Index param_count() const { return layout_.size(); }
  Vector<T> init(std::uint64_t seed) const { return layout_.template initialize<T>(seed); }
  const ModelSpec& spec() const { return spec_; }

 protected:
  explicit CriticModel(ModelSpec spec) : spec_(std::move(spec)) {}

  // Maps actions from the box onto [-1, 1] before they enter the network.
  Var normalize_action(Tape<T>& tape, Var action) const {
    const auto a = spec_.action_dim();
    if (tape.value(action).cols() != a) throw Error(ErrorCode::ShapeError, "critic: action width mismatch");
    Vector<T> inv_half(a);
    Matrix<T> shift(tape.value(action).rows(), a);
    for (Eigen::Index i = 0; i < a; ++i) {
      const double half = spec_.box.half_range(static_cast<std::size_t>(i));
      inv_half[i] = static_cast<T>(1.0 / half);
      shift.col(i).setConstant(static_cast<T>(-spec_.box.center(static_cast<std::size_t>(i)) / half));
    }
    return add_constant(tape, scale_cols(tape, action, inv_half), shift);
  }

  ModelSpec spec_;
  ParamLayout layout_;
};

template <class T>
class MlpActor final : public ActorModel<T> {
 public:
  explicit MlpActor(ModelSpec spec) : ActorModel<T>(std::move(spec)) {
    std::vector<Eigen::Index> sizes{this->spec_.obs_dim};
    sizes.insert(sizes.end(), this->spec_.hidden.begin(), this->spec_.hidden.end());
    sizes.push_back(this->spec_.action_dim() + (this->spec_.with_tf_head ? 1 : 0));
    net_ = Mlp::create(this->layout_, "actor", sizes);
  }

  ActorOutput<T> forward(Tape<T>& tape, const Vector<T>& params, const ModelInput<T>& in) const override {
    return this->split_head(tape, net_.forward(tape, params, tape.constant(in.obs)));
  }

 private:
  Mlp net_;
};

template <class T>
class MlpCritic final : public CriticModel<T> {
 public:
  explicit MlpCritic(ModelSpec spec) : CriticModel<T>(std::move(spec)) {
    std::vector<Eigen::Index> sizes{this->spec_.obs_dim + this->spec_.action_dim()};
    sizes.insert(sizes.end(), this->spec_.hidden.begin(), this->spec_.hidden.end());
    sizes.push_back(1);
    net_ = Mlp::create(this->layout_, "critic", sizes);
  }

  Var forward(Tape<T>& tape, const Vector<T>& params, const ModelInput<T>& in, Var action) const override {
    Var x = concat_cols(tape, {tape.constant(in.obs), this->normalize_action(tape, action)});
    return net_.forward(tape, params, x);
  }

 private:
  Mlp net_;
};

template <class T>
class SnailActor final : public ActorModel<T> {
 public:
  explicit SnailActor(ModelSpec spec) : ActorModel<T>(std::move(spec)) {
    auto cfg = this->spec_.snail;
    cfg.action_dim = this->spec_.action_dim();
    cfg.with_tf_head = this->spec_.with_tf_head;
    trunk_ = SnailTrunk::create(this->layout_, "actor", cfg);
    head_ = Dense::create(this->layout_, "actor.head", trunk_.out(), cfg.action_dim + (cfg.with_tf_head ? 1 : 0));
  }

  ActorOutput<T> forward(Tape<T>& tape, const Vector<T>& params, const ModelInput<T>& in) const override {
    return this->split_head(tape, head_.forward(tape, params, trunk_.forward(tape, params, in)));
  }

  const SnailTrunk& trunk() const { return trunk_; }

 private:
  SnailTrunk trunk_;
  Dense head_;
};

/// Sequence critic: Q_t = head([trunk_t, a_t]). The trunk only sees
/// observations and ownership flags up to t, so swapping the action at t
/// never disturbs other rows.
template <class T>
class SnailCritic final : public CriticModel<T> {
 public:
  explicit SnailCritic(ModelSpec spec) : CriticModel<T>(std::move(spec)) {
    auto cfg = this->spec_.snail;
    cfg.action_dim = this->spec_.action_dim();
    trunk_ = SnailTrunk::create(this->layout_, "critic", cfg);
    head_ = Mlp::create(this->layout_, "critic.head",
                        {trunk_.out() + cfg.action_dim, this->spec_.critic_head_hidden, 1});
  }

  Var forward(Tape<T>& tape, const Vector<T>& params, const ModelInput<T>& in, Var action) const override {
    Var features = trunk_.forward(tape, params, in);
    return head_.forward(tape, params, concat_cols(tape, {features, this->normalize_action(tape, action)}));
  }

 private:
  SnailTrunk trunk_;
  Mlp head_;
};

template <class T>
std::unique_ptr<ActorModel<T>> make_actor(const ModelSpec& spec) {
  if (spec.kind == ModelKind::Snail) return std::make_unique<SnailActor<T>>(spec);
  return std::make_unique<MlpActor<T>>(spec);
}

template <class T>
std::unique_ptr<CriticModel<T>> make_critic(const ModelSpec& spec) {
  if (spec.kind == ModelKind::Snail) return std::make_unique<SnailCritic<T>>(spec);
  return std::make_unique<MlpCritic<T>>(spec);
}

}  // namespace reil::nn
