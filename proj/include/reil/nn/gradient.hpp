#pragma once

#include <utility>

#include "reil/nn/tape.hpp"

namespace reil::nn {

/// Runs `forward(tape, params)` and returns the output value.
template <class T, class Forward>
Matrix<T> evaluate(const Vector<T>& params, Forward&& forward) {
  Tape<T> tape;
  Var out = forward(tape, params);
  return tape.value(out);
}

/// d loss / d params, where loss = loss_head(tape, forward(tape, params)).
/// The loss must be 1x1.
template <class T, class Forward, class LossHead>
Vector<T> gradient(const Vector<T>& params, Forward&& forward, LossHead&& loss_head) {
  Tape<T> tape;
  Var out = forward(tape, params);
  Var loss = loss_head(tape, out);
  tape.backward(loss);
  return tape.param_grads(params);
}

/// Same as gradient() but also reports the loss value.
template <class T, class Forward, class LossHead>
std::pair<T, Vector<T>> value_and_gradient(const Vector<T>& params, Forward&& forward, LossHead&& loss_head) {
  Tape<T> tape;
  Var out = forward(tape, params);
  Var loss = loss_head(tape, out);
  tape.backward(loss);
  return {tape.scalar(loss), tape.param_grads(params)};
}

}  // namespace reil::nn
