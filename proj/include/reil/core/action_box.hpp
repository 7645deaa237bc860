#pragma once

#include <algorithm>
#include <span>
#include <vector>

#include "reil/error.hpp"

namespace reil {

/// Axis-aligned action bounds.
struct ActionBox {
  std::vector<double> low;
  std::vector<double> high;

  static ActionBox symmetric(std::vector<double> limit) {
    ActionBox box;
    box.high = limit;
    for (double& v : limit) v = -v;
    box.low = std::move(limit);
    return box;
  }

  std::size_t dim() const { return low.size(); }
  double center(std::size_t i) const { return 0.5 * (low[i] + high[i]); }
  double half_range(std::size_t i) const { return 0.5 * (high[i] - low[i]); }

  std::vector<double> clip(std::span<const double> a) const {
    if (a.size() != dim()) throw Error(ErrorCode::ShapeError, "action dimension mismatch");
    std::vector<double> out(a.begin(), a.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], low[i], high[i]);
    return out;
  }

  bool contains(std::span<const double> a) const {
    if (a.size() != dim()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (!(a[i] >= low[i] && a[i] <= high[i])) return false;
    }
    return true;
  }
};

}  // namespace reil
