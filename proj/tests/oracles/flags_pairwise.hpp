#pragma once

#include <cstdint>
#include <vector>

namespace oracle {

struct FlagRows {
  std::vector<int> intervention, task, mix;
};

// Looks at each adjacent pair on its own; the step after the end counts as 0.
inline FlagRows pairwise_flags(const std::vector<int>& f, const std::vector<int>& terminal) {
  FlagRows r;
  for (std::size_t t = 0; t < f.size(); ++t) {
    const int next = t + 1 < f.size() ? f[t + 1] : 0;
    const int onset = (f[t] == 0 && next == 1) ? 1 : 0;
    r.intervention.push_back(onset);
    r.task.push_back(terminal[t]);
    r.mix.push_back(onset || terminal[t] ? 1 : 0);
  }
  return r;
}

}  // namespace oracle
