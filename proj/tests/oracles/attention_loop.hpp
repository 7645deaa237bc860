#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace oracle {

using Rows = std::vector<std::vector<double>>;

// Scalar-loop causal attention with a linear distance penalty. Queries are
// aligned to the last q.size() key positions; key j is visible to query i
// iff j <= offset + i.
inline Rows attention_loop(const Rows& q, const Rows& k, const Rows& v, double m, const std::vector<int>& times) {
  const std::size_t nq = q.size(), nk = k.size(), dk = q[0].size(), dv = v[0].size();
  const std::size_t offset = nk - nq;
  Rows out(nq, std::vector<double>(dv, 0.0));
  for (std::size_t i = 0; i < nq; ++i) {
    std::vector<double> s(nk, -std::numeric_limits<double>::infinity());
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j <= offset + i; ++j) {
      double dot = 0.0;
      for (std::size_t c = 0; c < dk; ++c) dot += q[i][c] * k[j][c];
      s[j] = dot / std::sqrt(double(dk)) - m * std::abs(times[offset + i] - times[j]);
      if (s[j] > best) best = s[j];
    }
    double z = 0.0;
    for (std::size_t j = 0; j <= offset + i; ++j) z += std::exp(s[j] - best);
    for (std::size_t j = 0; j <= offset + i; ++j) {
      const double w = std::exp(s[j] - best) / z;
      for (std::size_t c = 0; c < dv; ++c) out[i][c] += w * v[j][c];
    }
  }
  return out;
}

}  // namespace oracle
