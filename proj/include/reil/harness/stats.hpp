#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "reil/harness/metrics.hpp"

namespace reil::harness {

struct WelchResult {
  double t = 0.0;
  double df = 0.0;
  double p = 1.0;
  bool degenerate = false;  // both groups have zero variance
};

inline double sample_mean(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

/// Sample (n-1) variance; 0 for fewer than two values.
inline double sample_variance(const std::vector<double>& x) {
  if (x.size() < 2) return 0.0;
  const double m = sample_mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

/// Two-tailed Welch t-test for unequal variances.
inline WelchResult welch_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() < 2 || b.size() < 2) throw Error(ErrorCode::TooShort, "Welch test needs two values per group");
  const double na = double(a.size()), nb = double(b.size());
  const double va = sample_variance(a) / na, vb = sample_variance(b) / nb;
  const double diff = sample_mean(a) - sample_mean(b);
  WelchResult r;
  if (va + vb == 0.0) {
    r.degenerate = true;
    r.df = na + nb - 2;
    if (diff == 0.0) return r;
    r.t = diff > 0 ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
    r.p = 0.0;
    return r;
  }
  r.t = diff / std::sqrt(va + vb);
  r.df = (va + vb) * (va + vb) / (va * va / (na - 1) + vb * vb / (nb - 1));
  boost::math::students_t dist(r.df);
  r.p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t)));
  return r;
}

struct AlgorithmSummary {
  std::string algorithm;
  int runs = 0;
  int successes = 0;
  double mean_supervised = 0.0;  // over successful runs
  double std_supervised = 0.0;   // sample standard deviation
  bool single_run = false;       // std reported as 0 because only one value
  std::vector<double> supervised;  // per successful run
};

struct PairwiseTest {
  std::string a;
  std::string b;
  WelchResult welch;
  bool computed = false;
};

struct Summary {
  std::vector<AlgorithmSummary> algorithms;
  std::vector<PairwiseTest> tests;
};

/// Per-algorithm supervised-step statistics over successful runs and
/// pairwise Welch tests between algorithms.
inline Summary summarize(const std::map<std::string, std::vector<MetricsLog>>& runs) {
  Summary s;
  for (const auto& [name, logs] : runs) {
    AlgorithmSummary a;
    a.algorithm = name;
    a.runs = static_cast<int>(logs.size());
    for (const auto& log : logs) {
      if (!log.any_success()) continue;
      ++a.successes;
      a.supervised.push_back(double(log.total_supervised_steps()));
    }
    a.mean_supervised = sample_mean(a.supervised);
    a.single_run = a.supervised.size() < 2;
    a.std_supervised = a.single_run ? 0.0 : std::sqrt(sample_variance(a.supervised));
    s.algorithms.push_back(std::move(a));
  }
  for (std::size_t i = 0; i < s.algorithms.size(); ++i) {
    for (std::size_t j = i + 1; j < s.algorithms.size(); ++j) {
      PairwiseTest t{s.algorithms[i].algorithm, s.algorithms[j].algorithm, {}, false};
      if (s.algorithms[i].supervised.size() >= 2 && s.algorithms[j].supervised.size() >= 2) {
        t.welch = welch_t_test(s.algorithms[i].supervised, s.algorithms[j].supervised);
        t.computed = true;
      }
      s.tests.push_back(t);
    }
  }
  return s;
}

}  // namespace reil::harness
