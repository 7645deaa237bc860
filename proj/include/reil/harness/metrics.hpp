#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "reil/error.hpp"

namespace reil::harness {

struct MetricsRow {
  std::int64_t episode = 0;
  std::int64_t steps = 0;
  std::int64_t supervised_steps = 0;
  double episode_return = 0.0;
  double avg_abs_angular_acc = 0.0;
  std::optional<double> action_error;
  bool success = false;

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

struct MetricsLog {
  std::vector<MetricsRow> rows;

  std::int64_t total_supervised_steps() const {
    std::int64_t n = 0;
    for (const auto& r : rows) n += r.supervised_steps;
    return n;
  }
  bool any_success() const {
    for (const auto& r : rows) {
      if (r.success) return true;
    }
    return false;
  }
  std::vector<double> column_supervised() const {
    std::vector<double> out;
    for (const auto& r : rows) out.push_back(double(r.supervised_steps));
    return out;
  }

  friend bool operator==(const MetricsLog&, const MetricsLog&) = default;
};

inline constexpr const char* kMetricsHeader =
    "episode,steps,supervised_steps,episode_return,avg_abs_angular_acc,action_error,success";

inline std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_metrics_csv(const MetricsLog& log, std::ostream& out) {
  out << kMetricsHeader << '\n';
  for (const auto& r : log.rows) {
    out << r.episode << ',' << r.steps << ',' << r.supervised_steps << ',' << format_real(r.episode_return) << ','
        << format_real(r.avg_abs_angular_acc) << ',' << (r.action_error ? format_real(*r.action_error) : "") << ','
        << (r.success ? 1 : 0) << '\n';
  }
}

inline void save_metrics_csv(const MetricsLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  write_metrics_csv(log, out);
}

inline MetricsLog read_metrics_csv(std::istream& in, const std::string& name = "metrics") {
  MetricsLog log;
  std::string line;
  if (!std::getline(in, line) || line != kMetricsHeader) {
    throw Error(ErrorCode::ParseError, name + ":1: unexpected header");
  }
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() == 6 && line.back() == ',') f.emplace_back();
    if (f.size() != 7) throw Error(ErrorCode::ParseError, name + ":" + std::to_string(line_no) + ": expected 7 fields");
    try {
      MetricsRow r;
      r.episode = std::stoll(f[0]);
      r.steps = std::stoll(f[1]);
      r.supervised_steps = std::stoll(f[2]);
      r.episode_return = std::stod(f[3]);
      r.avg_abs_angular_acc = std::stod(f[4]);
      if (!f[5].empty()) r.action_error = std::stod(f[5]);
      if (f[6] != "0" && f[6] != "1") throw std::invalid_argument("success");
      r.success = f[6] == "1";
      log.rows.push_back(r);
    } catch (const std::exception&) {
      throw Error(ErrorCode::ParseError, name + ":" + std::to_string(line_no) + ": bad field");
    }
  }
  return log;
}

inline MetricsLog load_metrics_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path);
  return read_metrics_csv(in, path);
}

/// Mean of |w_t - w_{t-1}| over the T-1 successive differences.
inline double angular_acceleration_metric(const std::vector<double>& omega) {
  if (omega.size() < 2) throw Error(ErrorCode::TooShort, "need at least two angular commands");
  double s = 0.0;
  for (std::size_t t = 1; t < omega.size(); ++t) s += std::abs(omega[t] - omega[t - 1]);
  return s / static_cast<double>(omega.size() - 1);
}

/// sqrt(mean_t |(agent_t - label_t) / (2 a_max)|^2)
inline double action_error_metric(const std::vector<std::vector<double>>& agent,
                                  const std::vector<std::vector<double>>& labels, const std::vector<double>& a_max) {
  if (agent.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "agent/label sequences differ in length");
  if (agent.empty()) throw Error(ErrorCode::LengthMismatch, "no paired actions");
  double s = 0.0;
  for (std::size_t t = 0; t < agent.size(); ++t) {
    if (agent[t].size() != a_max.size() || labels[t].size() != a_max.size()) {
      throw Error(ErrorCode::LengthMismatch, "action width differs from a_max");
    }
    for (std::size_t c = 0; c < a_max.size(); ++c) {
      const double d = (agent[t][c] - labels[t][c]) / (2.0 * a_max[c]);
      s += d * d;
    }
  }
  return std::sqrt(s / static_cast<double>(agent.size()));
}

/// Trailing moving average with partial windows at the start.
inline std::vector<double> moving_average(const std::vector<double>& series, int n) {
  if (n < 1) throw Error(ErrorCode::InvalidWindow, "window must be >= 1");
  std::vector<double> out;
  out.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    const std::size_t w = std::min(i + 1, static_cast<std::size_t>(n));
    double sum = 0.0;
    for (std::size_t k = i + 1 - w; k <= i; ++k) sum += series[k];
    out.push_back(sum / static_cast<double>(w));
  }
  return out;
}

}  // namespace reil::harness
