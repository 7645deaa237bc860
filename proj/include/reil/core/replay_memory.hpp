#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "reil/core/types.hpp"
#include "reil/error.hpp"

namespace reil {

struct SampledTransition {
  Transition transition;
  // Absent for the final transition of an episode (its omega_mix is 1).
  std::optional<Transition> successor;
};

/// Contiguous run of memory slots belonging to one episode.
struct EpisodeSpan {
  std::size_t begin = 0;
  std::size_t length = 0;
};

/// FIFO replay memory over finalized transitions.
///
/// A transition is sampleable once its successor is stored or once it is
/// flagged as bootstrap-terminal; only the most recently pushed slot of a
/// running episode can fail that test.
class ReplayMemory {
 public:
  explicit ReplayMemory(std::size_t capacity = 1'000'000, std::uint64_t rng_seed = 0)
      : capacity_(capacity), rng_seed_(rng_seed), rng_(rng_seed) {
    if (capacity == 0) throw Error(ErrorCode::InvalidCapacity, "replay capacity must be positive");
  }

  std::size_t capacity() const { return capacity_; }
  std::uint64_t rng_seed() const { return rng_seed_; }
  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const Transition& operator[](std::size_t i) const { return items_[i]; }
  const std::deque<Transition>& transitions() const { return items_; }

  void reseed(std::uint64_t seed) {
    rng_seed_ = seed;
    rng_.seed(seed);
  }

  void push(Transition t) {
    if (!t.flags) throw Error(ErrorCode::FlagsUnset, "only finalized transitions can be stored");
    if (t.f_demo == 1) supervised_ids_.push_back(next_id_);
    items_.push_back(std::move(t));
    ++next_id_;
    while (items_.size() > capacity_) {
      items_.pop_front();
      ++front_id_;
      while (!supervised_ids_.empty() && supervised_ids_.front() < front_id_) supervised_ids_.pop_front();
    }
  }

  void push_episode(const Episode& episode) {
    for (const auto& t : episode.transitions) push(t);
  }

  bool has_successor(std::size_t i) const {
    if (i + 1 >= items_.size()) return false;
    const auto& a = items_[i];
    const auto& b = items_[i + 1];
    return a.episode_id == b.episode_id && b.step_index == a.step_index + 1;
  }

  std::size_t sampleable_count() const {
    if (items_.empty()) return 0;
    const auto& last = items_.back();
    return (last.flags && last.flags->mix == 1) ? items_.size() : items_.size() - 1;
  }

  std::size_t supervised_count() const { return supervised_ids_.size(); }

  SampledTransition sample_at(std::size_t i) const {
    SampledTransition s{items_[i], std::nullopt};
    if (has_successor(i)) s.successor = items_[i + 1];
    return s;
  }

  /// Uniform sample with replacement over sampleable transitions.
  std::vector<SampledTransition> sample(std::size_t batch_size) {
    const std::size_t n = sampleable_count();
    if (n == 0) throw Error(ErrorCode::EmptyBatch, "replay memory has no sampleable transitions");
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<SampledTransition> out;
    out.reserve(batch_size);
    for (std::size_t k = 0; k < batch_size; ++k) out.push_back(sample_at(pick(rng_)));
    return out;
  }

  /// Uniform sample restricted to supervisor-generated transitions.
  std::vector<SampledTransition> sample_supervised(std::size_t batch_size) {
    const std::size_t limit = sampleable_count();
    std::size_t n = supervised_ids_.size();
    while (n > 0 && supervised_ids_[n - 1] - front_id_ >= limit) --n;
    if (n == 0) throw Error(ErrorCode::NoSupervisorData, "no supervisor transitions in memory");
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<SampledTransition> out;
    out.reserve(batch_size);
    for (std::size_t k = 0; k < batch_size; ++k) {
      out.push_back(sample_at(static_cast<std::size_t>(supervised_ids_[pick(rng_)] - front_id_)));
    }
    return out;
  }

  /// Episode boundaries of the stored (possibly partially evicted) data.
  std::vector<EpisodeSpan> episode_spans() const {
    std::vector<EpisodeSpan> spans;
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (i == 0 || !has_successor(i - 1)) spans.push_back({i, 0});
      ++spans.back().length;
    }
    return spans;
  }

  std::mt19937_64& rng() { return rng_; }

 private:
  std::size_t capacity_;
  std::uint64_t rng_seed_;
  std::mt19937_64 rng_;
  std::deque<Transition> items_;
  std::deque<std::uint64_t> supervised_ids_;
  std::uint64_t front_id_ = 0;
  std::uint64_t next_id_ = 0;
};

}  // namespace reil
