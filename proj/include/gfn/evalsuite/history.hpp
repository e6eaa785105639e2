#pragma once

#include <cstddef>
#include <deque>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gfn/envcore/environment.hpp"
#include "gfn/evalsuite/target.hpp"

namespace gfn {

// The last `capacity` terminal states seen, with FIFO eviction and
// incrementally maintained counts.
class SampleWindow {
 public:
  static constexpr std::size_t kDefaultCapacity = 200000;

  explicit SampleWindow(std::size_t capacity = kDefaultCapacity);

  void push(const State& x);
  std::size_t size() const noexcept { return ring_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return ring_.empty(); }
  std::size_t count(const State& x) const;
  // Oldest first.
  std::vector<State> contents() const;
  const std::unordered_map<State, std::size_t, StateHash>& counts() const noexcept { return counts_; }

 private:
  std::size_t capacity_;
  std::deque<State> ring_;
  std::unordered_map<State, std::size_t, StateHash> counts_;
};

// sum_x |p_hat(x) - p*(x)|, without dividing by the number of states.
double empirical_l1(const SampleWindow& window, const TargetDistribution& target);

// Every terminal state visited during training.
class VisitHistory {
 public:
  void record(const Environment& env, const State& x);
  std::size_t distinct_states() const noexcept { return visited_.size(); }
  std::size_t modes_found() const noexcept { return modes_.size(); }
  const std::unordered_set<State, StateHash>& visited() const noexcept { return visited_; }
  const std::unordered_set<std::size_t>& modes() const noexcept { return modes_; }
  void clear();

 private:
  std::unordered_set<State, StateHash> visited_;
  std::unordered_set<std::size_t> modes_;
};

// Distinct modes with at least one visited member.
std::size_t modes_discovered(const VisitHistory& history, const Environment& env);
inline std::size_t distinct_states_visited(const VisitHistory& history) { return history.distinct_states(); }

}  // namespace gfn
