#include "gfn/evalsuite/history.hpp"

#include <cmath>

#include "gfn/error.hpp"

namespace gfn {

SampleWindow::SampleWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw ConfigError("sample window: capacity must be positive");
}

void SampleWindow::push(const State& x) {
  if (ring_.size() == capacity_) {
    auto it = counts_.find(ring_.front());
    if (--it->second == 0) counts_.erase(it);
    ring_.pop_front();
  }
  ring_.push_back(x);
  ++counts_[x];
}

std::size_t SampleWindow::count(const State& x) const {
  const auto it = counts_.find(x);
  return it == counts_.end() ? 0 : it->second;
}

std::vector<State> SampleWindow::contents() const { return {ring_.begin(), ring_.end()}; }

double empirical_l1(const SampleWindow& window, const TargetDistribution& target) {
  if (window.empty()) throw ContractViolation("empirical_l1: window is empty");
  const double inv = 1.0 / static_cast<double>(window.size());
  double l1 = 0.0;
  for (std::size_t i = 0; i < target.states.size(); ++i)
    l1 += std::abs(static_cast<double>(window.count(target.states[i])) * inv - target.probability[i]);
  for (const auto& [x, c] : window.counts()) {
    if (!target.find(x)) l1 += static_cast<double>(c) * inv;
  }
  return l1;
}

void VisitHistory::record(const Environment& env, const State& x) {
  if (visited_.insert(x).second) {
    for (std::size_t m : env.modes_of(x)) modes_.insert(m);
  }
}

void VisitHistory::clear() {
  visited_.clear();
  modes_.clear();
}

std::size_t modes_discovered(const VisitHistory& history, const Environment& env) {
  std::unordered_set<std::size_t> modes;
  for (const State& x : history.visited()) {
    for (std::size_t m : env.modes_of(x)) modes.insert(m);
  }
  return modes.size();
}

}  // namespace gfn
