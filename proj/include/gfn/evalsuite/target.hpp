#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "gfn/envcore/environment.hpp"

namespace gfn {

// p*(x) = R(x) / Z over every terminal state of an enumerable environment.
struct TargetDistribution {
  std::vector<State> states;        // enumeration order
  std::vector<double> probability;  // parallel to states
  std::vector<double> log_reward;   // parallel to states
  double log_z = 0.0;               // log sum_x R(x)
  std::unordered_map<State, std::size_t, StateHash> index;

  std::optional<std::size_t> find(const State& x) const;
};

// Throws EnumerationRefused for non-enumerable environments.
TargetDistribution exact_target(const Environment& env);

// Terminal states for correlation metrics. Enumerable environments with at
// most `size` terminal states use all of them; otherwise a seeded sample of
// `size` states stratified by reward level. For bit sequences each entry is a
// random mode with a uniformly drawn number of distinct flipped bits, which
// spreads the set over every reward level.
std::vector<State> correlation_test_set(const Environment& env, std::size_t size, std::uint64_t seed);

}  // namespace gfn
