#include "gfn/evalsuite/target.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "gfn/envcore/bitseq.hpp"
#include "gfn/error.hpp"
#include "gfn/sampler/rng.hpp"

namespace gfn {

std::optional<std::size_t> TargetDistribution::find(const State& x) const {
  const auto it = index.find(x);
  if (it == index.end()) return std::nullopt;
  return it->second;
}

TargetDistribution exact_target(const Environment& env) {
  TargetDistribution t;
  t.states = env.enumerate_terminal_states();
  t.log_reward.reserve(t.states.size());
  double mx = -std::numeric_limits<double>::infinity();
  for (const State& x : t.states) {
    t.log_reward.push_back(env.log_reward(x));
    mx = std::max(mx, t.log_reward.back());
  }
  double acc = 0.0;
  for (double lr : t.log_reward) acc += std::exp(lr - mx);
  t.log_z = mx + std::log(acc);
  t.probability.reserve(t.states.size());
  for (std::size_t i = 0; i < t.states.size(); ++i) {
    t.probability.push_back(std::exp(t.log_reward[i] - t.log_z));
    t.index.emplace(t.states[i], i);
  }
  return t;
}

namespace {

std::vector<State> stratified(const Environment& env, std::size_t size, std::uint64_t seed) {
  // Reward levels, lowest first; each level is shuffled, then levels are
  // drawn round-robin until the set is full.
  std::map<double, std::vector<State>> levels;
  for (const State& x : env.enumerate_terminal_states()) levels[env.log_reward(x)].push_back(x);
  CounterRng rng(seed, 0);
  std::vector<std::vector<State>> pools;
  for (auto& [lr, xs] : levels) {
    for (std::size_t i = xs.size(); i > 1; --i) std::swap(xs[i - 1], xs[rng.below(i)]);
    pools.push_back(std::move(xs));
  }
  std::vector<State> out;
  std::vector<std::size_t> next(pools.size(), 0);
  while (out.size() < size) {
    for (std::size_t l = 0; l < pools.size() && out.size() < size; ++l) {
      if (next[l] < pools[l].size()) out.push_back(pools[l][next[l]++]);
    }
  }
  return out;
}

std::vector<State> mutated_modes(const BitSequence& env, std::size_t size, std::uint64_t seed) {
  CounterRng rng(seed, 0);
  const int n = env.length();
  std::vector<int> positions(n);
  std::vector<State> out;
  out.reserve(size);
  for (std::size_t k = 0; k < size; ++k) {
    BitSequence::Bits bits = env.modes()[rng.below(env.modes().size())];
    const std::size_t flips = rng.below(static_cast<std::uint64_t>(n / 2) + 1);
    std::iota(positions.begin(), positions.end(), 0);
    for (std::size_t f = 0; f < flips; ++f) {
      std::swap(positions[f], positions[f + rng.below(n - f)]);
      const int p = positions[f];
      bits[p / 64] ^= std::uint64_t{1} << (p % 64);
    }
    out.push_back(env.from_bits(bits));
  }
  return out;
}

}  // namespace

std::vector<State> correlation_test_set(const Environment& env, std::size_t size, std::uint64_t seed) {
  if (size == 0) throw ContractViolation("test set: size must be positive");
  if (env.enumerable()) {
    auto all = env.enumerate_terminal_states();
    if (all.size() <= size) return all;
    return stratified(env, size, seed);
  }
  if (const auto* bs = dynamic_cast<const BitSequence*>(&env)) return mutated_modes(*bs, size, seed);
  throw EnumerationRefused("test set: environment " + env.signature() + " is neither enumerable nor a bit sequence");
}

}  // namespace gfn
