#include "gfn/evalsuite/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "gfn/error.hpp"

namespace gfn {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// Runs the forward DP over `nodes` (topologically sorted, closed under
// parents of every node except s_0) and returns log reach per node.
std::unordered_map<State, double, StateHash> forward_dp(const ParamSet& params, const std::vector<State>& nodes) {
  const Environment& env = params.environment();
  std::vector<State> inner;
  for (const State& s : nodes) {
    if (!s.terminal) inner.push_back(s);
  }
  std::unordered_map<State, double, StateHash> reach;
  for (const State& s : nodes) reach.emplace(s, kNegInf);
  reach[env.initial_state()] = 0.0;
  if (inner.empty()) return reach;
  const StateOutputs out = params.evaluate(inner);
  for (std::size_t r = 0; r < inner.size(); ++r) {
    const double from = reach.at(inner[r]);
    if (from == kNegInf) continue;
    for (std::size_t a : env.forward_actions(inner[r])) {
      const auto it = reach.find(env.apply(inner[r], a));
      if (it == reach.end()) continue;
      it->second = log_add(it->second, from + out.log_pf.at(r, a));
    }
  }
  return reach;
}

std::vector<State> ancestors(const Environment& env, std::span<const State> xs) {
  std::unordered_map<State, char, StateHash> seen;
  std::vector<State> stack, out;
  for (const State& x : xs) {
    if (seen.emplace(x, 1).second) stack.push_back(x);
  }
  while (!stack.empty()) {
    State s = std::move(stack.back());
    stack.pop_back();
    if (!env.is_initial(s)) {
      for (State& p : env.parents(s)) {
        if (seen.emplace(p, 1).second) stack.push_back(std::move(p));
      }
    }
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(), [&](const State& a, const State& b) {
    return env.topological_rank(a) < env.topological_rank(b);
  });
  return out;
}

}  // namespace

MarginalLogLik marginal_loglik(const ParamSet& params, const State& x) {
  if (!x.terminal) throw ContractViolation("marginal_loglik: " + to_string(x) + " is not terminal");
  const double v = marginal_logliks(params, std::span<const State>(&x, 1))[0];
  return {v, v != kNegInf};
}

std::vector<double> marginal_logliks(const ParamSet& params, std::span<const State> xs) {
  const Environment& env = params.environment();
  for (const State& x : xs) {
    if (!x.terminal) throw ContractViolation("marginal_loglik: " + to_string(x) + " is not terminal");
  }
  const auto reach = forward_dp(params, ancestors(env, xs));
  std::vector<double> out;
  out.reserve(xs.size());
  for (const State& x : xs) out.push_back(reach.at(x));
  return out;
}

std::vector<double> terminal_log_probabilities(const ParamSet& params) {
  const Environment& env = params.environment();
  if (!env.enumerable()) throw EnumerationRefused("marginals: environment " + env.signature() + " is not enumerable");
  const auto reach = forward_dp(params, env.enumerate_states());
  std::vector<double> out;
  for (const State& x : env.enumerate_terminal_states()) out.push_back(reach.at(x));
  return out;
}

}  // namespace gfn
