#pragma once

// Brute-force oracles over every complete trajectory of a small environment,
// for checking the dynamic programs in evalsuite and graddiag.

#include <algorithm>
#include <cmath>
#include <unordered_map>
#include <vector>

#include "gfn/evalsuite/marginal.hpp"
#include "gfn/graddiag/true_flows.hpp"
#include "support.hpp"

namespace gfn::test {

struct BruteForce {
  std::unordered_map<State, double, StateHash> terminal_prob;  // sum of P_F(tau) over tau -> x
  std::unordered_map<State, double, StateHash> visit_prob;     // sum of P_F(tau) over tau through s
  std::unordered_map<State, double, StateHash> backward_flow;  // sum of R(x) P_B(tau|x) over tau through s
};

inline BruteForce brute_force(const ParamSet& params, bool with_backward = true) {
  const Environment& env = params.environment();
  BruteForce b;
  for (const Trajectory& t : all_trajectories(env)) {
    const double pf = forward_probability(params, t);
    const double rb = with_backward ? std::exp(env.log_reward(t.terminal_state())) * backward_probability(params, t) : 0.0;
    b.terminal_prob[t.terminal_state()] += pf;
    for (const State& s : t.states) {
      b.visit_prob[s] += pf;
      b.backward_flow[s] += rb;
    }
  }
  return b;
}

// Relative error of exp(a) against exp(b).
inline double log_abs_err(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(std::expm1(a - b));
}

// Worst relative error of p_dp(x) against p_brute(x) over `policies` random tabular
// policies (terminal_log_probabilities and the single-state DP both).
inline double dp_oracle_error(const std::shared_ptr<const Environment>& env, std::size_t policies, std::uint64_t seed) {
  TabularParams p(env, BackwardPolicy::Learned);
  const auto terminals = env->enumerate_terminal_states();
  double worst = 0.0;
  for (std::size_t k = 0; k < policies; ++k) {
    randomize(p, seed * 7919 + k, 1.5);
    const BruteForce b = brute_force(p, false);
    const auto all = terminal_log_probabilities(p);
    const auto listed = marginal_logliks(p, terminals);
    for (std::size_t i = 0; i < terminals.size(); ++i) {
      const double ref = std::log(b.terminal_prob.at(terminals[i]));
      worst = std::max({worst, log_abs_err(all[i], ref), log_abs_err(listed[i], ref)});
    }
  }
  return worst;
}

// Worst relative error of F^F and F^B against trajectory sums, over every
// state and `policies` random tabular policies.
inline double flow_oracle_error(const std::shared_ptr<const Environment>& env, std::size_t policies, std::uint64_t seed) {
  TabularParams p(env, BackwardPolicy::Learned);
  double worst = 0.0;
  for (std::size_t k = 0; k < policies; ++k) {
    randomize(p, seed * 104729 + k, 1.5);
    const BruteForce b = brute_force(p);
    const StateFlows ff = true_forward_flow(p);
    const StateFlows fb = true_backward_flow(p);
    double z = 0.0;
    for (const State& x : env->enumerate_terminal_states()) z += std::exp(env->log_reward(x));
    worst = std::max({worst, log_abs_err(ff.log_z, std::log(z)), log_abs_err(fb.log_z, std::log(z))});
    for (const State& s : env->enumerate_states()) {
      worst = std::max(worst, log_abs_err(ff.at(*env, s), std::log(z * b.visit_prob.at(s))));
      worst = std::max(worst, log_abs_err(fb.at(*env, s), std::log(b.backward_flow.at(s))));
    }
  }
  return worst;
}

}  // namespace gfn::test
