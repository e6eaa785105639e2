#pragma once

#include <span>
#include <vector>

#include "gfn/params/paramset.hpp"

namespace gfn {

struct MarginalLogLik {
  double value = 0.0;      // log sum_{tau -> x} P_F(tau); -inf when unreachable
  bool reachable = true;
};

// Forward DP over the ancestors of x in topological order, in the log domain:
// reach(s_0) = 1, reach(t) = sum_{s in parents(t)} reach(s) P_F(t|s).
MarginalLogLik marginal_loglik(const ParamSet& params, const State& x);

// log p_theta(x) for every terminal state of an enumerable environment, in
// enumerate_terminal_states() order; one DP over the whole DAG.
std::vector<double> terminal_log_probabilities(const ParamSet& params);

// log p_theta(x) for an arbitrary list of terminal states.
std::vector<double> marginal_logliks(const ParamSet& params, std::span<const State> xs);

}  // namespace gfn
