#pragma once

#include <vector>

#include "gfn/params/paramset.hpp"

namespace gfn {

// Log state flows indexed by Environment::state_index.
struct StateFlows {
  std::vector<double> log_flow;
  double log_z = 0.0;  // log sum_x R(x)

  double at(const Environment& env, const State& s) const { return log_flow[env.state_index(s)]; }
};

// F^F(s_0) = Z; F^F(t) = sum_{s in parents(t)} F^F(s) P_F(t|s), with Z the
// exact partition function.
StateFlows true_forward_flow(const ParamSet& params);

// F^B(x) = R(x) at terminals; F^B(s) = sum_{t in children(s)} F^B(t) P_B(s|t).
StateFlows true_backward_flow(const ParamSet& params);

}  // namespace gfn
