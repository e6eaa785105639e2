#include "gfn/graddiag/true_flows.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gfn/error.hpp"
#include "gfn/evalsuite/target.hpp"

namespace gfn {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

void require_enumerable(const Environment& env) {
  if (!env.enumerable()) throw EnumerationRefused("true flows: environment " + env.signature() + " is not enumerable");
}

}  // namespace

StateFlows true_forward_flow(const ParamSet& params) {
  const Environment& env = params.environment();
  require_enumerable(env);
  const auto states = env.enumerate_states();
  const StateOutputs out = params.evaluate(states);
  StateFlows f;
  f.log_z = exact_target(env).log_z;
  f.log_flow.assign(env.state_count(), kNegInf);
  f.log_flow[env.state_index(env.initial_state())] = f.log_z;
  for (std::size_t r = 0; r < states.size(); ++r) {
    const State& s = states[r];
    if (s.terminal) continue;
    const double from = f.log_flow[env.state_index(s)];
    for (std::size_t a : env.forward_actions(s)) {
      double& to = f.log_flow[env.state_index(env.apply(s, a))];
      to = log_add(to, from + out.log_pf.at(r, a));
    }
  }
  return f;
}

StateFlows true_backward_flow(const ParamSet& params) {
  const Environment& env = params.environment();
  require_enumerable(env);
  if (params.kind() == ParamKind::EdgeFlow) throw ContractViolation("true flows: edge flows have no backward policy");
  const auto states = env.enumerate_states();
  const StateOutputs out = params.evaluate(states);
  StateFlows f;
  f.log_flow.assign(env.state_count(), kNegInf);
  for (std::size_t r = states.size(); r-- > 0;) {
    const State& t = states[r];
    double& ft = f.log_flow[env.state_index(t)];
    if (t.terminal) ft = env.log_reward(t);
    if (env.is_initial(t)) continue;
    // Every child of a parent precedes it in reverse topological order, so
    // F^B(t) is final here and can be pushed to t's parents.
    for (std::size_t a : env.backward_actions(t)) {
      double& fs = f.log_flow[env.state_index(env.undo(t, a))];
      fs = log_add(fs, ft + out.log_pb.at(r, a));
    }
  }
  f.log_z = f.log_flow[env.state_index(env.initial_state())];
  return f;
}

}  // namespace gfn
