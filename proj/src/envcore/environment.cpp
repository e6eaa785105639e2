#include "gfn/envcore/environment.hpp"

#include <algorithm>
#include <cmath>

#include "gfn/error.hpp"

namespace gfn {

std::size_t Environment::action_between(const State& s, const State& t) const {
  if (s.terminal) throw ContractViolation("action_between: source " + to_string(s) + " is terminal");
  for (std::size_t a : forward_actions(s)) {
    if (apply(s, a) == t) return a;
  }
  throw ContractViolation("invalid transition " + to_string(s) + " -> " + to_string(t));
}

std::vector<State> Environment::children(const State& s) const {
  if (s.terminal) throw ContractViolation("children: state " + to_string(s) + " is terminal");
  std::vector<State> out;
  for (std::size_t a : forward_actions(s)) out.push_back(apply(s, a));
  return out;
}

std::vector<State> Environment::parents(const State& t) const {
  if (is_initial(t)) throw ContractViolation("parents: initial state has no parents");
  std::vector<State> out;
  for (std::size_t a : backward_actions(t)) out.push_back(undo(t, a));
  return out;
}

double Environment::reward(const State& x) const { return std::exp(log_reward(x)); }

std::vector<double> Environment::encode(const State& s) const {
  std::vector<double> out(feature_width(), 0.0);
  encode(s, out);
  return out;
}

void Environment::validate_transition(const State& s, const State& t) const {
  (void)action_between(s, t);
}

}  // namespace gfn
