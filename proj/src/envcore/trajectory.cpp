#include "gfn/envcore/trajectory.hpp"

#include "gfn/error.hpp"

namespace gfn {

Trajectory make_trajectory(const Environment& env, std::vector<State> states) {
  if (states.empty()) throw ContractViolation("trajectory: needs at least one state");
  Trajectory t;
  t.actions.reserve(states.size() - 1);
  for (std::size_t i = 0; i + 1 < states.size(); ++i) {
    t.actions.push_back(env.action_between(states[i], states[i + 1]));
  }
  t.complete = env.is_initial(states.front()) && states.back().terminal;
  t.states = std::move(states);
  return t;
}

void validate(const Environment& env, const Trajectory& trajectory) {
  const auto& s = trajectory.states;
  if (s.empty()) throw ContractViolation("trajectory: empty");
  if (trajectory.actions.size() + 1 != s.size())
    throw ContractViolation("trajectory: action count does not match state count");
  for (std::size_t i = 0; i + 1 < s.size(); ++i) {
    if (env.apply(s[i], trajectory.actions[i]) != s[i + 1])
      throw ContractViolation("trajectory: invalid step " + to_string(s[i]) + " -> " + to_string(s[i + 1]));
  }
  const bool complete = env.is_initial(s.front()) && s.back().terminal;
  if (complete != trajectory.complete) throw ContractViolation("trajectory: wrong completeness flag");
}

Trajectory slice(const Trajectory& trajectory, std::size_t i, std::size_t j) {
  if (!(i < j && j < trajectory.states.size()))
    throw ContractViolation("trajectory: slice needs 0 <= i < j <= n");
  Trajectory out;
  out.states.assign(trajectory.states.begin() + static_cast<std::ptrdiff_t>(i),
                    trajectory.states.begin() + static_cast<std::ptrdiff_t>(j) + 1);
  out.actions.assign(trajectory.actions.begin() + static_cast<std::ptrdiff_t>(i),
                     trajectory.actions.begin() + static_cast<std::ptrdiff_t>(j));
  out.complete = trajectory.complete && i == 0 && j + 1 == trajectory.states.size();
  return out;
}

}  // namespace gfn
