#pragma once

#include <cstddef>
#include <vector>

#include "gfn/envcore/environment.hpp"

namespace gfn {

// States s_m ... s_n with the forward action taken between each pair.
struct Trajectory {
  std::vector<State> states;
  std::vector<std::size_t> actions;  // actions[i] leads states[i] -> states[i+1]
  bool complete = false;

  std::size_t length() const noexcept { return actions.size(); }
  const State& terminal_state() const { return states.back(); }
};

// Rebuilds actions from states and checks every transition; sets `complete`.
Trajectory make_trajectory(const Environment& env, std::vector<State> states);

// Throws ContractViolation when the trajectory is not a valid action sequence
// or its completeness flag is wrong.
void validate(const Environment& env, const Trajectory& trajectory);

// Sub-trajectory tau_{i:j}.
Trajectory slice(const Trajectory& trajectory, std::size_t i, std::size_t j);

}  // namespace gfn
