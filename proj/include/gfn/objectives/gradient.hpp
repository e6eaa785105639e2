#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gfn/envcore/trajectory.hpp"
#include "gfn/objectives/losses.hpp"
#include "gfn/params/paramset.hpp"

namespace gfn {

struct GradientResult {
  double loss = 0.0;
  std::size_t distinct_states = 0;  // rows fed through the parameterization
};

// Zeroes every parameter gradient, then accumulates the gradient of the batch
// loss. DB and FM average over transitions / matched states, TB over
// trajectories, SubTB per its normalization scope. Terminal flows carry no
// gradient. Throws NonFiniteError naming the offending trajectory.
GradientResult objective_gradient(ParamSet& params, std::span<const Trajectory> batch, const ObjectiveConfig& config);

// Flow-matching batch loss over edge flows: for every non-initial state of
// every trajectory, (log inflow - log outflow)^2 for interior states and
// (log inflow - log R)^2 for the terminal state, averaged over those states.
double fm_batch_loss(const ParamSet& params, std::span<const Trajectory> batch, double eps);

// Concatenation of every parameter's gradient, in parameters() order.
std::vector<double> gradient_vector(const ParamSet& params);

}  // namespace gfn
