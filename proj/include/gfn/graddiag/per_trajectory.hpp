#pragma once

#include <span>
#include <string>
#include <vector>

#include "gfn/envcore/trajectory.hpp"
#include "gfn/graddiag/similarity.hpp"
#include "gfn/objectives/losses.hpp"
#include "gfn/params/paramset.hpp"

namespace gfn {

enum class FlowSource { Learned, TrueForward, TrueBackward };

const char* flow_source_name(FlowSource source) noexcept;
FlowSource parse_flow_source(const std::string& name);

// The policy-logit gradient coordinates of a tabular ParamSet: forward
// logits, then backward logits when P_B is learned.
GradVector policy_gradient(const TabularParams& params);

// One gradient per trajectory, scaled so that their mean is exactly the
// gradient of the batch loss. Non-terminal flows (s_0 included) are replaced
// by the true forward or backward flows when requested; replaced flows are
// constants. Refuses non-tabular parameters.
std::vector<GradVector> substituted_gradients(ParamSet& params, std::span<const Trajectory> batch,
                                              const ObjectiveConfig& objective, FlowSource source);

inline std::vector<GradVector> per_trajectory_grads(ParamSet& params, std::span<const Trajectory> batch,
                                                    const ObjectiveConfig& objective) {
  return substituted_gradients(params, batch, objective, FlowSource::Learned);
}

// Sub-batch gradients of `small` against the full-batch TB gradient.
double cross_objective_similarity(ParamSet& params, std::span<const Trajectory> batch, const ObjectiveConfig& small,
                                  std::size_t k, FlowSource source = FlowSource::Learned);

}  // namespace gfn
