#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "gfn/envcore/trajectory.hpp"
#include "gfn/params/paramset.hpp"
#include "gfn/sampler/rng.hpp"

namespace gfn {

struct ExplorationConfig {
  double epsilon = 0.0;      // weight on the uniform distribution over valid children
  double temperature = 1.0;  // P_F logits are divided by this before mixing
  std::uint64_t seed = 0;

  void validate() const;
};

// Step distribution over actions: (1 - eps) softmax(log_pf / T) + eps / #valid.
// Entries off the valid actions are zero. Throws NonFiniteError naming `s`
// when the policy row is not finite.
std::vector<double> step_distribution(const Environment& env, const State& s, std::span<const double> log_pf_row,
                                      const ExplorationConfig& exploration);

// One complete trajectory from s_0.
Trajectory sample_trajectory(const ParamSet& params, const ExplorationConfig& exploration, CounterRng& rng);

// batch_size independent complete trajectories. All trajectories advance one
// step per policy evaluation; each consumes one uniform draw per step, in
// batch order.
std::vector<Trajectory> sample_batch(const ParamSet& params, const ExplorationConfig& exploration,
                                     std::size_t batch_size, CounterRng& rng);

// The batch for training iteration `batch_index`: stream `batch_index` of the
// exploration seed.
std::vector<Trajectory> sample_batch(const ParamSet& params, const ExplorationConfig& exploration,
                                     std::size_t batch_size, std::uint64_t batch_index);

// Exact log-probability that the sampler produces `trajectory`.
double sampling_log_probability(const ParamSet& params, const ExplorationConfig& exploration,
                                const Trajectory& trajectory);

}  // namespace gfn
