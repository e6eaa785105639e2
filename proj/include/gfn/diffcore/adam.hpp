#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <vector>

#include "gfn/diffcore/tape.hpp"

namespace gfn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  // Learning rate of group g is lr * group_multipliers[g] (default 1).
  std::map<int, double> group_multipliers;

  double lr_for_group(int group) const;
};

struct AdamState {
  std::vector<std::vector<double>> first_moment;   // one per parameter
  std::vector<std::vector<double>> second_moment;
  std::uint64_t step = 0;
  std::uint64_t skipped = 0;
};

// Adam with bias correction over a fixed list of parameters. A step whose
// gradients contain a non-finite entry is skipped entirely and counted.
class Adam {
 public:
  Adam(AdamConfig config, std::span<Parameter* const> params);

  const AdamConfig& config() const noexcept { return config_; }
  const AdamState& state() const noexcept { return state_; }
  void restore(AdamState state);

  // Applies one update from the parameters' accumulated gradients.
  // Returns false (and leaves everything untouched) on non-finite gradients.
  bool step();

  void zero_grad();

 private:
  AdamConfig config_;
  std::vector<Parameter*> params_;
  AdamState state_;
};

}  // namespace gfn
