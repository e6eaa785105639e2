#pragma once

#include <span>
#include <string>
#include <vector>

#include "gfn/runner/config.hpp"

namespace gfn {

// Learning rates searched per environment and objective.
std::vector<double> sweep_learning_rates();
// SubTB lambda values searched.
std::vector<double> sweep_lambdas();

struct SweepPoint {
  std::string name;  // "lr<lr>" or "lr<lr>_lambda<lambda>"
  ExperimentConfig config;
};

// The grid over `lrs` (and `lambdas` for SubTB objectives) around `base`.
// Each point writes into <base.output_dir>/<name>.
std::vector<SweepPoint> expand_sweep(const ExperimentConfig& base, std::span<const double> lrs,
                                     std::span<const double> lambdas);

}  // namespace gfn
