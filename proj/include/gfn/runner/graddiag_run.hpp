#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "gfn/graddiag/similarity.hpp"
#include "gfn/runner/config.hpp"

namespace gfn {

// Curves keyed by pair name: "<objective>_self" compares sub-batch means with
// the objective's own full-batch mean, "<objective>_vs_tb" with the TB mean.
// Non-learned flow sources append "_<source>". An undefined cosine leaves a
// NaN entry.
struct GraddiagResult {
  std::map<std::string, std::vector<SimilarityCurve>> curves;
};

// Mean cosine for k = 0..K where any undefined cosine makes the entry NaN.
std::vector<double> similarity_values(std::span<const GradVector> grads, std::span<const double> reference);

// Trains for diagnostics.training_batches iterations and, every
// diagnostics.interval iterations (iteration 0 included), draws
// 2^diagnostics.batch_log2 trajectories from stream <iteration> of
// diagnostics.seed and records the similarity curves. Writes
// similarity_<pair>.csv and run.json into config.output_dir.
GraddiagResult run_graddiag(const ExperimentConfig& config);

}  // namespace gfn
