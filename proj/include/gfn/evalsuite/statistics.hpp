#pragma once

#include <span>
#include <vector>

namespace gfn {

// 1-based ranks; ties share the average of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Both throw UndefinedStatistic on a constant input and ContractViolation on
// mismatched or too-short inputs.
double pearson(std::span<const double> a, std::span<const double> b);
double spearman(std::span<const double> a, std::span<const double> b);

// Pearson correlation of paired log-probabilities and log-rewards.
inline double pearson_loglog(std::span<const double> log_probs, std::span<const double> log_rewards) {
  return pearson(log_probs, log_rewards);
}

}  // namespace gfn
