#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gfn/params/quantities.hpp"

namespace gfn {

enum class ObjectiveKind { FM, DB, TB, SubTB };
enum class NormalizationScope { PerBatch, PerTrajectory };

const char* objective_name(ObjectiveKind kind) noexcept;
ObjectiveKind parse_objective(const std::string& name);
const char* scope_name(NormalizationScope scope) noexcept;
NormalizationScope parse_scope(const std::string& name);

struct SubTBConfig {
  double lambda = 0.9;
  std::optional<std::size_t> max_length;  // L_max; unbounded when empty
  NormalizationScope scope = NormalizationScope::PerBatch;

  void validate() const;
};

struct ObjectiveConfig {
  ObjectiveKind kind = ObjectiveKind::SubTB;
  SubTBConfig subtb;
  double fm_epsilon = 0.0;

  void validate() const;
};

// delta_i = log F(s_i) + log P_F(s_{i+1}|s_i) - log F(s_{i+1}) - log P_B(s_i|s_{i+1})
double db_residual(const TransitionQuantities& tq, std::size_t i);
// Prefix sums D_m = sum_{t<m} delta_t, m = 0..n.
std::vector<double> residual_prefix(const TransitionQuantities& tq);
// (D_j - D_i)^2, the squared log-ratio of the balance condition over s_i..s_j.
double subtb_loss_single(const TransitionQuantities& tq, std::size_t i, std::size_t j);
// Number of (i, j) pairs with 0 <= i < j <= n and j - i <= max_length.
std::size_t subtrajectory_count(std::size_t n, std::optional<std::size_t> max_length = std::nullopt);
// lambda^{j-i}-weighted combination, normalized per batch or per trajectory.
double subtb_loss_combined(std::span<const TransitionQuantities> batch, const SubTBConfig& config);
// (log Z + sum log P_F - log R(s_n) - sum log P_B)^2
double tb_loss(const TransitionQuantities& tq, double log_z);
double db_loss_mean(std::span<const TransitionQuantities> batch);
// Mean TB loss with log Z read from the tied initial-state flow.
double tb_loss_mean(std::span<const TransitionQuantities> batch);
// (log[(sum in + eps) / (sum out + eps)])^2 over linear-domain flows.
double fm_loss(std::span<const double> inflows, std::span<const double> outflows, double eps);

// A batch loss and its gradient with respect to every trajectory's quantities.
struct QuantityLoss {
  double loss = 0.0;
  std::vector<QuantityGradient> grads;
};

// Supports DB, TB and SubTB (FM works on edge flows, see objective_gradient).
QuantityLoss quantity_loss(std::span<const TransitionQuantities> batch, const ObjectiveConfig& config);

}  // namespace gfn
