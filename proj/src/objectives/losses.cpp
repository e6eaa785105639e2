#include "gfn/objectives/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gfn/error.hpp"

namespace gfn {
namespace {

void check_index(const TransitionQuantities& tq, std::size_t i, const char* op) {
  tq.check();
  if (i >= tq.length())
    throw ContractViolation(std::string(op) + ": transition " + std::to_string(i) + " out of range for length " +
                            std::to_string(tq.length()));
}

// Pushes a residual gradient g = dL/d(delta_i) onto the quantities.
void add_residual_grad(QuantityGradient& q, std::size_t i, double g) {
  q.log_flow[i] += g;
  q.log_pf[i] += g;
  q.log_flow[i + 1] -= g;
  q.log_pb[i] -= g;
}

std::vector<QuantityGradient> zero_grads(std::span<const TransitionQuantities> batch) {
  std::vector<QuantityGradient> grads;
  grads.reserve(batch.size());
  for (const auto& tq : batch) grads.emplace_back(tq.length());
  return grads;
}

std::size_t effective_max(std::size_t n, std::optional<std::size_t> max_length) {
  return max_length ? std::min(n, *max_length) : n;
}

// Sum over pairs of w(L) for one trajectory, with w(L) = exp(L log(lambda) - shift).
double weight_total(std::size_t n, std::size_t lmax, double log_lambda, double shift) {
  double total = 0.0;
  for (std::size_t len = 1; len <= lmax; ++len)
    total += static_cast<double>(n - len + 1) * std::exp(static_cast<double>(len) * log_lambda - shift);
  return total;
}

double max_log_weight(std::size_t lmax, double log_lambda) {
  return log_lambda >= 0 ? static_cast<double>(lmax) * log_lambda : log_lambda;
}

// Adds sum_{pairs} w(D_j - D_i)^2 * scale to the returned loss and its gradient
// into `q` (when non-null).
double subtb_accumulate(const TransitionQuantities& tq, std::size_t lmax, double log_lambda, double shift,
                        double scale, QuantityGradient* q) {
  const std::vector<double> d = residual_prefix(tq);
  const std::size_t n = tq.length();
  std::vector<double> diff(n + 1, 0.0);
  double loss = 0.0;
  for (std::size_t len = 1; len <= lmax; ++len) {
    const double w = std::exp(static_cast<double>(len) * log_lambda - shift) * scale;
    if (w == 0.0) continue;
    for (std::size_t i = 0; i + len <= n; ++i) {
      const double r = d[i + len] - d[i];
      loss += w * r * r;
      diff[i] += 2.0 * w * r;
      diff[i + len] -= 2.0 * w * r;
    }
  }
  if (q) {
    double run = 0.0;
    for (std::size_t m = 0; m < n; ++m) {
      run += diff[m];
      add_residual_grad(*q, m, run);
    }
  }
  return loss;
}

QuantityLoss subtb(std::span<const TransitionQuantities> batch, const SubTBConfig& config, bool with_grads) {
  config.validate();
  if (batch.empty()) throw ContractViolation("subtb: empty batch");
  QuantityLoss out;
  if (with_grads) out.grads = zero_grads(batch);
  const double log_lambda = std::log(config.lambda);
  if (config.scope == NormalizationScope::PerBatch) {
    double shift = -std::numeric_limits<double>::infinity();
    for (const auto& tq : batch) {
      tq.check();
      const std::size_t lmax = effective_max(tq.length(), config.max_length);
      if (lmax > 0) shift = std::max(shift, max_log_weight(lmax, log_lambda));
    }
    double total = 0.0;
    for (const auto& tq : batch) total += weight_total(tq.length(), effective_max(tq.length(), config.max_length), log_lambda, shift);
    if (!(total > 0)) throw ContractViolation("subtb: batch has no transitions");
    for (std::size_t t = 0; t < batch.size(); ++t) {
      const auto& tq = batch[t];
      out.loss += subtb_accumulate(tq, effective_max(tq.length(), config.max_length), log_lambda, shift, 1.0 / total,
                                   with_grads ? &out.grads[t] : nullptr);
    }
    return out;
  }
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const auto& tq = batch[t];
    tq.check();
    const std::size_t lmax = effective_max(tq.length(), config.max_length);
    if (lmax == 0) throw ContractViolation("subtb: trajectory " + std::to_string(t) + " has no transitions");
    const double shift = max_log_weight(lmax, log_lambda);
    const double total = weight_total(tq.length(), lmax, log_lambda, shift);
    out.loss += subtb_accumulate(tq, lmax, log_lambda, shift, inv_b / total, with_grads ? &out.grads[t] : nullptr);
  }
  return out;
}

QuantityLoss db(std::span<const TransitionQuantities> batch, bool with_grads) {
  if (batch.empty()) throw ContractViolation("db: empty batch");
  std::size_t count = 0;
  for (const auto& tq : batch) {
    tq.check();
    count += tq.length();
  }
  if (count == 0) throw ContractViolation("db: batch has no transitions");
  const double inv = 1.0 / static_cast<double>(count);
  QuantityLoss out;
  if (with_grads) out.grads = zero_grads(batch);
  for (std::size_t t = 0; t < batch.size(); ++t) {
    for (std::size_t i = 0; i < batch[t].length(); ++i) {
      const double delta = db_residual(batch[t], i);
      out.loss += delta * delta * inv;
      if (with_grads) add_residual_grad(out.grads[t], i, 2.0 * delta * inv);
    }
  }
  return out;
}

QuantityLoss tb(std::span<const TransitionQuantities> batch, bool with_grads) {
  if (batch.empty()) throw ContractViolation("tb: empty batch");
  const double inv = 1.0 / static_cast<double>(batch.size());
  QuantityLoss out;
  if (with_grads) out.grads = zero_grads(batch);
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const auto& tq = batch[t];
    tq.check();
    if (!tq.complete) throw ContractViolation("tb: trajectory " + std::to_string(t) + " is not complete");
    const double r = residual_prefix(tq).back();
    out.loss += r * r * inv;
    if (with_grads) {
      for (std::size_t i = 0; i < tq.length(); ++i) add_residual_grad(out.grads[t], i, 2.0 * r * inv);
    }
  }
  return out;
}

}  // namespace

const char* objective_name(ObjectiveKind kind) noexcept {
  switch (kind) {
    case ObjectiveKind::FM:
      return "fm";
    case ObjectiveKind::DB:
      return "db";
    case ObjectiveKind::TB:
      return "tb";
    case ObjectiveKind::SubTB:
      return "subtb";
  }
  return "unknown";
}

ObjectiveKind parse_objective(const std::string& name) {
  if (name == "fm") return ObjectiveKind::FM;
  if (name == "db") return ObjectiveKind::DB;
  if (name == "tb") return ObjectiveKind::TB;
  if (name == "subtb") return ObjectiveKind::SubTB;
  throw ConfigError("unknown objective '" + name + "'");
}

const char* scope_name(NormalizationScope scope) noexcept {
  return scope == NormalizationScope::PerBatch ? "per_batch" : "per_trajectory";
}

NormalizationScope parse_scope(const std::string& name) {
  if (name == "per_batch") return NormalizationScope::PerBatch;
  if (name == "per_trajectory") return NormalizationScope::PerTrajectory;
  throw ConfigError("unknown normalization scope '" + name + "'");
}

void SubTBConfig::validate() const {
  if (!(lambda > 0) || !std::isfinite(lambda)) throw ConfigError("subtb: lambda must be positive and finite");
  if (max_length && *max_length < 1) throw ConfigError("subtb: max subtrajectory length must be at least 1");
}

void ObjectiveConfig::validate() const {
  subtb.validate();
  if (!(fm_epsilon >= 0)) throw ConfigError("fm: epsilon must be nonnegative");
}

double db_residual(const TransitionQuantities& tq, std::size_t i) {
  check_index(tq, i, "db_residual");
  return tq.log_flow[i] + tq.log_pf[i] - tq.log_flow[i + 1] - tq.log_pb[i];
}

std::vector<double> residual_prefix(const TransitionQuantities& tq) {
  tq.check();
  std::vector<double> d(tq.length() + 1, 0.0);
  for (std::size_t i = 0; i < tq.length(); ++i) d[i + 1] = d[i] + db_residual(tq, i);
  return d;
}

double subtb_loss_single(const TransitionQuantities& tq, std::size_t i, std::size_t j) {
  tq.check();
  if (i >= j || j > tq.length())
    throw ContractViolation("subtb_loss_single: need 0 <= i < j <= n, got i=" + std::to_string(i) +
                            " j=" + std::to_string(j));
  const auto d = residual_prefix(tq);
  const double r = d[j] - d[i];
  return r * r;
}

std::size_t subtrajectory_count(std::size_t n, std::optional<std::size_t> max_length) {
  const std::size_t lmax = effective_max(n, max_length);
  std::size_t count = 0;
  for (std::size_t len = 1; len <= lmax; ++len) count += n - len + 1;
  return count;
}

double subtb_loss_combined(std::span<const TransitionQuantities> batch, const SubTBConfig& config) {
  return subtb(batch, config, false).loss;
}

double tb_loss(const TransitionQuantities& tq, double log_z) {
  tq.check();
  if (!tq.complete) throw ContractViolation("tb_loss: trajectory is not complete");
  double r = log_z - tq.log_flow.back();
  for (std::size_t i = 0; i < tq.length(); ++i) r += tq.log_pf[i] - tq.log_pb[i];
  return r * r;
}

double db_loss_mean(std::span<const TransitionQuantities> batch) { return db(batch, false).loss; }

double tb_loss_mean(std::span<const TransitionQuantities> batch) { return tb(batch, false).loss; }

double fm_loss(std::span<const double> inflows, std::span<const double> outflows, double eps) {
  if (!(eps >= 0)) throw ContractViolation("fm_loss: epsilon must be nonnegative");
  double in = eps, out = eps;
  for (double f : inflows) {
    if (f < 0 || (eps == 0 && f <= 0)) throw ContractViolation("fm_loss: flows must be positive");
    in += f;
  }
  for (double f : outflows) {
    if (f < 0 || (eps == 0 && f <= 0)) throw ContractViolation("fm_loss: flows must be positive");
    out += f;
  }
  if (!(in > 0) || !(out > 0)) throw ContractViolation("fm_loss: total flow must be positive");
  const double r = std::log(in / out);
  return r * r;
}

QuantityLoss quantity_loss(std::span<const TransitionQuantities> batch, const ObjectiveConfig& config) {
  switch (config.kind) {
    case ObjectiveKind::DB:
      return db(batch, true);
    case ObjectiveKind::TB:
      return tb(batch, true);
    case ObjectiveKind::SubTB:
      return subtb(batch, config.subtb, true);
    case ObjectiveKind::FM:
      break;
  }
  throw ContractViolation("quantity_loss: flow matching is defined on edge flows, not transition quantities");
}

}  // namespace gfn
