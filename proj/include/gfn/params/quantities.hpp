#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gfn/envcore/trajectory.hpp"
#include "gfn/params/paramset.hpp"

namespace gfn {

// Per-step policy values and per-state flows along one trajectory s_0..s_n.
struct TransitionQuantities {
  std::vector<double> log_pf;    // n: log P_F(s_{i+1} | s_i)
  std::vector<double> log_pb;    // n: log P_B(s_i | s_{i+1})
  std::vector<double> log_flow;  // n+1: log F(s_i); log R at a terminal, log Z at s_0
  // 1 where log_flow[i] is learned (flow head or log Z); 0 where it is fixed.
  std::vector<char> flow_learned;
  bool complete = false;

  std::size_t length() const noexcept { return log_pf.size(); }
  // Throws ContractViolation unless the lengths are n, n, n+1, n+1.
  void check() const;
};

// Gradient of a loss with respect to one trajectory's quantities.
struct QuantityGradient {
  std::vector<double> log_pf;
  std::vector<double> log_pb;
  std::vector<double> log_flow;

  explicit QuantityGradient(std::size_t n = 0) : log_pf(n, 0.0), log_pb(n, 0.0), log_flow(n + 1, 0.0) {}
};

// Quantities from frozen parameters.
TransitionQuantities trajectory_quantities(const ParamSet& params, const Trajectory& trajectory);

// One batched, differentiable evaluation covering every trajectory of a batch.
// Each distinct state is fed through the parameterization exactly once.
// The object refers to `params`, which must outlive it.
class BatchQuantities {
 public:
  BatchQuantities(ParamSet& params, std::span<const Trajectory> batch);

  std::span<const TransitionQuantities> quantities() const noexcept { return tq_; }
  std::vector<TransitionQuantities>& mutable_quantities() noexcept { return tq_; }
  double log_z() const noexcept { return pass_.outputs().log_z; }
  std::size_t distinct_states() const noexcept { return pass_.rows(); }

  // Accumulates dL/dparams given dL/dquantities per trajectory plus any
  // direct dL/dlogZ. Flows marked fixed receive no gradient.
  void backward(std::span<const QuantityGradient> grads, double d_log_z = 0.0);

 private:
  std::vector<std::vector<std::size_t>> rows_;     // per trajectory, per state
  std::vector<std::vector<std::size_t>> actions_;  // per trajectory, per step
  std::vector<char> row_is_initial_;
  ForwardPass pass_;
  std::vector<TransitionQuantities> tq_;
};

}  // namespace gfn
