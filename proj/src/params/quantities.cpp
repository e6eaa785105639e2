#include "gfn/params/quantities.hpp"

#include <unordered_map>

#include "gfn/error.hpp"

namespace gfn {
namespace {

void require_policy_params(const ParamSet& params) {
  if (params.kind() == ParamKind::EdgeFlow)
    throw ContractViolation("trajectory quantities need a policy parameterization, not edge flows");
}

TransitionQuantities gather(const Environment& env, const StateOutputs& out, const Trajectory& traj,
                            std::span<const std::size_t> rows) {
  const std::size_t n = traj.length();
  TransitionQuantities tq;
  tq.complete = traj.complete;
  tq.log_pf.resize(n);
  tq.log_pb.resize(n);
  tq.log_flow.resize(n + 1);
  tq.flow_learned.assign(n + 1, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t a = traj.actions[i];
    tq.log_pf[i] = out.log_pf.at(rows[i], a);
    tq.log_pb[i] = out.log_pb.at(rows[i + 1], a);
  }
  for (std::size_t i = 0; i <= n; ++i) {
    const State& s = traj.states[i];
    if (s.terminal) {
      tq.log_flow[i] = env.log_reward(s);
      tq.flow_learned[i] = 0;
    } else if (env.is_initial(s)) {
      tq.log_flow[i] = out.log_z;
    } else {
      tq.log_flow[i] = out.log_flow[rows[i]];
    }
  }
  return tq;
}

}  // namespace

void TransitionQuantities::check() const {
  const std::size_t n = log_pf.size();
  if (log_pb.size() != n || log_flow.size() != n + 1 || flow_learned.size() != n + 1)
    throw ContractViolation("transition quantities: expected lengths n, n, n+1");
}

TransitionQuantities trajectory_quantities(const ParamSet& params, const Trajectory& trajectory) {
  require_policy_params(params);
  const Environment& env = params.environment();
  validate(env, trajectory);
  const StateOutputs out = params.evaluate(trajectory.states);
  std::vector<std::size_t> rows(trajectory.states.size());
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
  return gather(env, out, trajectory, rows);
}

BatchQuantities::BatchQuantities(ParamSet& params, std::span<const Trajectory> batch) {
  require_policy_params(params);
  if (batch.empty()) throw ContractViolation("batch quantities: empty batch");
  const Environment& env = params.environment();
  std::unordered_map<State, std::size_t, StateHash> index;
  std::vector<State> distinct;
  rows_.reserve(batch.size());
  for (const Trajectory& traj : batch) {
    validate(env, traj);
    auto& rows = rows_.emplace_back();
    rows.reserve(traj.states.size());
    for (const State& s : traj.states) {
      auto [it, inserted] = index.try_emplace(s, distinct.size());
      if (inserted) distinct.push_back(s);
      rows.push_back(it->second);
    }
    actions_.push_back(traj.actions);
  }
  row_is_initial_.resize(distinct.size());
  for (std::size_t r = 0; r < distinct.size(); ++r) row_is_initial_[r] = env.is_initial(distinct[r]);
  pass_ = params.forward(distinct);
  tq_.reserve(batch.size());
  for (std::size_t t = 0; t < batch.size(); ++t) tq_.push_back(gather(env, pass_.outputs(), batch[t], rows_[t]));
}

void BatchQuantities::backward(std::span<const QuantityGradient> grads, double d_log_z) {
  if (grads.size() != tq_.size()) throw ContractViolation("batch quantities: one gradient per trajectory expected");
  const StateOutputs& out = pass_.outputs();
  const std::size_t n_rows = pass_.rows();
  OutputGradients g;
  g.log_pf.reset(out.log_pf.shape(), 0.0);
  g.log_pb.reset(out.log_pb.shape(), 0.0);
  g.log_flow.assign(n_rows, 0.0);
  g.log_z = d_log_z;
  bool any_flow = false;
  for (std::size_t t = 0; t < tq_.size(); ++t) {
    const auto& q = grads[t];
    const auto& rows = rows_[t];
    const auto& acts = actions_[t];
    const std::size_t n = acts.size();
    if (q.log_pf.size() != n || q.log_pb.size() != n || q.log_flow.size() != n + 1)
      throw ContractViolation("batch quantities: gradient lengths do not match trajectory " + std::to_string(t));
    for (std::size_t i = 0; i < n; ++i) {
      g.log_pf.at(rows[i], acts[i]) += q.log_pf[i];
      g.log_pb.at(rows[i + 1], acts[i]) += q.log_pb[i];
    }
    for (std::size_t i = 0; i <= n; ++i) {
      if (!tq_[t].flow_learned[i] || q.log_flow[i] == 0.0) continue;
      if (row_is_initial_[rows[i]]) {
        g.log_z += q.log_flow[i];
      } else {
        g.log_flow[rows[i]] += q.log_flow[i];
        any_flow = true;
      }
    }
  }
  if (!any_flow) g.log_flow.clear();
  pass_.backward(g);
}

}  // namespace gfn
