#include "gfn/graddiag/per_trajectory.hpp"

#include "gfn/error.hpp"
#include "gfn/graddiag/true_flows.hpp"
#include "gfn/params/quantities.hpp"

namespace gfn {

const char* flow_source_name(FlowSource source) noexcept {
  switch (source) {
    case FlowSource::Learned:
      return "learned";
    case FlowSource::TrueForward:
      return "true_forward";
    case FlowSource::TrueBackward:
      return "true_backward";
  }
  return "unknown";
}

FlowSource parse_flow_source(const std::string& name) {
  if (name == "learned") return FlowSource::Learned;
  if (name == "true_forward") return FlowSource::TrueForward;
  if (name == "true_backward") return FlowSource::TrueBackward;
  throw ConfigError("unknown flow source '" + name + "'");
}

GradVector policy_gradient(const TabularParams& params) {
  GradVector g;
  const auto append = [&](const Parameter& p) {
    if (p.grad.size() != p.value.size()) {
      g.insert(g.end(), p.value.size(), 0.0);
    } else {
      g.insert(g.end(), p.grad.data().begin(), p.grad.data().end());
    }
  };
  append(params.pf_logits());
  if (params.backward_policy() == BackwardPolicy::Learned) append(params.pb_logits());
  return g;
}

std::vector<GradVector> substituted_gradients(ParamSet& params, std::span<const Trajectory> batch,
                                              const ObjectiveConfig& objective, FlowSource source) {
  auto* tabular = dynamic_cast<TabularParams*>(&params);
  if (!tabular) throw ContractViolation("gradient diagnostics need tabular parameters");
  if (objective.kind == ObjectiveKind::FM) throw ContractViolation("gradient diagnostics support DB, TB and SubTB");
  if (batch.empty()) throw ContractViolation("gradient diagnostics: empty batch");
  const Environment& env = params.environment();

  std::vector<TransitionQuantities> tqs;
  {
    BatchQuantities bq(params, batch);
    tqs.assign(bq.quantities().begin(), bq.quantities().end());
  }
  if (source != FlowSource::Learned) {
    const StateFlows flows = source == FlowSource::TrueForward ? true_forward_flow(params) : true_backward_flow(params);
    for (std::size_t t = 0; t < batch.size(); ++t) {
      for (std::size_t i = 0; i < batch[t].states.size(); ++i) {
        const State& s = batch[t].states[i];
        if (s.terminal) continue;
        tqs[t].log_flow[i] = flows.at(env, s);
        tqs[t].flow_learned[i] = 0;
      }
    }
  }
  QuantityLoss ql = quantity_loss(tqs, objective);
  const double scale = static_cast<double>(batch.size());
  std::vector<GradVector> out;
  out.reserve(batch.size());
  for (std::size_t t = 0; t < batch.size(); ++t) {
    params.zero_grad();
    BatchQuantities single(params, batch.subspan(t, 1));
    single.mutable_quantities()[0].flow_learned = tqs[t].flow_learned;
    QuantityGradient& g = ql.grads[t];
    for (double& v : g.log_pf) v *= scale;
    for (double& v : g.log_pb) v *= scale;
    for (double& v : g.log_flow) v *= scale;
    single.backward(std::span<const QuantityGradient>(&g, 1));
    out.push_back(policy_gradient(*tabular));
  }
  params.zero_grad();
  return out;
}

double cross_objective_similarity(ParamSet& params, std::span<const Trajectory> batch, const ObjectiveConfig& small,
                                  std::size_t k, FlowSource source) {
  ObjectiveConfig tb = small;
  tb.kind = ObjectiveKind::TB;
  const auto reference_grads = substituted_gradients(params, batch, tb, source);
  const GradVector reference = mean_gradient(reference_grads, 0, reference_grads.size());
  if (small.kind == ObjectiveKind::TB) return subbatch_similarity(reference_grads, k, reference);
  return subbatch_similarity(substituted_gradients(params, batch, small, source), k, reference);
}

}  // namespace gfn
