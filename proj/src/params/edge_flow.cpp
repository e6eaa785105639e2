#include <utility>

#include "gfn/error.hpp"
#include "gfn/params/paramset.hpp"

namespace gfn {

EdgeFlowParams::EdgeFlowParams(std::shared_ptr<const Environment> env, const ParamsConfig& config)
    : ParamSet(std::move(env), BackwardPolicy::Uniform) {
  const std::size_t a = env_->action_count();
  if (config.edge_flow_table) {
    if (!env_->enumerable())
      throw EnumerationRefused("tabular edge flows need an enumerable environment (" + env_->signature() + ")");
    table_ = Parameter{.name = "edge_flow.log_flows", .value = Tensor({env_->state_count(), a}, 0.0)};
    table_.zero_grad();
  } else {
    MlpConfig mc{.input_width = env_->feature_width(),
                 .hidden = config.hidden,
                 .activation = config.activation,
                 .leaky_slope = config.leaky_slope,
                 .head_widths = {a}};
    net_ = std::make_unique<Mlp>(std::move(mc), config.init_seed, "edge_flow");
  }
}

EdgeFlowParams::~EdgeFlowParams() = default;

std::vector<Parameter*> EdgeFlowParams::parameters() {
  if (!net_) return {&table_};
  std::vector<Parameter*> out;
  for (auto& p : net_->parameters()) out.push_back(&p);
  return out;
}

std::vector<const Parameter*> EdgeFlowParams::parameters() const {
  if (!net_) return {&table_};
  std::vector<const Parameter*> out;
  for (const auto& p : std::as_const(*net_).parameters()) out.push_back(&p);
  return out;
}

double EdgeFlowParams::log_z() const {
  const State s0 = env_->initial_state();
  return evaluate(std::span<const State>(&s0, 1)).log_flow[0];
}

ParamSet::Heads EdgeFlowParams::record(Tape& tape, Feed& feed, std::span<const State> states) {
  if (net_) {
    const NodeId x = tape.input("features");
    feed.set(x, encode_batch(*env_, states));
    return Heads{.forward = net_->build(tape, x)[0]};
  }
  std::vector<std::size_t> idx(states.size());
  for (std::size_t r = 0; r < states.size(); ++r) idx[r] = env_->state_index(states[r]);
  const NodeId rows = tape.index_input("state_index");
  feed.set_indices(rows, std::move(idx));
  return Heads{.forward = tape.gather_rows(tape.parameter(table_), rows)};
}

ParamSet::Heads EdgeFlowParams::record_frozen(Tape& tape, Feed& feed, std::span<const State> states) const {
  if (net_) {
    const NodeId x = tape.input("features");
    feed.set(x, encode_batch(*env_, states));
    return Heads{.forward = std::as_const(*net_).build_frozen(tape, x)[0]};
  }
  std::vector<std::size_t> idx(states.size());
  for (std::size_t r = 0; r < states.size(); ++r) idx[r] = env_->state_index(states[r]);
  const NodeId rows = tape.index_input("state_index");
  feed.set_indices(rows, std::move(idx));
  return Heads{.forward = tape.gather_rows(tape.frozen(table_), rows)};
}

}  // namespace gfn
