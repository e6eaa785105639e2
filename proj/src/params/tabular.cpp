#include "gfn/error.hpp"
#include "gfn/params/paramset.hpp"

namespace gfn {
namespace {

Parameter zeros(std::string name, Tensor::Shape shape, int group = 0) {
  Parameter p{.name = std::move(name), .value = Tensor(std::move(shape), 0.0), .group = group};
  p.zero_grad();
  return p;
}

}  // namespace

TabularParams::TabularParams(std::shared_ptr<const Environment> env, BackwardPolicy backward)
    : ParamSet(std::move(env), backward) {
  if (!env_->enumerable())
    throw EnumerationRefused("tabular parameters need an enumerable environment (" + env_->signature() + ")");
  const std::size_t s = env_->state_count(), a = env_->action_count();
  pf_ = zeros("tabular.pf_logits", {s, a});
  pb_ = zeros("tabular.pb_logits", {s, a});
  flow_ = zeros("tabular.log_flow", {s, 1});
  log_z_ = zeros("log_z", {1}, kLogZGroup);
}

std::vector<Parameter*> TabularParams::parameters() {
  if (backward_ == BackwardPolicy::Uniform) return {&pf_, &flow_, &log_z_};
  return {&pf_, &pb_, &flow_, &log_z_};
}

std::vector<const Parameter*> TabularParams::parameters() const {
  if (backward_ == BackwardPolicy::Uniform) return {&pf_, &flow_, &log_z_};
  return {&pf_, &pb_, &flow_, &log_z_};
}

template <class Self, class Bind>
ParamSet::Heads TabularParams::record_with(Self& self, Tape& tape, Feed& feed, std::span<const State> states,
                                           Bind&& bind) {
  std::vector<std::size_t> idx(states.size());
  for (std::size_t r = 0; r < states.size(); ++r) idx[r] = self.env_->state_index(states[r]);
  const NodeId rows = tape.index_input("state_index");
  feed.set_indices(rows, std::move(idx));
  Heads h{.forward = tape.gather_rows(bind(self.pf_), rows)};
  if (self.backward_ == BackwardPolicy::Learned) h.backward = tape.gather_rows(bind(self.pb_), rows);
  h.log_flow = tape.gather_rows(bind(self.flow_), rows);
  h.log_z = bind(self.log_z_);
  return h;
}

ParamSet::Heads TabularParams::record(Tape& tape, Feed& feed, std::span<const State> states) {
  return record_with(*this, tape, feed, states, [&](Parameter& p) { return tape.parameter(p); });
}

ParamSet::Heads TabularParams::record_frozen(Tape& tape, Feed& feed, std::span<const State> states) const {
  return record_with(*this, tape, feed, states, [&](const Parameter& p) { return tape.frozen(p); });
}

}  // namespace gfn
