#include <utility>

#include "gfn/error.hpp"
#include "gfn/params/paramset.hpp"

namespace gfn {

Tensor encode_batch(const Environment& env, std::span<const State> states) {
  const std::size_t w = env.feature_width();
  Tensor x({states.size(), w}, 0.0);
  for (std::size_t r = 0; r < states.size(); ++r) env.encode(states[r], x.row(r));
  return x;
}

MlpParams::MlpParams(std::shared_ptr<const Environment> env, const ParamsConfig& config)
    : ParamSet(std::move(env), config.backward) {
  const std::size_t a = env_->action_count();
  MlpConfig mc{.input_width = env_->feature_width(),
               .hidden = config.hidden,
               .activation = config.activation,
               .leaky_slope = config.leaky_slope};
  mc.head_widths = {a};
  if (backward_ == BackwardPolicy::Learned) mc.head_widths.push_back(a);
  mc.head_widths.push_back(1);
  net_ = std::make_unique<Mlp>(std::move(mc), config.init_seed, "policy");
  log_z_ = Parameter{.name = "log_z", .value = Tensor({1}, 0.0), .group = kLogZGroup};
  log_z_.zero_grad();
}

std::vector<Parameter*> MlpParams::parameters() {
  std::vector<Parameter*> out;
  for (auto& p : net_->parameters()) out.push_back(&p);
  out.push_back(&log_z_);
  return out;
}

std::vector<const Parameter*> MlpParams::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& p : std::as_const(*net_).parameters()) out.push_back(&p);
  out.push_back(&log_z_);
  return out;
}

Tensor MlpParams::features(std::span<const State> states) const { return encode_batch(*env_, states); }

ParamSet::Heads MlpParams::record(Tape& tape, Feed& feed, std::span<const State> states) {
  const NodeId x = tape.input("features");
  feed.set(x, features(states));
  const auto heads = net_->build(tape, x);
  Heads h{.forward = heads[0]};
  if (backward_ == BackwardPolicy::Learned) h.backward = heads[1];
  h.log_flow = heads.back();
  h.log_z = tape.parameter(log_z_);
  return h;
}

ParamSet::Heads MlpParams::record_frozen(Tape& tape, Feed& feed, std::span<const State> states) const {
  const NodeId x = tape.input("features");
  feed.set(x, features(states));
  const auto heads = std::as_const(*net_).build_frozen(tape, x);
  Heads h{.forward = heads[0]};
  if (backward_ == BackwardPolicy::Learned) h.backward = heads[1];
  h.log_flow = heads.back();
  h.log_z = tape.frozen(log_z_);
  return h;
}

}  // namespace gfn
