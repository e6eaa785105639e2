#include "gfn/params/paramset.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gfn/error.hpp"

namespace gfn {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_sum_exp_row(std::span<const double> row) {
  double mx = kNegInf;
  for (double v : row) mx = std::max(mx, v);
  if (mx == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double v : row) acc += std::exp(v - mx);
  return mx + std::log(acc);
}

// Row masks; rows with no valid action get an all-ones placeholder so the
// softmax is defined, and are reported in `empty`.
Tensor action_mask(const Environment& env, std::span<const State> states, bool forward, std::vector<char>& empty) {
  const std::size_t a = env.action_count();
  Tensor mask({states.size(), a}, 0.0);
  empty.assign(states.size(), 0);
  for (std::size_t r = 0; r < states.size(); ++r) {
    const State& s = states[r];
    const bool none = forward ? s.terminal : env.is_initial(s);
    if (none) {
      empty[r] = 1;
      for (std::size_t c = 0; c < a; ++c) mask.at(r, c) = 1.0;
      continue;
    }
    for (std::size_t c : forward ? env.forward_actions(s) : env.backward_actions(s)) mask.at(r, c) = 1.0;
  }
  return mask;
}

}  // namespace

const char* param_kind_name(ParamKind kind) noexcept {
  switch (kind) {
    case ParamKind::Tabular:
      return "tabular";
    case ParamKind::Mlp:
      return "mlp";
    case ParamKind::EdgeFlow:
      return "edge_flow";
  }
  return "unknown";
}

ParamKind parse_param_kind(const std::string& name) {
  if (name == "tabular") return ParamKind::Tabular;
  if (name == "mlp") return ParamKind::Mlp;
  if (name == "edge_flow") return ParamKind::EdgeFlow;
  throw ConfigError("unknown parameterization '" + name + "'");
}

void ParamsConfig::validate() const {
  for (std::size_t w : hidden) {
    if (w == 0) throw ConfigError("params: hidden widths must be positive");
  }
  if (!(leaky_slope >= 0)) throw ConfigError("params: leaky slope must be nonnegative");
}

void ForwardPass::backward(const OutputGradients& grads) {
  std::vector<Tape::Seed> seeds;
  Tensor flow_seed, z_seed;
  const std::size_t n = rows();
  const auto check = [&](const Tensor& g, const char* what) {
    if (g.rank() != 2 || g.shape()[0] != n || g.shape()[1] != out_.log_pf.cols())
      throw ShapeError(std::string("forward pass: ") + what + " gradient has shape " + shape_string(g.shape()));
  };
  if (grads.log_pf.rank() > 0) {
    check(grads.log_pf, "log_pf");
    if (!log_pf_) throw ContractViolation("forward pass: no forward policy node");
    seeds.push_back({*log_pf_, &grads.log_pf});
  }
  if (grads.log_pb.rank() > 0) {
    check(grads.log_pb, "log_pb");
    // A fixed uniform backward policy has no parameters.
    if (log_pb_) seeds.push_back({*log_pb_, &grads.log_pb});
  }
  if (!grads.log_flow.empty()) {
    if (grads.log_flow.size() != n) throw ShapeError("forward pass: log_flow gradient has the wrong length");
    if (!log_flow_) throw ContractViolation("forward pass: no state-flow head");
    flow_seed = Tensor({n, 1}, grads.log_flow);
    seeds.push_back({*log_flow_, &flow_seed});
  }
  if (grads.log_edge_flow.rank() > 0) {
    check(grads.log_edge_flow, "log_edge_flow");
    if (!edge_) throw ContractViolation("forward pass: no edge-flow head");
    seeds.push_back({*edge_, &grads.log_edge_flow});
  }
  if (grads.log_z != 0.0) {
    if (!log_z_) throw ContractViolation("forward pass: no log Z parameter");
    z_seed = Tensor({1}, std::vector<double>{grads.log_z});
    seeds.push_back({*log_z_, &z_seed});
  }
  if (!seeds.empty()) tape_.backward(seeds);
}

ParamSet::ParamSet(std::shared_ptr<const Environment> env, BackwardPolicy backward)
    : env_(std::move(env)), backward_(backward) {
  if (!env_) throw ContractViolation("params: environment is null");
}

std::size_t ParamSet::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter* p : parameters()) n += p->value.size();
  return n;
}

void ParamSet::zero_grad() {
  for (Parameter* p : parameters()) p->zero_grad();
}

void ParamSet::finish(ForwardPass& pass, const Heads& heads, std::span<const State> states, Feed feed) const {
  Tape& tape = pass.tape_;
  const Environment& env = *env_;
  const std::size_t n = states.size(), a = env.action_count();
  std::vector<char> no_forward, no_backward;
  Tensor fmask = action_mask(env, states, true, no_forward);
  pass.log_pf_ = tape.masked_log_softmax(heads.forward, tape.constant(fmask));
  if (forward_head_is_edge_flow()) pass.edge_ = heads.forward;
  Tensor bmask;
  if (backward_ == BackwardPolicy::Learned || heads.backward) bmask = action_mask(env, states, false, no_backward);
  if (heads.backward) pass.log_pb_ = tape.masked_log_softmax(*heads.backward, tape.constant(bmask));
  pass.log_flow_ = heads.log_flow;
  pass.log_z_ = heads.log_z;
  tape.forward(std::move(feed));
  evaluated_rows_.fetch_add(n);

  StateOutputs& out = pass.out_;
  out.log_pf = tape.value(*pass.log_pf_);
  for (std::size_t r = 0; r < n; ++r) {
    if (no_forward[r]) std::fill(out.log_pf.row(r).begin(), out.log_pf.row(r).end(), kNegInf);
  }
  if (pass.log_pb_) {
    out.log_pb = tape.value(*pass.log_pb_);
    for (std::size_t r = 0; r < n; ++r) {
      if (no_backward[r]) std::fill(out.log_pb.row(r).begin(), out.log_pb.row(r).end(), kNegInf);
    }
  } else {
    out.log_pb.reset({n, a}, kNegInf);
    if (!forward_head_is_edge_flow()) {
      for (std::size_t r = 0; r < n; ++r) {
        if (env.is_initial(states[r])) continue;
        const auto acts = env.backward_actions(states[r]);
        const double lp = -std::log(static_cast<double>(acts.size()));
        for (std::size_t c : acts) out.log_pb.at(r, c) = lp;
      }
    }
  }
  out.log_flow.assign(n, std::numeric_limits<double>::quiet_NaN());
  if (pass.edge_) {
    out.log_edge_flow = tape.value(*pass.edge_);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < a; ++c) {
        if (no_forward[r] || fmask.at(r, c) == 0.0) out.log_edge_flow.at(r, c) = kNegInf;
      }
      out.log_flow[r] = log_sum_exp_row(out.log_edge_flow.row(r));
    }
  } else if (pass.log_flow_) {
    const Tensor& f = tape.value(*pass.log_flow_);
    for (std::size_t r = 0; r < n; ++r) out.log_flow[r] = f[r];
  }
  out.log_z = std::numeric_limits<double>::quiet_NaN();
  if (pass.log_z_) {
    out.log_z = tape.value(*pass.log_z_)[0];
  } else if (pass.edge_) {
    for (std::size_t r = 0; r < n; ++r) {
      if (env.is_initial(states[r])) {
        out.log_z = out.log_flow[r];
        break;
      }
    }
  }
}

StateOutputs ParamSet::evaluate(std::span<const State> states) const {
  if (states.empty()) throw ContractViolation("params: evaluate needs at least one state");
  ForwardPass pass;
  Feed feed;
  const Heads heads = record_frozen(pass.tape_, feed, states);
  finish(pass, heads, states, std::move(feed));
  if (std::isnan(pass.out_.log_z)) pass.out_.log_z = log_z();
  return std::move(pass.out_);
}

ForwardPass ParamSet::forward(std::span<const State> states) {
  if (states.empty()) throw ContractViolation("params: forward needs at least one state");
  ForwardPass pass;
  Feed feed;
  const Heads heads = record(pass.tape_, feed, states);
  finish(pass, heads, states, std::move(feed));
  if (std::isnan(pass.out_.log_z)) pass.out_.log_z = log_z();
  return pass;
}

std::vector<double> ParamSet::log_pf(const State& s) const {
  if (s.terminal) throw ContractViolation("log_pf: terminal state " + to_string(s) + " has no children");
  const StateOutputs out = evaluate(std::span<const State>(&s, 1));
  const auto row = out.log_pf.row(0);
  return {row.begin(), row.end()};
}

std::vector<double> ParamSet::log_pb(const State& t) const {
  if (env_->is_initial(t)) throw ContractViolation("log_pb: the initial state has no parents");
  if (kind() == ParamKind::EdgeFlow) throw ContractViolation("log_pb: edge-flow parameterization has no backward policy");
  const StateOutputs out = evaluate(std::span<const State>(&t, 1));
  const auto row = out.log_pb.row(0);
  return {row.begin(), row.end()};
}

double ParamSet::log_state_flow(const State& s) const {
  if (s.terminal) return env_->log_reward(s);
  if (env_->is_initial(s)) return log_z();
  return evaluate(std::span<const State>(&s, 1)).log_flow[0];
}

void ParamSet::export_to(Checkpoint& checkpoint) const {
  std::vector<Parameter> copies;
  for (const Parameter* p : parameters()) copies.push_back(*p);
  export_parameters(copies, checkpoint);
}

void ParamSet::import_from(const Checkpoint& checkpoint) {
  for (Parameter* p : parameters()) import_parameters(checkpoint, std::span<Parameter>(p, 1));
}

std::unique_ptr<ParamSet> make_paramset(std::shared_ptr<const Environment> env, const ParamsConfig& config) {
  config.validate();
  switch (config.kind) {
    case ParamKind::Tabular:
      return std::make_unique<TabularParams>(std::move(env), config.backward);
    case ParamKind::Mlp:
      return std::make_unique<MlpParams>(std::move(env), config);
    case ParamKind::EdgeFlow:
      return std::make_unique<EdgeFlowParams>(std::move(env), config);
  }
  throw ConfigError("unknown parameterization");
}

}  // namespace gfn
