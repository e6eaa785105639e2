#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gfn/diffcore/checkpoint.hpp"
#include "gfn/diffcore/mlp.hpp"
#include "gfn/diffcore/tape.hpp"
#include "gfn/envcore/environment.hpp"

namespace gfn {

enum class ParamKind { Tabular, Mlp, EdgeFlow };
enum class BackwardPolicy { Learned, Uniform };

const char* param_kind_name(ParamKind kind) noexcept;
ParamKind parse_param_kind(const std::string& name);

struct ParamsConfig {
  ParamKind kind = ParamKind::Tabular;
  BackwardPolicy backward = BackwardPolicy::Learned;
  // MLP trunk (MlpParams, and EdgeFlowParams when edge_flow_table is false).
  std::vector<std::size_t> hidden = {256, 256};
  Activation activation = Activation::LeakyRelu;
  double leaky_slope = 0.01;
  bool edge_flow_table = true;
  std::uint64_t init_seed = 0;

  void validate() const;
};

// Row-per-state outputs of one evaluation. A is the environment's action count.
struct StateOutputs {
  Tensor log_pf;  // N x A; -inf off the valid forward actions (the whole row for terminal states)
  Tensor log_pb;  // N x A; -inf off the valid backward actions (the whole row for s_0)
  // Learned log F(s) head, without terminal or s_0 substitution. Edge-flow
  // parameterizations report the log total outflow (-inf for terminal states).
  std::vector<double> log_flow;
  Tensor log_edge_flow;  // EdgeFlow only: N x A log F(s->t), -inf off the valid actions
  double log_z = 0.0;
};

// Upstream gradients of a scalar loss with respect to StateOutputs entries.
// Empty tensors / vectors mean "no gradient". Entries at invalid actions and
// at rows without a defined distribution must be zero.
struct OutputGradients {
  Tensor log_pf;
  Tensor log_pb;
  std::vector<double> log_flow;
  Tensor log_edge_flow;
  double log_z = 0.0;
};

// One differentiable evaluation: values plus the tape to backpropagate through.
// Holds pointers into the ParamSet that produced it.
class ForwardPass {
 public:
  const StateOutputs& outputs() const noexcept { return out_; }
  std::size_t rows() const noexcept { return out_.log_flow.size(); }
  // Accumulates parameter gradients (into Parameter::grad).
  void backward(const OutputGradients& grads);

 private:
  friend class ParamSet;
  Tape tape_;
  std::optional<NodeId> log_pf_, log_pb_, log_flow_, log_z_, edge_;
  StateOutputs out_;
};

// A GFlowNet parameterization: log P_F(.|s), log P_B(.|s), log F(s), log Z.
//
// log Z is a standalone scalar (optimizer group 1) identified with log F(s_0).
// Terminal log F is the environment's log reward and never a parameter.
// Read-only queries are safe to run concurrently; anything that mutates
// parameters needs exclusive access.
class ParamSet {
 public:
  static constexpr int kLogZGroup = 1;

  explicit ParamSet(std::shared_ptr<const Environment> env, BackwardPolicy backward);
  virtual ~ParamSet() = default;
  ParamSet(const ParamSet&) = delete;
  ParamSet& operator=(const ParamSet&) = delete;

  virtual ParamKind kind() const noexcept = 0;
  const Environment& environment() const noexcept { return *env_; }
  const std::shared_ptr<const Environment>& environment_ptr() const noexcept { return env_; }
  BackwardPolicy backward_policy() const noexcept { return backward_; }

  virtual std::vector<Parameter*> parameters() = 0;
  virtual std::vector<const Parameter*> parameters() const = 0;
  std::size_t parameter_count() const;
  void zero_grad();

  virtual double log_z() const = 0;

  // Inference over frozen parameters.
  StateOutputs evaluate(std::span<const State> states) const;
  // Differentiable evaluation; the pass must not outlive this ParamSet.
  ForwardPass forward(std::span<const State> states);

  // Single-state queries.
  std::vector<double> log_pf(const State& s) const;
  std::vector<double> log_pb(const State& t) const;
  // log R(x) for terminal x, log Z for s_0, the learned head otherwise.
  double log_state_flow(const State& s) const;

  // Rows fed through the parameterization since construction / reset.
  std::uint64_t evaluated_rows() const noexcept { return evaluated_rows_.load(); }
  void reset_evaluated_rows() noexcept { evaluated_rows_.store(0); }

  // Parameter values in / out of a checkpoint (names are unique per set).
  void export_to(Checkpoint& checkpoint) const;
  void import_from(const Checkpoint& checkpoint);

 protected:
  struct Heads {
    NodeId forward;                 // N x A logits (or log edge flows)
    std::optional<NodeId> backward;  // N x A logits, learned P_B only
    std::optional<NodeId> log_flow;  // N x 1
    std::optional<NodeId> log_z;     // [1]
  };
  // Records the raw heads for `states` (features / indices go into `feed`).
  virtual Heads record(Tape& tape, Feed& feed, std::span<const State> states) = 0;
  virtual Heads record_frozen(Tape& tape, Feed& feed, std::span<const State> states) const = 0;
  virtual bool forward_head_is_edge_flow() const noexcept { return false; }

  std::shared_ptr<const Environment> env_;
  BackwardPolicy backward_;

 private:
  void finish(ForwardPass& pass, const Heads& heads, std::span<const State> states, Feed feed) const;
  mutable std::atomic<std::uint64_t> evaluated_rows_{0};
};

// Every logit and log flow is an independent parameter indexed by the
// environment's perfect hash. Logits and flows start at zero.
class TabularParams final : public ParamSet {
 public:
  TabularParams(std::shared_ptr<const Environment> env, BackwardPolicy backward);

  ParamKind kind() const noexcept override { return ParamKind::Tabular; }
  std::vector<Parameter*> parameters() override;
  std::vector<const Parameter*> parameters() const override;
  double log_z() const override { return log_z_.value[0]; }

  Parameter& pf_logits() noexcept { return pf_; }  // S x A
  Parameter& pb_logits() noexcept { return pb_; }  // S x A (unused under uniform P_B)
  Parameter& log_flow_table() noexcept { return flow_; }  // S x 1
  Parameter& log_z_param() noexcept { return log_z_; }
  const Parameter& pf_logits() const noexcept { return pf_; }
  const Parameter& pb_logits() const noexcept { return pb_; }
  const Parameter& log_flow_table() const noexcept { return flow_; }
  const Parameter& log_z_param() const noexcept { return log_z_; }

 protected:
  Heads record(Tape& tape, Feed& feed, std::span<const State> states) override;
  Heads record_frozen(Tape& tape, Feed& feed, std::span<const State> states) const override;

 private:
  template <class Self, class Bind>
  static Heads record_with(Self& self, Tape& tape, Feed& feed, std::span<const State> states, Bind&& bind);

  Parameter pf_, pb_, flow_, log_z_;
};

// Shared-trunk MLP over the environment encoding with heads for forward
// logits, backward logits (when learned) and log F, plus a scalar log Z.
class MlpParams final : public ParamSet {
 public:
  MlpParams(std::shared_ptr<const Environment> env, const ParamsConfig& config);

  ParamKind kind() const noexcept override { return ParamKind::Mlp; }
  std::vector<Parameter*> parameters() override;
  std::vector<const Parameter*> parameters() const override;
  double log_z() const override { return log_z_.value[0]; }
  Parameter& log_z_param() noexcept { return log_z_; }

 protected:
  Heads record(Tape& tape, Feed& feed, std::span<const State> states) override;
  Heads record_frozen(Tape& tape, Feed& feed, std::span<const State> states) const override;

 private:
  Tensor features(std::span<const State> states) const;

  std::unique_ptr<Mlp> net_;
  Parameter log_z_;
};

// Log edge flows log F(s->t) for every action out of s, from a table or an
// MLP. P_F is the normalized outflow; Z is the total outflow of s_0. There is
// no backward policy.
class EdgeFlowParams final : public ParamSet {
 public:
  EdgeFlowParams(std::shared_ptr<const Environment> env, const ParamsConfig& config);
  ~EdgeFlowParams() override;

  ParamKind kind() const noexcept override { return ParamKind::EdgeFlow; }
  std::vector<Parameter*> parameters() override;
  std::vector<const Parameter*> parameters() const override;
  double log_z() const override;
  bool uses_table() const noexcept { return !net_; }
  Parameter& edge_table() { return table_; }  // S x A, table backend

 protected:
  Heads record(Tape& tape, Feed& feed, std::span<const State> states) override;
  Heads record_frozen(Tape& tape, Feed& feed, std::span<const State> states) const override;
  bool forward_head_is_edge_flow() const noexcept override { return true; }

 private:
  Parameter table_;
  std::unique_ptr<Mlp> net_;
};

// Environment encodings of `states`, one row each.
Tensor encode_batch(const Environment& env, std::span<const State> states);

std::unique_ptr<ParamSet> make_paramset(std::shared_ptr<const Environment> env, const ParamsConfig& config);

}  // namespace gfn
