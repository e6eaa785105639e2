#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "gfn/envcore/state.hpp"

namespace gfn {

// The DAG contract every environment satisfies.
//
// Actions are identified by an index in [0, action_count()). A state's
// backward actions are indexed in the same space: backward action `a` at `t`
// undoes forward action `a`, so a fixed-width head serves both policies.
// All member functions are pure; an Environment may be shared read-only
// between threads.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual std::string kind() const = 0;
  // Identifies the environment's shape (used to validate checkpoints).
  virtual std::string signature() const = 0;

  virtual State initial_state() const = 0;
  bool is_initial(const State& s) const { return s == initial_state(); }

  virtual std::size_t action_count() const = 0;
  // Valid forward actions out of a non-terminal state, ascending.
  virtual std::vector<std::size_t> forward_actions(const State& s) const = 0;
  // Valid backward actions into a non-initial state, ascending.
  virtual std::vector<std::size_t> backward_actions(const State& t) const = 0;
  virtual State apply(const State& s, std::size_t action) const = 0;
  virtual State undo(const State& t, std::size_t backward_action) const = 0;
  // Index of the action s -> t; throws ContractViolation when t is not a child of s.
  std::size_t action_between(const State& s, const State& t) const;

  std::vector<State> children(const State& s) const;
  std::vector<State> parents(const State& t) const;

  // log R(x)^beta of a terminal state.
  virtual double log_reward(const State& x) const = 0;
  double reward(const State& x) const;

  virtual std::size_t feature_width() const = 0;
  virtual void encode(const State& s, std::span<double> out) const = 0;
  std::vector<double> encode(const State& s) const;

  // Number of actions of the longest complete trajectory.
  virtual std::size_t max_trajectory_length() const = 0;
  // Rank along a topological order: every parent has a strictly smaller rank.
  virtual std::size_t topological_rank(const State& s) const = 0;

  // Exhaustive enumeration (tabular parameters, exact targets, DP oracles).
  virtual bool enumerable() const = 0;
  virtual std::size_t state_count() const = 0;
  // Dense index in [0, state_count()); a perfect hash over all states.
  virtual std::size_t state_index(const State& s) const = 0;
  // Every state, in topological order.
  virtual std::vector<State> enumerate_states() const = 0;
  virtual std::vector<State> enumerate_terminal_states() const = 0;

  // Mode bookkeeping: the number of modes and the modes a terminal state belongs to.
  virtual std::size_t mode_count() const = 0;
  virtual std::vector<std::size_t> modes_of(const State& x) const = 0;

  // Throws ContractViolation unless consecutive states are valid actions.
  void validate_transition(const State& s, const State& t) const;
};

struct HypergridConfig {
  int dim = 2;
  int size = 8;
  double r0 = 1e-3;
  double r1 = 0.5;
  double r2 = 2.0;
  double beta = 1.0;
  std::size_t enumeration_budget = std::size_t{1} << 24;

  static HypergridConfig standard(int dim, int size);
  static HypergridConfig harder(int dim, int size);
};

struct BitSequenceConfig {
  int length = 32;          // n, bits per sequence
  int bits_per_token = 1;   // k, must divide n
  int num_modes = 8;        // |M|
  std::uint64_t mode_seed = 0;
  double beta = 1.0;
  std::size_t enumeration_budget = std::size_t{1} << 20;  // max terminal states
};

std::unique_ptr<Environment> make_hypergrid(const HypergridConfig& config);
std::unique_ptr<Environment> make_bit_sequence(const BitSequenceConfig& config);

}  // namespace gfn
