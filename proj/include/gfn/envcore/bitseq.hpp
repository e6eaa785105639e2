#pragma once

#include <cstdint>
#include <vector>

#include "gfn/envcore/environment.hpp"

namespace gfn {

// Fixed-length bit strings generated left to right, k bits per token
// (vocabulary 2^k, n/k actions per episode). Token bits are read most
// significant first. R(x) = exp(-min_{y in M} hamming(x, y)).
class BitSequence final : public Environment {
 public:
  using Bits = std::vector<std::uint64_t>;

  explicit BitSequence(const BitSequenceConfig& config);

  const BitSequenceConfig& config() const noexcept { return config_; }
  int length() const noexcept { return config_.length; }
  int bits_per_token() const noexcept { return config_.bits_per_token; }
  std::size_t tokens_per_sequence() const noexcept { return tokens_; }
  std::size_t vocabulary() const noexcept { return vocabulary_; }
  const std::vector<Bits>& modes() const noexcept { return modes_; }
  // Mode membership radius: Hamming distance <= floor(n / 10).
  int mode_radius() const noexcept { return config_.length / 10; }

  Bits to_bits(const State& x) const;
  State from_bits(const Bits& bits) const;
  int hamming(const Bits& a, const Bits& b) const;
  int distance_to_modes(const Bits& x) const;

  std::string kind() const override { return "bitseq"; }
  std::string signature() const override;

  State initial_state() const override { return State{{}, false}; }
  std::size_t action_count() const override { return vocabulary_; }
  std::vector<std::size_t> forward_actions(const State& s) const override;
  std::vector<std::size_t> backward_actions(const State& t) const override;
  State apply(const State& s, std::size_t action) const override;
  State undo(const State& t, std::size_t backward_action) const override;

  double log_reward(const State& x) const override;

  std::size_t feature_width() const override;
  void encode(const State& s, std::span<double> out) const override;

  std::size_t max_trajectory_length() const override { return tokens_; }
  std::size_t topological_rank(const State& s) const override { return s.cells.size(); }

  bool enumerable() const override;
  std::size_t state_count() const override;
  std::size_t state_index(const State& s) const override;
  std::vector<State> enumerate_states() const override;
  std::vector<State> enumerate_terminal_states() const override;

  std::size_t mode_count() const override { return modes_.size(); }
  std::vector<std::size_t> modes_of(const State& x) const override;

 private:
  void check_state(const State& s) const;

  BitSequenceConfig config_;
  std::size_t tokens_ = 0;
  std::size_t vocabulary_ = 0;
  std::size_t words_ = 0;
  std::vector<Bits> modes_;
};

}  // namespace gfn
