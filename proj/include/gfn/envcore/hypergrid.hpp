#pragma once

#include "gfn/envcore/environment.hpp"

namespace gfn {

// d-dimensional H x ... x H grid. Action i < d increments coordinate i,
// action d is the stop action producing the terminal copy of the state.
//
// R(x) = R0 + R1 * prod_i 1[0.25 < |x_i/(H-1) - 0.5| <= 0.5]
//           + R2 * prod_i 1[0.3  < |x_i/(H-1) - 0.5| <  0.4]
class Hypergrid final : public Environment {
 public:
  explicit Hypergrid(const HypergridConfig& config);

  const HypergridConfig& config() const noexcept { return config_; }
  int dim() const noexcept { return config_.dim; }
  int size() const noexcept { return config_.size; }
  std::size_t stop_action() const noexcept { return static_cast<std::size_t>(config_.dim); }

  std::string kind() const override { return "hypergrid"; }
  std::string signature() const override;

  State initial_state() const override;
  std::size_t action_count() const override { return stop_action() + 1; }
  std::vector<std::size_t> forward_actions(const State& s) const override;
  std::vector<std::size_t> backward_actions(const State& t) const override;
  State apply(const State& s, std::size_t action) const override;
  State undo(const State& t, std::size_t backward_action) const override;

  double log_reward(const State& x) const override;
  // Base reward before the exponent is applied; defined for any coordinates.
  double base_reward(std::span<const int> coords) const;

  std::size_t feature_width() const override;
  void encode(const State& s, std::span<double> out) const override;

  std::size_t max_trajectory_length() const override;
  std::size_t topological_rank(const State& s) const override;

  bool enumerable() const override;
  std::size_t state_count() const override;
  std::size_t state_index(const State& s) const override;
  std::vector<State> enumerate_states() const override;
  std::vector<State> enumerate_terminal_states() const override;

  std::size_t mode_count() const override;
  std::vector<std::size_t> modes_of(const State& x) const override;

 private:
  void check_coords(const State& s) const;
  std::size_t lattice_points() const noexcept { return lattice_points_; }

  HypergridConfig config_;
  std::size_t lattice_points_ = 0;  // H^d
};

}  // namespace gfn
