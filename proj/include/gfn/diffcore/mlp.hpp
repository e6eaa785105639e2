#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gfn/diffcore/tape.hpp"

namespace gfn {

struct MlpConfig {
  std::size_t input_width = 0;
  std::vector<std::size_t> hidden = {256, 256};
  Activation activation = Activation::LeakyRelu;
  double leaky_slope = 0.01;
  // One linear head per entry, all reading the last trunk layer.
  std::vector<std::size_t> head_widths;

  void validate() const;
};

// Multi-layer perceptron with a shared trunk and several linear heads.
// Weights use fan-in scaled uniform initialization U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
class Mlp {
 public:
  Mlp(MlpConfig config, std::uint64_t seed, const std::string& prefix = "mlp");

  const MlpConfig& config() const noexcept { return config_; }
  std::vector<Parameter>& parameters() noexcept { return params_; }
  const std::vector<Parameter>& parameters() const noexcept { return params_; }
  std::size_t parameter_count() const noexcept;

  // Records the network on `tape`; returns one node per head. The tape keeps
  // pointers to this Mlp's parameters, so the Mlp must outlive it and must
  // not be moved while the tape is in use.
  std::vector<NodeId> build(Tape& tape, NodeId input);
  // Same network with every parameter frozen (inference only).
  std::vector<NodeId> build_frozen(Tape& tape, NodeId input) const;

 private:
  template <class Bind>
  std::vector<NodeId> build_with(Tape& tape, NodeId input, Bind&& bind) const;

  MlpConfig config_;
  std::vector<Parameter> params_;  // weight, bias pairs: trunk layers then heads
};

}  // namespace gfn
