#pragma once

#include <functional>
#include <vector>

#include "gfn/diffcore/tape.hpp"

namespace gfn::test {

// Builds a scalar loss on `tape` from the given parameters and returns its
// node plus the feed for the forward pass.
using LossBuilder = std::function<std::pair<NodeId, Feed>(Tape&, std::vector<Parameter>&)>;

inline double evaluate_loss(const LossBuilder& build, std::vector<Parameter>& params) {
  Tape tape;
  auto [loss, feed] = build(tape, params);
  tape.forward(std::move(feed));
  return tape.value(loss).item();
}

// Largest per-coordinate relative error between reverse-mode gradients and
// central differences with step h. The denominator is floored at `floor` so
// coordinates with a near-zero gradient are compared in absolute terms.
inline double gradient_check(const LossBuilder& build, std::vector<Parameter>& params, double h = 1e-6,
                             double floor = 1e-3) {
  for (auto& p : params) p.zero_grad();
  {
    Tape tape;
    auto [loss, feed] = build(tape, params);
    tape.forward(std::move(feed));
    tape.backward(loss, Tensor::scalar(1.0));
  }
  double worst = 0.0;
  for (auto& p : params) {
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double orig = p.value[i];
      p.value[i] = orig + h;
      const double up = evaluate_loss(build, params);
      p.value[i] = orig - h;
      const double down = evaluate_loss(build, params);
      p.value[i] = orig;
      const double fd = (up - down) / (2 * h);
      const double an = p.grad[i];
      worst = std::max(worst, std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), floor}));
    }
  }
  return worst;
}

}  // namespace gfn::test
