#include "gfn/diffcore/adam.hpp"

#include <cmath>

#include "gfn/error.hpp"
#include "gfn/kernels/kernels.hpp"

namespace gfn {

double AdamConfig::lr_for_group(int group) const {
  const auto it = group_multipliers.find(group);
  return lr * (it == group_multipliers.end() ? 1.0 : it->second);
}

Adam::Adam(AdamConfig config, std::span<Parameter* const> params)
    : config_(std::move(config)), params_(params.begin(), params.end()) {
  if (!(config_.lr > 0)) throw ConfigError("adam: learning rate must be positive");
  if (!(config_.beta1 >= 0 && config_.beta1 < 1 && config_.beta2 >= 0 && config_.beta2 < 1))
    throw ConfigError("adam: betas must lie in [0, 1)");
  for (Parameter* p : params_) {
    state_.first_moment.emplace_back(p->value.size(), 0.0);
    state_.second_moment.emplace_back(p->value.size(), 0.0);
  }
}

void Adam::restore(AdamState state) {
  if (state.first_moment.size() != params_.size() || state.second_moment.size() != params_.size())
    throw CheckpointError("adam: state has the wrong number of parameters");
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (state.first_moment[i].size() != params_[i]->value.size() ||
        state.second_moment[i].size() != params_[i]->value.size())
      throw CheckpointError("adam: moment size mismatch for " + params_[i]->name);
  }
  state_ = std::move(state);
}

bool Adam::step() {
  for (Parameter* p : params_) {
    if (p->grad.shape() != p->value.shape())
      throw ShapeError("adam: gradient of " + p->name + " does not match its value");
    for (double g : p->grad.data()) {
      if (!std::isfinite(g)) {
        ++state_.skipped;
        return false;
      }
    }
  }
  ++state_.step;
  const double t = static_cast<double>(state_.step);
  const auto& kt = kernels::active();
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Parameter& p = *params_[i];
    const kernels::AdamCoefficients c{config_.lr_for_group(p.group), config_.beta1, config_.beta2, config_.eps,
                                      1.0 - std::pow(config_.beta1, t), 1.0 - std::pow(config_.beta2, t)};
    kt.adam_update(p.value.raw(), p.grad.raw(), state_.first_moment[i].data(), state_.second_moment[i].data(),
                   p.value.size(), c);
  }
  return true;
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->zero_grad();
}

}  // namespace gfn
