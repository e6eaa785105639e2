#include "gfn/diffcore/mlp.hpp"

#include <cmath>
#include <random>

#include "gfn/error.hpp"

namespace gfn {
namespace {

// std::uniform_real_distribution is implementation-defined; this is not.
double uniform_symmetric(std::mt19937_64& rng, double bound) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return (2.0 * u - 1.0) * bound;
}

Parameter init_param(std::string name, Tensor::Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  Parameter p{.name = std::move(name), .value = Tensor(std::move(shape))};
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (double& v : p.value.data()) v = uniform_symmetric(rng, bound);
  p.zero_grad();
  return p;
}

}  // namespace

void MlpConfig::validate() const {
  if (input_width == 0) throw ConfigError("mlp: input width must be positive");
  for (std::size_t w : hidden) {
    if (w == 0) throw ConfigError("mlp: hidden widths must be positive");
  }
  if (head_widths.empty()) throw ConfigError("mlp: at least one head is required");
  for (std::size_t w : head_widths) {
    if (w == 0) throw ConfigError("mlp: head widths must be positive");
  }
  if (!(leaky_slope >= 0)) throw ConfigError("mlp: leaky slope must be nonnegative");
}

Mlp::Mlp(MlpConfig config, std::uint64_t seed, const std::string& prefix) : config_(std::move(config)) {
  config_.validate();
  std::mt19937_64 rng(seed);
  std::size_t width = config_.input_width;
  for (std::size_t l = 0; l < config_.hidden.size(); ++l) {
    const std::string base = prefix + ".trunk." + std::to_string(l);
    params_.push_back(init_param(base + ".weight", {config_.hidden[l], width}, width, rng));
    params_.push_back(init_param(base + ".bias", {config_.hidden[l]}, width, rng));
    width = config_.hidden[l];
  }
  for (std::size_t h = 0; h < config_.head_widths.size(); ++h) {
    const std::string base = prefix + ".head." + std::to_string(h);
    params_.push_back(init_param(base + ".weight", {config_.head_widths[h], width}, width, rng));
    params_.push_back(init_param(base + ".bias", {config_.head_widths[h]}, width, rng));
  }
}

std::size_t Mlp::parameter_count() const noexcept {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

template <class Bind>
std::vector<NodeId> Mlp::build_with(Tape& tape, NodeId input, Bind&& bind) const {
  NodeId h = input;
  std::size_t k = 0;
  for (std::size_t l = 0; l < config_.hidden.size(); ++l, k += 2) {
    h = tape.affine(h, bind(k), bind(k + 1));
    h = tape.activation(h, config_.activation, config_.leaky_slope);
  }
  std::vector<NodeId> heads;
  for (std::size_t i = 0; i < config_.head_widths.size(); ++i, k += 2) {
    heads.push_back(tape.affine(h, bind(k), bind(k + 1)));
  }
  return heads;
}

std::vector<NodeId> Mlp::build(Tape& tape, NodeId input) {
  return build_with(tape, input, [&](std::size_t k) { return tape.parameter(params_[k]); });
}

std::vector<NodeId> Mlp::build_frozen(Tape& tape, NodeId input) const {
  return build_with(tape, input, [&](std::size_t k) { return tape.frozen(params_[k]); });
}

}  // namespace gfn
