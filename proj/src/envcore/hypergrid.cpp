#include "gfn/envcore/hypergrid.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "gfn/error.hpp"

namespace gfn {

HypergridConfig HypergridConfig::standard(int dim, int size) {
  HypergridConfig c;
  c.dim = dim;
  c.size = size;
  c.r0 = 1e-3;
  c.r1 = 0.5;
  c.r2 = 2.0;
  return c;
}

HypergridConfig HypergridConfig::harder(int dim, int size) {
  HypergridConfig c;
  c.dim = dim;
  c.size = size;
  c.r0 = 1e-4;
  c.r1 = 1.0;
  c.r2 = 3.0;
  return c;
}

Hypergrid::Hypergrid(const HypergridConfig& config) : config_(config) {
  if (config.dim < 1) throw ConfigError("hypergrid: dim must be >= 1");
  if (config.size < 2) throw ConfigError("hypergrid: size must be >= 2");
  if (config.r0 < 0 || config.r1 < 0 || config.r2 < 0)
    throw ConfigError("hypergrid: reward parameters must be nonnegative");
  if (!(config.beta > 0)) throw ConfigError("hypergrid: beta must be positive");
  std::size_t points = 1;
  for (int i = 0; i < config.dim; ++i) {
    if (points > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(config.size)) {
      points = std::numeric_limits<std::size_t>::max();
      break;
    }
    points *= static_cast<std::size_t>(config.size);
  }
  lattice_points_ = points;
}

std::string Hypergrid::signature() const {
  std::ostringstream out;
  out << "hypergrid(d=" << config_.dim << ",H=" << config_.size << ")";
  return out.str();
}

void Hypergrid::check_coords(const State& s) const {
  if (s.cells.size() != static_cast<std::size_t>(config_.dim))
    throw ContractViolation("hypergrid: state " + to_string(s) + " has wrong dimension");
  for (int c : s.cells) {
    if (c < 0 || c >= config_.size)
      throw ContractViolation("hypergrid: state " + to_string(s) + " is outside the grid");
  }
}

State Hypergrid::initial_state() const {
  return State{std::vector<int>(static_cast<std::size_t>(config_.dim), 0), false};
}

std::vector<std::size_t> Hypergrid::forward_actions(const State& s) const {
  if (s.terminal) throw ContractViolation("hypergrid: terminal state " + to_string(s) + " has no children");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.cells.size(); ++i) {
    if (s.cells[i] < config_.size - 1) out.push_back(i);
  }
  out.push_back(stop_action());
  return out;
}

std::vector<std::size_t> Hypergrid::backward_actions(const State& t) const {
  if (t.terminal) return {stop_action()};
  if (is_initial(t)) throw ContractViolation("hypergrid: initial state has no parents");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < t.cells.size(); ++i) {
    if (t.cells[i] > 0) out.push_back(i);
  }
  return out;
}

State Hypergrid::apply(const State& s, std::size_t action) const {
  if (s.terminal) throw ContractViolation("hypergrid: cannot act from terminal state " + to_string(s));
  State t = s;
  if (action == stop_action()) {
    t.terminal = true;
    return t;
  }
  if (action > stop_action() || s.cells[action] >= config_.size - 1)
    throw ContractViolation("hypergrid: invalid action " + std::to_string(action) + " at " + to_string(s));
  ++t.cells[action];
  return t;
}

State Hypergrid::undo(const State& t, std::size_t backward_action) const {
  if (t.terminal) {
    if (backward_action != stop_action())
      throw ContractViolation("hypergrid: terminal state only has the stop parent");
    State s = t;
    s.terminal = false;
    return s;
  }
  if (backward_action >= stop_action() || t.cells[backward_action] == 0)
    throw ContractViolation("hypergrid: invalid backward action " + std::to_string(backward_action) +
                            " at " + to_string(t));
  State s = t;
  --s.cells[backward_action];
  return s;
}

double Hypergrid::base_reward(std::span<const int> coords) const {
  const double denom = static_cast<double>(config_.size - 1);
  bool outer = true;
  bool band = true;
  for (int c : coords) {
    const double a = std::abs(static_cast<double>(c) / denom - 0.5);
    outer = outer && (a > 0.25 && a <= 0.5);
    band = band && (a > 0.3 && a < 0.4);
  }
  return config_.r0 + (outer ? config_.r1 : 0.0) + (band ? config_.r2 : 0.0);
}

double Hypergrid::log_reward(const State& x) const {
  if (!x.terminal) throw ContractViolation("hypergrid: reward of non-terminal state " + to_string(x));
  check_coords(x);
  return config_.beta * std::log(base_reward(x.cells));
}

std::size_t Hypergrid::feature_width() const {
  return static_cast<std::size_t>(config_.dim) * static_cast<std::size_t>(config_.size) + 1;
}

void Hypergrid::encode(const State& s, std::span<double> out) const {
  if (out.size() != feature_width()) throw ShapeError("hypergrid: encode buffer has wrong width");
  check_coords(s);
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < s.cells.size(); ++i) {
    out[i * static_cast<std::size_t>(config_.size) + static_cast<std::size_t>(s.cells[i])] = 1.0;
  }
  out.back() = s.terminal ? 1.0 : 0.0;
}

std::size_t Hypergrid::max_trajectory_length() const {
  return static_cast<std::size_t>(config_.dim) * static_cast<std::size_t>(config_.size - 1) + 1;
}

std::size_t Hypergrid::topological_rank(const State& s) const {
  std::size_t sum = 0;
  for (int c : s.cells) sum += static_cast<std::size_t>(c);
  return 2 * sum + (s.terminal ? 1 : 0);
}

bool Hypergrid::enumerable() const {
  return lattice_points_ <= config_.enumeration_budget / 2;
}

std::size_t Hypergrid::state_count() const {
  if (!enumerable()) throw EnumerationRefused("hypergrid: " + signature() + " exceeds the enumeration budget");
  return 2 * lattice_points_;
}

std::size_t Hypergrid::state_index(const State& s) const {
  check_coords(s);
  std::size_t index = 0;
  for (std::size_t i = s.cells.size(); i-- > 0;) {
    index = index * static_cast<std::size_t>(config_.size) + static_cast<std::size_t>(s.cells[i]);
  }
  return index + (s.terminal ? lattice_points_ : 0);
}

std::vector<State> Hypergrid::enumerate_states() const {
  const std::size_t n = state_count();
  std::vector<std::vector<State>> by_rank(2 * static_cast<std::size_t>(config_.dim) *
                                              static_cast<std::size_t>(config_.size) + 2);
  for (const State& x : enumerate_terminal_states()) {
    State s = x;
    s.terminal = false;
    by_rank[topological_rank(s)].push_back(s);
    by_rank[topological_rank(x)].push_back(x);
  }
  std::vector<State> out;
  out.reserve(n);
  for (auto& bucket : by_rank) {
    for (auto& s : bucket) out.push_back(std::move(s));
  }
  return out;
}

std::vector<State> Hypergrid::enumerate_terminal_states() const {
  if (!enumerable()) throw EnumerationRefused("hypergrid: " + signature() + " exceeds the enumeration budget");
  std::vector<State> out;
  out.reserve(lattice_points_);
  std::vector<int> coords(static_cast<std::size_t>(config_.dim), 0);
  for (std::size_t p = 0; p < lattice_points_; ++p) {
    std::size_t rest = p;
    for (auto& c : coords) {
      c = static_cast<int>(rest % static_cast<std::size_t>(config_.size));
      rest /= static_cast<std::size_t>(config_.size);
    }
    out.push_back(State{coords, true});
  }
  return out;
}

std::size_t Hypergrid::mode_count() const { return std::size_t{1} << config_.dim; }

std::vector<std::size_t> Hypergrid::modes_of(const State& x) const {
  if (!x.terminal) return {};
  check_coords(x);
  // A mode member lies in the high-reward band of every coordinate; the mode
  // is the corner it sits next to.
  const double denom = static_cast<double>(config_.size - 1);
  std::size_t corner = 0;
  for (std::size_t i = 0; i < x.cells.size(); ++i) {
    const double offset = static_cast<double>(x.cells[i]) / denom - 0.5;
    const double a = std::abs(offset);
    if (!(a > 0.3 && a < 0.4)) return {};
    if (offset > 0) corner |= std::size_t{1} << i;
  }
  return {corner};
}

std::unique_ptr<Environment> make_hypergrid(const HypergridConfig& config) {
  return std::make_unique<Hypergrid>(config);
}

}  // namespace gfn
