#include "gfn/sampler/sampler.hpp"

#include <cmath>
#include <limits>

#include "gfn/error.hpp"

namespace gfn {

void ExplorationConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ConfigError("exploration: epsilon must lie in [0, 1]");
  if (!(temperature > 0.0) || !std::isfinite(temperature)) throw ConfigError("exploration: temperature must be positive");
}

std::vector<double> step_distribution(const Environment& env, const State& s, std::span<const double> log_pf_row,
                                      const ExplorationConfig& exploration) {
  const auto valid = env.forward_actions(s);
  if (valid.empty()) throw ContractViolation("sampler: state " + to_string(s) + " has no children");
  std::vector<double> p(log_pf_row.size(), 0.0);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t a : valid) {
    const double v = log_pf_row[a];
    if (std::isnan(v) || v == std::numeric_limits<double>::infinity())
      throw NonFiniteError("sampler: non-finite policy logits at state " + to_string(s));
    mx = std::max(mx, v / exploration.temperature);
  }
  if (!std::isfinite(mx)) throw NonFiniteError("sampler: non-finite policy logits at state " + to_string(s));
  double total = 0.0;
  for (std::size_t a : valid) total += p[a] = std::exp(log_pf_row[a] / exploration.temperature - mx);
  const double u = exploration.epsilon / static_cast<double>(valid.size());
  for (std::size_t a : valid) p[a] = (1.0 - exploration.epsilon) * (p[a] / total) + u;
  return p;
}

namespace {

std::size_t draw(const std::vector<double>& p, double u) {
  double cum = 0.0;
  std::size_t last = 0;
  for (std::size_t a = 0; a < p.size(); ++a) {
    if (p[a] <= 0.0) continue;
    cum += p[a];
    last = a;
    if (u < cum) return a;
  }
  return last;
}

}  // namespace

std::vector<Trajectory> sample_batch(const ParamSet& params, const ExplorationConfig& exploration,
                                     std::size_t batch_size, CounterRng& rng) {
  exploration.validate();
  if (batch_size == 0) throw ContractViolation("sample_batch: batch size must be at least 1");
  const Environment& env = params.environment();
  std::vector<Trajectory> out(batch_size);
  for (auto& t : out) t.states.push_back(env.initial_state());
  std::vector<std::size_t> active(batch_size);
  for (std::size_t i = 0; i < batch_size; ++i) active[i] = i;
  std::vector<State> current;
  while (!active.empty()) {
    current.clear();
    for (std::size_t i : active) current.push_back(out[i].states.back());
    const StateOutputs o = params.evaluate(current);
    std::vector<std::size_t> still;
    for (std::size_t k = 0; k < active.size(); ++k) {
      Trajectory& t = out[active[k]];
      const auto p = step_distribution(env, current[k], o.log_pf.row(k), exploration);
      const std::size_t a = draw(p, rng.uniform());
      t.actions.push_back(a);
      t.states.push_back(env.apply(current[k], a));
      if (!t.states.back().terminal) still.push_back(active[k]);
    }
    active.swap(still);
  }
  for (auto& t : out) t.complete = true;
  return out;
}

Trajectory sample_trajectory(const ParamSet& params, const ExplorationConfig& exploration, CounterRng& rng) {
  return std::move(sample_batch(params, exploration, 1, rng).front());
}

std::vector<Trajectory> sample_batch(const ParamSet& params, const ExplorationConfig& exploration,
                                     std::size_t batch_size, std::uint64_t batch_index) {
  CounterRng rng(exploration.seed, batch_index);
  return sample_batch(params, exploration, batch_size, rng);
}

double sampling_log_probability(const ParamSet& params, const ExplorationConfig& exploration,
                                const Trajectory& trajectory) {
  exploration.validate();
  const Environment& env = params.environment();
  validate(env, trajectory);
  if (trajectory.length() == 0) return 0.0;
  std::vector<State> heads(trajectory.states.begin(), trajectory.states.end() - 1);
  const StateOutputs o = params.evaluate(heads);
  double lp = 0.0;
  for (std::size_t i = 0; i < heads.size(); ++i) {
    const auto p = step_distribution(env, heads[i], o.log_pf.row(i), exploration);
    lp += std::log(p[trajectory.actions[i]]);
  }
  return lp;
}

}  // namespace gfn
