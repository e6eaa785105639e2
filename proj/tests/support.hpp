#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <random>
#include <vector>

#include "gfn/envcore/bitseq.hpp"
#include "gfn/envcore/hypergrid.hpp"
#include "gfn/envcore/trajectory.hpp"
#include "gfn/params/paramset.hpp"

namespace gfn::test {

inline std::shared_ptr<const Environment> grid(int dim, int size, bool harder = false) {
  return make_hypergrid(harder ? HypergridConfig::harder(dim, size) : HypergridConfig::standard(dim, size));
}

inline std::shared_ptr<const Environment> bitseq(int n, int k, int modes = 2, std::uint64_t seed = 0) {
  BitSequenceConfig c;
  c.length = n;
  c.bits_per_token = k;
  c.num_modes = modes;
  c.mode_seed = seed;
  return make_bit_sequence(c);
}

inline double rel_err(double a, double b, double floor = 1e-12) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

inline void randomize(ParamSet& params, std::uint64_t seed, double scale = 1.0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, scale);
  for (Parameter* p : params.parameters()) {
    for (double& v : p->value.data()) v = n(rng);
  }
}

// Every complete trajectory from s_0, by depth-first expansion of children.
inline std::vector<Trajectory> all_trajectories(const Environment& env) {
  std::vector<Trajectory> out;
  std::vector<State> path{env.initial_state()};
  std::function<void()> rec = [&] {
    const State& s = path.back();
    if (s.terminal) {
      out.push_back(make_trajectory(env, path));
      return;
    }
    for (State& c : env.children(s)) {
      path.push_back(std::move(c));
      rec();
      path.pop_back();
    }
  };
  rec();
  return out;
}

// Product of single-state P_F queries along the trajectory.
inline double forward_probability(const ParamSet& params, const Trajectory& t) {
  double p = 1.0;
  for (std::size_t i = 0; i < t.length(); ++i) p *= std::exp(params.log_pf(t.states[i])[t.actions[i]]);
  return p;
}

// Product of single-state P_B queries along the trajectory.
inline double backward_probability(const ParamSet& params, const Trajectory& t) {
  const Environment& env = params.environment();
  double p = 1.0;
  for (std::size_t i = 0; i < t.length(); ++i) {
    const auto lp = params.log_pb(t.states[i + 1]);
    p *= std::exp(lp[env.action_between(t.states[i], t.states[i + 1])]);
  }
  return p;
}

}  // namespace gfn::test
