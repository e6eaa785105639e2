#include "gfn/objectives/gradient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "gfn/error.hpp"
#include "gfn/params/quantities.hpp"

namespace gfn {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string describe(const Trajectory& traj) {
  std::string s;
  for (std::size_t i = 0; i < traj.states.size(); ++i) {
    if (i) s += " -> ";
    s += to_string(traj.states[i]);
  }
  return s;
}

bool finite_quantities(const TransitionQuantities& tq) {
  const auto ok = [](const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
  };
  return ok(tq.log_pf) && ok(tq.log_pb) && ok(tq.log_flow);
}

[[noreturn]] void non_finite(std::span<const Trajectory> batch, std::size_t t) {
  throw NonFiniteError("non-finite loss at trajectory " + std::to_string(t) + ": " + describe(batch[t]));
}

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

// One flow-matching term: log-domain edge flows in and out of a state.
struct FmTerm {
  std::vector<std::pair<std::size_t, std::size_t>> in;   // (row, action)
  std::vector<std::pair<std::size_t, std::size_t>> out;  // (row, action); empty for a terminal
  double log_reward = 0.0;
  bool terminal = false;
};

struct FmProblem {
  std::vector<State> states;
  std::vector<FmTerm> terms;
  std::vector<std::size_t> term_owner;  // trajectory index per term
};

FmProblem build_fm(const Environment& env, std::span<const Trajectory> batch) {
  FmProblem p;
  std::unordered_map<State, std::size_t, StateHash> index;
  const auto row = [&](const State& s) {
    auto [it, inserted] = index.try_emplace(s, p.states.size());
    if (inserted) p.states.push_back(s);
    return it->second;
  };
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const Trajectory& traj = batch[t];
    validate(env, traj);
    for (std::size_t i = 0; i < traj.states.size(); ++i) {
      const State& s = traj.states[i];
      if (env.is_initial(s)) continue;
      FmTerm term;
      for (std::size_t a : env.backward_actions(s)) term.in.emplace_back(row(env.undo(s, a)), a);
      if (s.terminal) {
        term.terminal = true;
        term.log_reward = env.log_reward(s);
      } else {
        const std::size_t r = row(s);
        for (std::size_t a : env.forward_actions(s)) term.out.emplace_back(r, a);
      }
      p.terms.push_back(std::move(term));
      p.term_owner.push_back(t);
    }
  }
  return p;
}

double log_total(const Tensor& edges, const std::vector<std::pair<std::size_t, std::size_t>>& set, double log_eps) {
  double acc = log_eps;
  for (auto [r, a] : set) acc = log_add(acc, edges.at(r, a));
  return acc;
}

// Returns the loss; when `grad` is set, fills dL/d(log edge flow).
double fm_evaluate(const FmProblem& p, const Tensor& edges, double eps, Tensor* grad,
                   std::span<const Trajectory> batch) {
  if (p.terms.empty()) throw ContractViolation("fm: batch has no non-initial states");
  const double log_eps = eps > 0 ? std::log(eps) : kNegInf;
  const double inv = 1.0 / static_cast<double>(p.terms.size());
  double loss = 0.0;
  for (std::size_t k = 0; k < p.terms.size(); ++k) {
    const FmTerm& term = p.terms[k];
    const double lin = term.terminal ? log_total(edges, term.in, kNegInf) : log_total(edges, term.in, log_eps);
    const double lout = term.terminal ? term.log_reward : log_total(edges, term.out, log_eps);
    const double r = lin - lout;
    if (!std::isfinite(r)) non_finite(batch, p.term_owner[k]);
    loss += r * r * inv;
    if (!grad) continue;
    const double g = 2.0 * r * inv;
    for (auto [row, a] : term.in) grad->at(row, a) += g * std::exp(edges.at(row, a) - lin);
    for (auto [row, a] : term.out) grad->at(row, a) -= g * std::exp(edges.at(row, a) - lout);
  }
  return loss;
}

GradientResult fm_gradient(ParamSet& params, std::span<const Trajectory> batch, double eps) {
  if (params.kind() != ParamKind::EdgeFlow) throw ContractViolation("fm: flow matching needs edge-flow parameters");
  const FmProblem p = build_fm(params.environment(), batch);
  ForwardPass pass = params.forward(p.states);
  OutputGradients g;
  g.log_edge_flow.reset(pass.outputs().log_edge_flow.shape(), 0.0);
  GradientResult res;
  res.loss = fm_evaluate(p, pass.outputs().log_edge_flow, eps, &g.log_edge_flow, batch);
  res.distinct_states = pass.rows();
  pass.backward(g);
  return res;
}

}  // namespace

double fm_batch_loss(const ParamSet& params, std::span<const Trajectory> batch, double eps) {
  if (params.kind() != ParamKind::EdgeFlow) throw ContractViolation("fm: flow matching needs edge-flow parameters");
  const FmProblem p = build_fm(params.environment(), batch);
  const StateOutputs out = params.evaluate(p.states);
  return fm_evaluate(p, out.log_edge_flow, eps, nullptr, batch);
}

GradientResult objective_gradient(ParamSet& params, std::span<const Trajectory> batch, const ObjectiveConfig& config) {
  config.validate();
  if (batch.empty()) throw ContractViolation("objective_gradient: empty batch");
  params.zero_grad();
  if (config.kind == ObjectiveKind::FM) return fm_gradient(params, batch, config.fm_epsilon);

  BatchQuantities bq(params, batch);
  const auto tqs = bq.quantities();
  for (std::size_t t = 0; t < tqs.size(); ++t) {
    if (!finite_quantities(tqs[t])) non_finite(batch, t);
  }
  QuantityLoss ql = quantity_loss(tqs, config);
  if (!std::isfinite(ql.loss)) non_finite(batch, 0);
  bq.backward(ql.grads);
  return GradientResult{.loss = ql.loss, .distinct_states = bq.distinct_states()};
}

std::vector<double> gradient_vector(const ParamSet& params) {
  std::vector<double> g;
  for (const Parameter* p : params.parameters()) {
    const auto d = p->grad.data();
    if (p->grad.size() != p->value.size()) {
      g.insert(g.end(), p->value.size(), 0.0);
    } else {
      g.insert(g.end(), d.begin(), d.end());
    }
  }
  return g;
}

}  // namespace gfn
