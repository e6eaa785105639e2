#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "gfn/error.hpp"
#include "gfn/params/quantities.hpp"
#include "support.hpp"

using namespace gfn;
using test::grid;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

State gs(std::vector<int> c, bool terminal = false) { return State{std::move(c), terminal}; }

ParamsConfig small_mlp(ParamKind kind = ParamKind::Mlp, BackwardPolicy b = BackwardPolicy::Learned) {
  ParamsConfig c;
  c.kind = kind;
  c.backward = b;
  c.hidden = {16, 16};
  c.init_seed = 3;
  return c;
}

double logsumexp(std::span<const double> v) {
  double m = kNegInf;
  for (double x : v) m = std::max(m, x);
  if (m == kNegInf) return m;
  double acc = 0;
  for (double x : v) acc += std::exp(x - m);
  return m + std::log(acc);
}

}  // namespace

TEST_CASE("tabular zero logits give a uniform forward policy") {
  TabularParams p(grid(2, 4), BackwardPolicy::Learned);
  const auto lp = p.log_pf(gs({1, 1}));
  REQUIRE(lp.size() == 3);
  for (double v : lp) CHECK(v == doctest::Approx(std::log(1.0 / 3)).epsilon(1e-15));
  const auto forced = p.log_pf(gs({3, 3}));
  CHECK(forced[2] == 0.0);
  CHECK(forced[0] == kNegInf);
  CHECK(forced[1] == kNegInf);
  CHECK_THROWS_AS(p.log_pf(gs({1, 1}, true)), ContractViolation);
}

TEST_CASE("edge flows normalize into a forward policy") {
  ParamsConfig c;
  c.kind = ParamKind::EdgeFlow;
  const auto env = grid(1, 4);
  EdgeFlowParams p(env, c);
  REQUIRE(p.uses_table());
  const State s0 = env->initial_state();
  p.edge_table().value.at(env->state_index(s0), 0) = std::log(2.0);
  p.edge_table().value.at(env->state_index(s0), 1) = std::log(6.0);
  const auto lp = p.log_pf(s0);
  CHECK(lp[0] == doctest::Approx(std::log(0.25)).epsilon(1e-15));
  CHECK(lp[1] == doctest::Approx(std::log(0.75)).epsilon(1e-15));
  CHECK(p.log_z() == doctest::Approx(std::log(8.0)).epsilon(1e-15));
  CHECK_THROWS_AS(p.log_pb(gs({1})), ContractViolation);
}

TEST_CASE("backward policies") {
  const auto env = grid(2, 4);
  TabularParams uniform(env, BackwardPolicy::Uniform);
  const auto two = uniform.log_pb(gs({1, 1}));
  CHECK(two[0] == doctest::Approx(std::log(0.5)));
  CHECK(two[1] == doctest::Approx(std::log(0.5)));
  CHECK(two[2] == kNegInf);
  CHECK(uniform.log_pb(gs({0, 2}))[1] == 0.0);
  CHECK(uniform.log_pb(gs({2, 2}, true))[2] == 0.0);

  TabularParams learned(env, BackwardPolicy::Learned);
  learned.pb_logits().value.at(env->state_index(gs({2, 1})), 0) = 1.0;
  learned.pb_logits().value.at(env->state_index(gs({2, 1})), 1) = 1.0;
  const auto lp = learned.log_pb(gs({2, 1}));
  CHECK(lp[0] == doctest::Approx(std::log(0.5)));
  CHECK(lp[1] == doctest::Approx(std::log(0.5)));
  CHECK_THROWS_AS(learned.log_pb(env->initial_state()), ContractViolation);
  CHECK(uniform.parameters().size() + 1 == learned.parameters().size());
}

TEST_CASE("state flows substitute rewards and log Z") {
  const auto env = grid(2, 8);
  TabularParams tab(env, BackwardPolicy::Learned);
  test::randomize(tab, 4);
  CHECK(tab.log_state_flow(gs({7, 7}, true)) == doctest::Approx(std::log(0.501)).epsilon(1e-15));
  CHECK(tab.log_state_flow(gs({3, 5})) == tab.log_flow_table().value[env->state_index(gs({3, 5}))]);
  CHECK(tab.log_state_flow(env->initial_state()) == tab.log_z());

  MlpParams mlp(env, small_mlp());
  mlp.log_z_param().value[0] = 1.25;
  CHECK(mlp.log_state_flow(env->initial_state()) == 1.25);
}

TEST_CASE("policies are normalized for every parameterization") {
  const auto env = grid(2, 5);
  std::vector<std::unique_ptr<ParamSet>> sets;
  sets.push_back(make_paramset(env, ParamsConfig{}));
  sets.push_back(make_paramset(env, small_mlp()));
  sets.push_back(make_paramset(env, small_mlp(ParamKind::Mlp, BackwardPolicy::Uniform)));
  sets.push_back(make_paramset(env, small_mlp(ParamKind::EdgeFlow)));
  ParamsConfig edge_mlp = small_mlp(ParamKind::EdgeFlow);
  edge_mlp.edge_flow_table = false;
  sets.push_back(make_paramset(env, edge_mlp));
  for (auto& p : sets) {
    test::randomize(*p, 11, 0.7);
    const auto states = env->enumerate_states();
    const StateOutputs out = p->evaluate(states);
    for (std::size_t r = 0; r < states.size(); ++r) {
      if (!states[r].terminal) CHECK(std::abs(std::exp(logsumexp(out.log_pf.row(r)))) == doctest::Approx(1.0).epsilon(1e-12));
      if (p->kind() != ParamKind::EdgeFlow && !env->is_initial(states[r]))
        CHECK(std::exp(logsumexp(out.log_pb.row(r))) == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("edge-flow forward policy is log edge flow minus log outflow") {
  ParamsConfig c = small_mlp(ParamKind::EdgeFlow);
  c.edge_flow_table = false;
  const auto env = grid(2, 4);
  const auto p = make_paramset(env, c);
  const auto states = env->enumerate_states();
  const StateOutputs out = p->evaluate(states);
  for (std::size_t r = 0; r < states.size(); ++r) {
    if (states[r].terminal) continue;
    const double total = logsumexp(out.log_edge_flow.row(r));
    CHECK(out.log_flow[r] == total);
    for (std::size_t a : env->forward_actions(states[r])) CHECK(out.log_pf.at(r, a) == out.log_edge_flow.at(r, a) - total);
  }
}

TEST_CASE("trajectory quantities") {
  const auto env = grid(2, 4);
  TabularParams p(env, BackwardPolicy::Learned);
  test::randomize(p, 5);

  SUBCASE("minimal complete trajectory") {
    const auto t = make_trajectory(*env, {env->initial_state(), gs({0, 0}, true)});
    const auto tq = trajectory_quantities(p, t);
    REQUIRE(tq.length() == 1);
    CHECK(tq.log_pf[0] == p.log_pf(env->initial_state())[2]);
    CHECK(tq.log_pb[0] == 0.0);
    CHECK(tq.log_flow[0] == p.log_z());
    CHECK(tq.log_flow[1] == env->log_reward(gs({0, 0}, true)));
    CHECK(tq.flow_learned == std::vector<char>{1, 0});
  }
  SUBCASE("lengths, values and determinism") {
    const auto t = make_trajectory(*env, {gs({0, 0}), gs({1, 0}), gs({1, 1}), gs({1, 2}), gs({1, 2}, true)});
    const auto tq = trajectory_quantities(p, t);
    CHECK(tq.log_pf.size() == 4);
    CHECK(tq.log_pb.size() == 4);
    CHECK(tq.log_flow.size() == 5);
    for (std::size_t i = 0; i < 4; ++i) {
      CHECK(tq.log_pf[i] == p.log_pf(t.states[i])[t.actions[i]]);
      CHECK(tq.log_pb[i] == p.log_pb(t.states[i + 1])[t.actions[i]]);
    }
    CHECK(tq.log_flow[2] == p.log_state_flow(gs({1, 1})));
    const auto again = trajectory_quantities(p, t);
    CHECK(again.log_pf == tq.log_pf);
    CHECK(again.log_pb == tq.log_pb);
    CHECK(again.log_flow == tq.log_flow);
  }
  SUBCASE("invalid transitions are refused") {
    Trajectory bad;
    bad.states = {gs({0, 0}), gs({1, 1})};
    bad.actions = {0};
    CHECK_THROWS_AS(trajectory_quantities(p, bad), ContractViolation);
  }
}

TEST_CASE("batch quantities evaluate each distinct state once") {
  const auto env = grid(2, 4);
  TabularParams p(env, BackwardPolicy::Learned);
  const std::vector<Trajectory> batch{
      make_trajectory(*env, {gs({0, 0}), gs({1, 0}), gs({1, 1}), gs({1, 1}, true)}),
      make_trajectory(*env, {gs({0, 0}), gs({0, 1}), gs({1, 1}), gs({1, 1}, true)}),
      make_trajectory(*env, {gs({0, 0}), gs({1, 0}), gs({1, 0}, true)}),
  };
  p.reset_evaluated_rows();
  BatchQuantities bq(p, batch);
  // s0, (1,0), (1,1), (1,1)T, (0,1), (1,0)T
  CHECK(bq.distinct_states() == 6);
  CHECK(p.evaluated_rows() == 6);
  for (std::size_t t = 0; t < batch.size(); ++t) {
    const auto ref = trajectory_quantities(p, batch[t]);
    CHECK(bq.quantities()[t].log_pf == ref.log_pf);
    CHECK(bq.quantities()[t].log_flow == ref.log_flow);
  }
}

TEST_CASE("terminal flows carry no gradient") {
  const auto env = grid(2, 4);
  MlpParams p(env, small_mlp());
  const std::vector<Trajectory> batch{make_trajectory(*env, {gs({0, 0}), gs({0, 1}), gs({0, 1}, true)})};
  BatchQuantities bq(p, batch);
  p.zero_grad();
  QuantityGradient g(2);
  g.log_flow[2] = 1.0;  // terminal
  bq.backward(std::span<const QuantityGradient>(&g, 1));
  for (const Parameter* q : p.parameters()) {
    for (double v : q->grad.data()) CHECK(v == 0.0);
  }
}

TEST_CASE("parameter gradients through the forward pass match finite differences") {
  const auto env = grid(2, 4);
  for (const ParamKind kind : {ParamKind::Mlp, ParamKind::EdgeFlow}) {
    ParamsConfig c = small_mlp(kind);
    c.hidden = {6};
    c.activation = Activation::Tanh;
    c.edge_flow_table = false;
    const auto p = make_paramset(env, c);
    const auto all = env->enumerate_states();
    const std::vector<State> states(all.begin(), all.begin() + 12);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> nd;
    const StateOutputs base = p->evaluate(states);
    OutputGradients g;
    g.log_pf = Tensor(base.log_pf.shape());
    for (std::size_t i = 0; i < g.log_pf.size(); ++i) g.log_pf[i] = std::isfinite(base.log_pf[i]) ? nd(rng) : 0.0;
    if (kind == ParamKind::Mlp) {
      g.log_pb = Tensor(base.log_pb.shape());
      for (std::size_t i = 0; i < g.log_pb.size(); ++i) g.log_pb[i] = std::isfinite(base.log_pb[i]) ? nd(rng) : 0.0;
      g.log_flow.resize(states.size());
      for (double& v : g.log_flow) v = nd(rng);
      g.log_z = nd(rng);
    } else {
      g.log_edge_flow = Tensor(base.log_edge_flow.shape());
      for (std::size_t i = 0; i < g.log_edge_flow.size(); ++i)
        g.log_edge_flow[i] = std::isfinite(base.log_edge_flow[i]) ? nd(rng) : 0.0;
    }
    const auto functional = [&] {
      const StateOutputs o = p->evaluate(states);
      double acc = 0.0;
      const auto add = [&](const Tensor& w, const Tensor& v) {
        if (w.rank() == 0) return;
        for (std::size_t i = 0; i < w.size(); ++i)
          if (w[i] != 0.0) acc += w[i] * v[i];
      };
      add(g.log_pf, o.log_pf);
      add(g.log_pb, o.log_pb);
      add(g.log_edge_flow, o.log_edge_flow);
      for (std::size_t i = 0; i < g.log_flow.size(); ++i) acc += g.log_flow[i] * o.log_flow[i];
      return acc + g.log_z * p->log_z();
    };
    p->zero_grad();
    ForwardPass pass = p->forward(states);
    pass.backward(g);
    const double h = 1e-6;
    for (Parameter* q : p->parameters()) {
      for (std::size_t i = 0; i < q->value.size(); ++i) {
        const double orig = q->value[i];
        q->value[i] = orig + h;
        const double up = functional();
        q->value[i] = orig - h;
        const double down = functional();
        q->value[i] = orig;
        const double fd = (up - down) / (2 * h);
        CHECK(std::abs(fd - q->grad[i]) / std::max({std::abs(fd), std::abs(q->grad[i]), 1e-3}) < 1e-5);
      }
    }
  }
}

TEST_CASE("checkpoint export and import restore parameters") {
  const auto env = grid(2, 4);
  MlpParams a(env, small_mlp());
  test::randomize(a, 1);
  Checkpoint c;
  a.export_to(c);
  MlpParams b(env, small_mlp());
  b.import_from(c);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  for (std::size_t i = 0; i < pa.size(); ++i) CHECK(pa[i]->value == pb[i]->value);
  MlpParams other(grid(2, 5), small_mlp());
  CHECK_THROWS_AS(other.import_from(c), CheckpointError);
}

TEST_CASE("tabular parameters need an enumerable environment") {
  CHECK_THROWS_AS(TabularParams(test::bitseq(40, 1), BackwardPolicy::Learned), EnumerationRefused);
}

TEST_CASE("inference and differentiable evaluation agree") {
  const auto env = test::bitseq(6, 2, 2);
  MlpParams p(env, small_mlp());
  const auto states = env->enumerate_states();
  const StateOutputs a = p.evaluate(states);
  ForwardPass pass = p.forward(states);
  CHECK(a.log_pf == pass.outputs().log_pf);
  CHECK(a.log_pb == pass.outputs().log_pb);
  CHECK(a.log_flow == pass.outputs().log_flow);
}
