#include <doctest.h>

#include <cmath>
#include <random>

#include "gfn/error.hpp"
#include "gfn/evalsuite/marginal.hpp"
#include "gfn/evalsuite/target.hpp"
#include "gfn/graddiag/true_flows.hpp"
#include "properties.hpp"

using namespace gfn;
using test::grid;

namespace {

TransitionQuantities quantities(std::vector<double> pf, std::vector<double> pb, std::vector<double> flow) {
  TransitionQuantities tq;
  tq.log_pf = std::move(pf);
  tq.log_pb = std::move(pb);
  tq.log_flow = std::move(flow);
  tq.flow_learned.assign(tq.log_flow.size(), 1);
  tq.complete = true;
  return tq;
}

// Quantities whose residuals are exactly `deltas`: flows and P_B zero.
TransitionQuantities from_residuals(const std::vector<double>& deltas) {
  return quantities(deltas, std::vector<double>(deltas.size(), 0.0), std::vector<double>(deltas.size() + 1, 0.0));
}

double loss_from_params(const ParamSet& p, std::span<const Trajectory> batch, const ObjectiveConfig& c) {
  if (c.kind == ObjectiveKind::FM) return fm_batch_loss(p, batch, c.fm_epsilon);
  std::vector<TransitionQuantities> tqs;
  for (const auto& t : batch) tqs.push_back(trajectory_quantities(p, t));
  return quantity_loss(tqs, c).loss;
}

double fd_gradient_error(ParamSet& p, std::span<const Trajectory> batch, const ObjectiveConfig& c) {
  objective_gradient(p, batch, c);
  const auto g = gradient_vector(p);
  std::vector<double> fd;
  const double h = 1e-6;
  for (Parameter* q : p.parameters()) {
    for (std::size_t i = 0; i < q->value.size(); ++i) {
      const double orig = q->value[i];
      q->value[i] = orig + h;
      const double up = loss_from_params(p, batch, c);
      q->value[i] = orig - h;
      const double down = loss_from_params(p, batch, c);
      q->value[i] = orig;
      fd.push_back((up - down) / (2 * h));
    }
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i)
    worst = std::max(worst, std::abs(g[i] - fd[i]) / std::max({std::abs(g[i]), std::abs(fd[i]), 1e-3}));
  return worst;
}

}  // namespace

TEST_CASE("detailed-balance residual") {
  const auto tq = quantities({-1.0}, {-0.7}, {0.0, -0.5});
  CHECK(db_residual(tq, 0) == doctest::Approx(0.2).epsilon(1e-14));
  const auto swapped = quantities({-0.7}, {-1.0}, {-0.5, 0.0});
  CHECK(db_residual(swapped, 0) == doctest::Approx(-0.2).epsilon(1e-14));
  const auto balanced = quantities({std::log(0.25)}, {std::log(0.5)}, {std::log(2.0), 0.0});
  CHECK(std::abs(db_residual(balanced, 0)) < 1e-15);
  CHECK_THROWS_AS(db_residual(tq, 1), ContractViolation);
}

TEST_CASE("subtrajectory balance of a single span") {
  const auto tq = from_residuals({0.1, -0.3});
  CHECK(subtb_loss_single(tq, 0, 2) == doctest::Approx(0.04).epsilon(1e-13));
  CHECK(subtb_loss_single(tq, 1, 2) == doctest::Approx(std::pow(db_residual(tq, 1), 2)).epsilon(1e-15));
  CHECK_THROWS_AS(subtb_loss_single(tq, 1, 1), ContractViolation);
  CHECK_THROWS_AS(subtb_loss_single(tq, 0, 3), ContractViolation);

  std::mt19937_64 rng(5);
  const auto r = test::random_quantities(5, rng);
  CHECK(subtb_loss_single(r, 0, 5) == doctest::Approx(tb_loss(r, r.log_flow[0])).epsilon(1e-12));
  CHECK(test::telescoping_error(200, 1) < 1e-10);
}

TEST_CASE("combined subtrajectory loss") {
  const auto tq = from_residuals({0.1, -0.3});
  CHECK(subtb_loss_combined(std::span(&tq, 1), {.lambda = 1.0}) == doctest::Approx(0.14 / 3).epsilon(1e-13));
  CHECK(subtrajectory_count(3) == 6);
  CHECK(subtrajectory_count(3, 2) == 5);
  CHECK(test::subtrajectory_count_mismatches(20) == 0);
  const auto zero = from_residuals({0, 0, 0, 0});
  CHECK(subtb_loss_combined(std::span(&zero, 1), {}) == 0.0);

  SUBCASE("hand-weighted lambda 0.5 over a length-3 trajectory") {
    const std::vector<double> d{0.2, -0.4, 0.7};
    const auto t3 = from_residuals(d);
    double num = 0, den = 0;
    for (std::size_t i = 0; i < 3; ++i) {
      double r = 0;
      for (std::size_t j = i + 1; j <= 3; ++j) {
        r += d[j - 1];
        const double w = std::pow(0.5, static_cast<double>(j - i));
        num += w * r * r;
        den += w;
      }
    }
    CHECK(subtb_loss_combined(std::span(&t3, 1), {.lambda = 0.5}) == doctest::Approx(num / den).epsilon(1e-13));
  }
  SUBCASE("per-batch and per-trajectory scopes") {
    const std::vector<TransitionQuantities> batch{from_residuals({0.5}), from_residuals({0.1, 0.2})};
    // Per batch, lambda 1: terms 0.25 | 0.01, 0.04, 0.09 over four weights.
    CHECK(subtb_loss_combined(batch, {.lambda = 1.0}) == doctest::Approx(0.39 / 4).epsilon(1e-13));
    CHECK(subtb_loss_combined(batch, {.lambda = 1.0, .scope = NormalizationScope::PerTrajectory}) ==
          doctest::Approx((0.25 + 0.14 / 3) / 2).epsilon(1e-13));
  }
  SUBCASE("extreme lambdas over long trajectories stay finite") {
    std::mt19937_64 rng(2);
    const auto tq512 = test::random_quantities(512, rng);
    for (double lambda : {1e-8, 1e8}) {
      for (auto scope : {NormalizationScope::PerBatch, NormalizationScope::PerTrajectory})
        CHECK(std::isfinite(subtb_loss_combined(std::span(&tq512, 1), {.lambda = lambda, .scope = scope})));
    }
  }
  CHECK_THROWS_AS(subtb_loss_combined(std::span(&tq, 1), {.lambda = 0.0}), ConfigError);
  CHECK_THROWS_AS(subtb_loss_combined(std::span(&tq, 1), {.lambda = 1.0, .max_length = 0}), ConfigError);
}

TEST_CASE("truncation consistency") {
  std::mt19937_64 rng(8);
  std::vector<TransitionQuantities> batch;
  for (std::size_t n : {3, 7, 7, 1}) batch.push_back(test::random_quantities(n, rng));
  const double unbounded = subtb_loss_combined(batch, {.lambda = 0.9});
  CHECK(subtb_loss_combined(batch, {.lambda = 0.9, .max_length = 7}) == unbounded);
  CHECK(subtb_loss_combined(batch, {.lambda = 0.9, .max_length = 1}) == doctest::Approx(db_loss_mean(batch)).epsilon(1e-13));
  CHECK(subtb_loss_combined(batch, {.lambda = 0.9, .max_length = 4}) != doctest::Approx(unbounded));
}

TEST_CASE("lambda interpolates between DB and TB") {
  std::mt19937_64 rng(4);
  std::vector<TransitionQuantities> equal_length;
  for (int i = 0; i < 5; ++i) equal_length.push_back(test::random_quantities(6, rng));
  CHECK(test::rel_err(subtb_loss_combined(equal_length, {.lambda = 1e-8}), db_loss_mean(equal_length)) < 1e-6);
  CHECK(test::rel_err(subtb_loss_combined(equal_length, {.lambda = 1e8}), tb_loss_mean(equal_length)) < 1e-6);

  const auto e = test::lambda_limit_errors(5, 3);
  CHECK(e.small_lambda_loss < 1e-6);
  CHECK(e.small_lambda_grad < 1e-6);
  CHECK(e.large_lambda_loss < 1e-6);
  CHECK(e.large_lambda_grad < 1e-6);

  // Monotone drift of the loss between the endpoints for fixed quantities.
  const auto tq = from_residuals({0.3, 0.3, 0.3, 0.3});
  double prev = -1;
  for (double lambda : {1e-6, 0.1, 0.5, 1.0, 2.0, 10.0, 1e6}) {
    const double l = subtb_loss_combined(std::span(&tq, 1), {.lambda = lambda});
    CHECK(l > prev);
    prev = l;
  }
}

TEST_CASE("trajectory balance") {
  auto tq = quantities({-1.5, -0.5}, {-0.25, -0.25}, {7.0, 3.0, -1.0});
  CHECK(tb_loss(tq, 0.0) == doctest::Approx(0.25).epsilon(1e-14));
  const auto one = quantities({-0.4}, {0.0}, {1.0, 0.3});
  CHECK(tb_loss(one, 1.0) == doctest::Approx(std::pow(db_residual(one, 0), 2)).epsilon(1e-14));
  tq.complete = false;
  CHECK_THROWS_AS(tb_loss(tq, 0.0), ContractViolation);
}

TEST_CASE("flow matching") {
  const std::vector<double> two{2.0}, one{1.0}, zero{0.0}, parts{0.5, 1.5};
  CHECK(fm_loss(two, one, 0.0) == doctest::Approx(std::log(2.0) * std::log(2.0)).epsilon(1e-14));
  CHECK(fm_loss(zero, zero, 1.0) == 0.0);
  CHECK(fm_loss(parts, two, 0.0) == 0.0);
  CHECK_THROWS_AS(fm_loss(zero, one, 0.0), ContractViolation);
}

TEST_CASE("objective gradients match finite differences") {
  const auto env = grid(2, 4);
  CounterRng rng(1, 0);
  SUBCASE("tabular") {
    TabularParams p(env, BackwardPolicy::Learned);
    test::randomize(p, 2, 0.5);
    const auto batch = sample_batch(p, {.epsilon = 0.2}, 6, rng);
    for (auto kind : {ObjectiveKind::DB, ObjectiveKind::TB, ObjectiveKind::SubTB}) {
      CHECK(fd_gradient_error(p, batch, {.kind = kind, .subtb = {.lambda = 1.9}}) < 1e-5);
      CHECK(fd_gradient_error(p, batch, {.kind = kind, .subtb = {.lambda = 0.9, .max_length = 2,
                                                                 .scope = NormalizationScope::PerTrajectory}}) < 1e-5);
    }
  }
  SUBCASE("mlp with uniform backward policy") {
    ParamsConfig c;
    c.kind = ParamKind::Mlp;
    c.backward = BackwardPolicy::Uniform;
    c.hidden = {5};
    c.activation = Activation::Tanh;
    const auto p = make_paramset(env, c);
    const auto batch = sample_batch(*p, {.epsilon = 0.5}, 4, rng);
    CHECK(fd_gradient_error(*p, batch, {.kind = ObjectiveKind::SubTB}) < 1e-5);
    CHECK(fd_gradient_error(*p, batch, {.kind = ObjectiveKind::TB}) < 1e-5);
  }
  SUBCASE("flow matching over edge flows") {
    ParamsConfig c;
    c.kind = ParamKind::EdgeFlow;
    const auto p = make_paramset(env, c);
    test::randomize(*p, 9, 0.5);
    const auto batch = sample_batch(*p, {.epsilon = 0.5}, 5, rng);
    CHECK(fd_gradient_error(*p, batch, {.kind = ObjectiveKind::FM}) < 1e-5);
    CHECK(fd_gradient_error(*p, batch, {.kind = ObjectiveKind::FM, .fm_epsilon = 0.1}) < 1e-5);
  }
}

TEST_CASE("balanced parameters have zero loss, zero gradient and sample R/Z") {
  for (auto [dim, size] : {std::pair{1, 4}, std::pair{2, 2}, std::pair{2, 3}, std::pair{2, 4}}) {
    const auto env = grid(dim, size);
    TabularParams p(env, BackwardPolicy::Learned);
    test::randomize(p, 7, 0.5);
    p.pf_logits().value.fill(0.0);
    const StateFlows fb = true_backward_flow(p);
    const auto states = env->enumerate_states();
    const StateOutputs out = p.evaluate(states);
    for (std::size_t r = 0; r < states.size(); ++r) {
      const std::size_t idx = env->state_index(states[r]);
      p.log_flow_table().value[idx] = fb.log_flow[idx];
      if (states[r].terminal) continue;
      for (std::size_t a : env->forward_actions(states[r])) {
        const State child = env->apply(states[r], a);
        const double lpb = p.log_pb(child)[a];
        p.pf_logits().value.at(idx, a) = fb.at(*env, child) + lpb - fb.log_flow[idx];
      }
    }
    p.log_z_param().value[0] = fb.log_z;
    const auto all = test::all_trajectories(*env);
    for (auto kind : {ObjectiveKind::DB, ObjectiveKind::TB, ObjectiveKind::SubTB}) {
      const auto g = objective_gradient(p, all, {.kind = kind});
      CHECK(g.loss < 1e-24);
      for (double v : gradient_vector(p)) CHECK(std::abs(v) < 1e-11);
    }
    const auto target = exact_target(*env);
    const auto logp = terminal_log_probabilities(p);
    for (std::size_t i = 0; i < logp.size(); ++i) CHECK(std::exp(logp[i]) == doctest::Approx(target.probability[i]).epsilon(1e-12));
  }
}

TEST_CASE("objective gradient evaluates each distinct state once") {
  const auto env = grid(2, 8);
  ParamsConfig c;
  c.kind = ParamKind::Mlp;
  c.hidden = {8};
  const auto p = make_paramset(env, c);
  CounterRng rng(3, 0);
  const auto batch = sample_batch(*p, {.epsilon = 1.0}, 16, rng);
  p->reset_evaluated_rows();
  const auto sub = objective_gradient(*p, batch, {.kind = ObjectiveKind::SubTB});
  CHECK(p->evaluated_rows() == sub.distinct_states);
  p->reset_evaluated_rows();
  objective_gradient(*p, batch, {.kind = ObjectiveKind::DB});
  CHECK(p->evaluated_rows() == sub.distinct_states);
}

TEST_CASE("non-finite losses name the trajectory") {
  const auto env = grid(2, 4);
  TabularParams p(env, BackwardPolicy::Learned);
  CounterRng rng(1, 0);
  const auto batch = sample_batch(p, {}, 3, rng);
  p.log_z_param().value[0] = std::numeric_limits<double>::infinity();
  try {
    objective_gradient(p, batch, {.kind = ObjectiveKind::TB});
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(std::string(e.what()).find("trajectory 0") != std::string::npos);
  }
}
