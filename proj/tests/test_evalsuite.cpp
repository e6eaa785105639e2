#include <doctest.h>

#include <cmath>
#include <random>

#include "gfn/error.hpp"
#include "gfn/evalsuite/history.hpp"
#include "gfn/evalsuite/statistics.hpp"
#include "gfn/evalsuite/target.hpp"
#include "oracles.hpp"

using namespace gfn;
using test::grid;

namespace {

State gs(std::vector<int> c, bool terminal = false) { return State{std::move(c), terminal}; }

}  // namespace

TEST_CASE("exact targets") {
  SUBCASE("two-state grid is uniform under a constant reward") {
    const auto t = exact_target(*grid(1, 2));
    REQUIRE(t.states.size() == 2);
    CHECK(t.probability[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(t.probability[1] == doctest::Approx(0.5).epsilon(1e-15));
  }
  SUBCASE("partition function by exhaustive summation") {
    const auto env = grid(2, 8);
    const auto t = exact_target(*env);
    double z = 0;
    for (int a = 0; a < 8; ++a)
      for (int b = 0; b < 8; ++b) z += std::exp(env->log_reward(gs({a, b}, true)));
    CHECK(std::exp(t.log_z) == doctest::Approx(z).epsilon(1e-13));
    double total = 0;
    for (double p : t.probability) {
      CHECK(p > 0);
      total += p;
    }
    CHECK(std::abs(total - 1) < 1e-12);
    CHECK(t.find(gs({3, 4}, true)).has_value());
    CHECK_FALSE(t.find(gs({3, 4})).has_value());
  }
  SUBCASE("a single bit-sequence mode is the most likely string") {
    const auto env = test::bitseq(4, 1, 1);
    const auto t = exact_target(*env);
    const auto best = std::max_element(t.probability.begin(), t.probability.end()) - t.probability.begin();
    CHECK(env->modes_of(t.states[best]).size() == 1);
    CHECK(t.log_reward[best] == 0.0);
  }
  CHECK_THROWS_AS(exact_target(*test::bitseq(40, 1)), EnumerationRefused);
}

TEST_CASE("empirical L1") {
  const auto env = grid(1, 2);
  const auto target = exact_target(*env);
  const State a = gs({0}, true), b = gs({1}, true);
  SampleWindow w;
  w.push(a);
  w.push(b);
  CHECK(empirical_l1(w, target) == doctest::Approx(0.0).scale(1.0).epsilon(1e-15));
  SampleWindow one;
  for (int i = 0; i < 5; ++i) one.push(a);
  CHECK(empirical_l1(one, target) == doctest::Approx(1.0).epsilon(1e-15));

  const auto g = grid(2, 3);
  const auto tg = exact_target(*g);
  SampleWindow outside;
  outside.push(gs({2, 2}, true));
  const double l1 = empirical_l1(outside, tg);
  CHECK(l1 >= 0);
  CHECK(l1 <= 2);
  CHECK(l1 == doctest::Approx(2 - 2 * tg.probability[*tg.find(gs({2, 2}, true))]).epsilon(1e-13));
}

TEST_CASE("sample window evicts oldest first") {
  SampleWindow w(3);
  for (int i = 0; i < 5; ++i) w.push(gs({i}, true));
  CHECK(w.size() == 3);
  CHECK(w.count(gs({0}, true)) == 0);
  CHECK(w.count(gs({4}, true)) == 1);
  CHECK(w.contents().front() == gs({2}, true));
  CHECK(SampleWindow().capacity() == 200000);
}

TEST_CASE("rank and linear correlations") {
  const std::vector<double> a{1, 2, 3}, b{3, 1, 2}, rev{3, 2, 1};
  CHECK(spearman(a, b) == doctest::Approx(-0.5).epsilon(1e-14));
  CHECK(spearman(a, a) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(spearman(a, rev) == doctest::Approx(-1.0).epsilon(1e-14));
  const std::vector<double> ties{1, 1, 2, 3};
  CHECK(average_ranks(ties) == std::vector<double>{1.5, 1.5, 3, 4});

  const std::vector<double> lr{-3.0, -1.0, 0.5, 2.0};
  std::vector<double> shifted, negated;
  for (double v : lr) {
    shifted.push_back(v - 4.2);
    negated.push_back(-v);
  }
  CHECK(pearson_loglog(shifted, lr) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(pearson_loglog(negated, lr) == doctest::Approx(-1.0).epsilon(1e-14));

  std::mt19937_64 rng(12);
  std::normal_distribution<double> nd;
  std::vector<double> x(10000), y(10000);
  for (auto& v : x) v = nd(rng);
  for (auto& v : y) v = nd(rng);
  CHECK(std::abs(pearson(x, y)) < 0.05);

  const std::vector<double> flat{2, 2, 2};
  CHECK_THROWS_AS(spearman(flat, a), UndefinedStatistic);
  CHECK_THROWS_AS(pearson(a, flat), UndefinedStatistic);
  CHECK_THROWS_AS(pearson(std::vector<double>{1}, std::vector<double>{1}), ContractViolation);
  CHECK_THROWS_AS(spearman(a, std::vector<double>{1, 2}), ContractViolation);
}

TEST_CASE("marginal likelihoods") {
  SUBCASE("tree-structured sequences follow their unique path") {
    const auto env = test::bitseq(6, 2);
    TabularParams p(env, BackwardPolicy::Learned);
    test::randomize(p, 3);
    for (const Trajectory& t : test::all_trajectories(*env)) {
      double sum = 0;
      for (std::size_t i = 0; i < t.length(); ++i) sum += p.log_pf(t.states[i])[t.actions[i]];
      CHECK(marginal_loglik(p, t.terminal_state()).value == doctest::Approx(sum).epsilon(1e-13));
    }
  }
  SUBCASE("2x2 grid under the uniform policy matches enumeration") {
    TabularParams p(grid(2, 2), BackwardPolicy::Learned);
    const auto b = test::brute_force(p, false);
    for (const auto& [x, prob] : b.terminal_prob) CHECK(std::abs(marginal_loglik(p, x).value - std::log(prob)) < 1e-12);
  }
  SUBCASE("dynamic program agrees with enumeration on small environments") {
    for (auto [d, h] : {std::pair{1, 4}, std::pair{2, 2}, std::pair{2, 3}, std::pair{2, 4}})
      CHECK(test::dp_oracle_error(grid(d, h), 10, d * 10 + h) < 1e-10);
    CHECK(test::dp_oracle_error(test::bitseq(6, 1), 5, 1) < 1e-10);
    CHECK(test::dp_oracle_error(test::bitseq(6, 2), 5, 2) < 1e-10);
  }
  SUBCASE("probability is conserved") {
    for (const auto& env : {grid(2, 8), grid(3, 4), test::bitseq(8, 2)}) {
      TabularParams p(env, BackwardPolicy::Learned);
      test::randomize(p, 17, 2.0);
      double total = 0;
      for (double v : terminal_log_probabilities(p)) total += std::exp(v);
      CHECK(std::abs(total - 1) < 1e-9);
    }
  }
  SUBCASE("a forbidden path is reported unreachable") {
    const auto env = grid(1, 3);
    TabularParams p(env, BackwardPolicy::Learned);
    // Stop immediately with probability one.
    p.pf_logits().value.at(env->state_index(env->initial_state()), 0) = -std::numeric_limits<double>::infinity();
    const auto m = marginal_loglik(p, gs({2}, true));
    CHECK_FALSE(m.reachable);
    CHECK(m.value == -std::numeric_limits<double>::infinity());
  }
  SUBCASE("non-terminal queries are refused") {
    TabularParams p(grid(2, 3), BackwardPolicy::Learned);
    CHECK_THROWS_AS(marginal_loglik(p, gs({1, 1})), ContractViolation);
  }
}

TEST_CASE("mode and state discovery") {
  const auto env = grid(2, 8);
  VisitHistory h;
  CHECK(modes_discovered(h, *env) == 0);
  CHECK(distinct_states_visited(h) == 0);
  h.record(*env, gs({3, 3}, true));
  h.record(*env, gs({3, 3}, true));
  CHECK(distinct_states_visited(h) == 1);
  CHECK(modes_discovered(h, *env) == 0);
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) h.record(*env, gs({a, b}, true));
  CHECK(distinct_states_visited(h) == 64);
  CHECK(modes_discovered(h, *env) == 4);
  CHECK(env->mode_count() == 4);

  const auto seq = test::bitseq(20, 2, 3, 5);
  const auto& bs = static_cast<const BitSequence&>(*seq);
  VisitHistory hs;
  hs.record(*seq, bs.from_bits(bs.modes()[1]));
  CHECK(modes_discovered(hs, *seq) == 1);
  CHECK(hs.modes().count(1) == 1);
  CHECK(modes_discovered(VisitHistory(), *seq) == 0);
}
