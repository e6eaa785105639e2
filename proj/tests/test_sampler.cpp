#include <doctest.h>

#include <cmath>
#include <limits>
#include <map>

#include "gfn/error.hpp"
#include "gfn/sampler/sampler.hpp"
#include "support.hpp"

using namespace gfn;
using test::grid;

namespace {

State gs(std::vector<int> c, bool terminal = false) { return State{std::move(c), terminal}; }

double chi_square(const std::vector<double>& counts, const std::vector<double>& probs, double total) {
  double chi = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = probs[i] * total;
    chi += (counts[i] - e) * (counts[i] - e) / e;
  }
  return chi;
}

}  // namespace

TEST_CASE("philox known answer") {
  CounterRng rng(0, 0);
  CHECK(rng.next_u64() == 0xe169c58d6627e8d5ull);
  CHECK(rng.next_u64() == 0x9b00dbd8bc57ac4cull);
  CHECK(rng.position() == 2);
  rng.seek(0);
  CHECK(rng.next_u64() == 0xe169c58d6627e8d5ull);
  CHECK(CounterRng(0, 1).next_u64() != 0xe169c58d6627e8d5ull);
  CHECK(CounterRng(1, 0).next_u64() != 0xe169c58d6627e8d5ull);
}

TEST_CASE("uniform draws") {
  CounterRng rng(7, 3);
  std::vector<double> bins(10, 0.0);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    bins[static_cast<std::size_t>(u * 10)] += 1;
  }
  // 9 degrees of freedom, p = 0.001.
  CHECK(chi_square(bins, std::vector<double>(10, 0.1), 100000) < 27.88);
  std::vector<double> small(3, 0.0);
  for (int i = 0; i < 30000; ++i) small[rng.below(3)] += 1;
  CHECK(chi_square(small, std::vector<double>(3, 1.0 / 3), 30000) < 13.82);
}

TEST_CASE("step distribution") {
  const auto env = grid(2, 4);
  TabularParams p(env, BackwardPolicy::Learned);
  const State s0 = env->initial_state();
  const std::vector<double> row{std::log(0.7), std::log(0.2), std::log(0.1)};
  SUBCASE("on-policy") {
    const auto d = step_distribution(*env, s0, row, {});
    CHECK(d[0] == doctest::Approx(0.7).epsilon(1e-14));
    CHECK(d[2] == doctest::Approx(0.1).epsilon(1e-14));
  }
  SUBCASE("uniform mixing") {
    const auto d = step_distribution(*env, s0, row, {.epsilon = 0.5});
    CHECK(d[0] == doctest::Approx(0.5 * 0.7 + 0.5 / 3).epsilon(1e-14));
    const auto u = step_distribution(*env, s0, row, {.epsilon = 1.0});
    for (double v : u) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-14));
  }
  SUBCASE("tempering happens before mixing") {
    const auto d = step_distribution(*env, s0, row, {.epsilon = 0.25, .temperature = 2.0});
    const double z = std::sqrt(0.7) + std::sqrt(0.2) + std::sqrt(0.1);
    CHECK(d[1] == doctest::Approx(0.75 * std::sqrt(0.2) / z + 0.25 / 3).epsilon(1e-14));
  }
  SUBCASE("forced action") {
    const std::vector<double> forced{-std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity(), 0.0};
    for (double eps : {0.0, 0.4, 1.0})
      for (double t : {0.5, 1.0, 3.0}) {
        const auto d = step_distribution(*env, gs({3, 3}), forced, {.epsilon = eps, .temperature = t});
        CHECK(d[2] == 1.0);
        CHECK(d[0] == 0.0);
      }
  }
  SUBCASE("non-finite rows are refused") {
    const std::vector<double> bad{std::nan(""), 0.0, 0.0};
    CHECK_THROWS_AS(step_distribution(*env, s0, bad, {}), NonFiniteError);
  }
  CHECK_THROWS_AS(ExplorationConfig({.epsilon = 1.5}).validate(), ConfigError);
  CHECK_THROWS_AS(ExplorationConfig({.temperature = 0.0}).validate(), ConfigError);
}

TEST_CASE("uniform exploration picks children uniformly") {
  const auto env = grid(2, 4);
  TabularParams p(env, BackwardPolicy::Learned);
  test::randomize(p, 3, 2.0);
  CounterRng rng(5, 0);
  std::vector<double> counts(3, 0.0);
  for (int i = 0; i < 10000; ++i) counts[sample_trajectory(p, {.epsilon = 1.0}, rng).actions[0]] += 1;
  CHECK(chi_square(counts, std::vector<double>(3, 1.0 / 3), 10000) < 13.82);
}

TEST_CASE("on-policy trajectory frequencies match the policy product") {
  const auto env = grid(2, 2);
  TabularParams p(env, BackwardPolicy::Learned);
  test::randomize(p, 4, 1.0);
  const auto all = test::all_trajectories(*env);
  REQUIRE(all.size() == 5);
  std::map<std::vector<std::size_t>, double> counts;
  const int draws = 100000;
  const auto batch = sample_batch(p, {}, draws, 0);
  for (const auto& t : batch) counts[t.actions] += 1;
  double total = 0;
  for (const auto& t : all) {
    const double prob = test::forward_probability(p, t);
    total += prob;
    const double sigma = std::sqrt(draws * prob * (1 - prob));
    CHECK(std::abs(counts[t.actions] - draws * prob) < 3 * sigma);
    CHECK(std::exp(sampling_log_probability(p, {}, t)) == doctest::Approx(prob).epsilon(1e-12));
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("batches") {
  const auto env = grid(2, 8);
  TabularParams p(env, BackwardPolicy::Learned);
  test::randomize(p, 1, 1.0);
  const ExplorationConfig ex{.epsilon = 0.1, .temperature = 1.5, .seed = 11};
  const auto a = sample_batch(p, ex, 16, 3);
  REQUIRE(a.size() == 16);
  for (const auto& t : a) {
    CHECK(t.complete);
    CHECK(t.length() <= 15);
    CHECK(t.states.front() == env->initial_state());
    CHECK_NOTHROW(validate(*env, t));
  }
  const auto b = sample_batch(p, ex, 16, 3);
  bool same = true;
  for (std::size_t i = 0; i < a.size(); ++i) same = same && a[i].states == b[i].states;
  CHECK(same);
  const auto c = sample_batch(p, ex, 16, 4);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].states != c[i].states;
  CHECK(differs);
  CounterRng rng(ex.seed, 3);
  const auto d = sample_batch(p, ex, 16, rng);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].states == d[i].states);
}

TEST_CASE("exact sampling probabilities sum to one") {
  for (const auto& env : {grid(2, 4), grid(3, 3), test::bitseq(4, 2)}) {
    TabularParams p(env, BackwardPolicy::Learned);
    test::randomize(p, 6, 1.0);
    for (const ExplorationConfig ex : {ExplorationConfig{}, ExplorationConfig{.epsilon = 0.3, .temperature = 2.0}}) {
      double total = 0;
      for (const auto& t : test::all_trajectories(*env)) total += std::exp(sampling_log_probability(p, ex, t));
      CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("bit sequences sample full-length sequences") {
  const auto env = test::bitseq(8, 2);
  ParamsConfig c;
  c.kind = ParamKind::Mlp;
  c.hidden = {8};
  const auto p = make_paramset(env, c);
  for (const auto& t : sample_batch(*p, {.epsilon = 0.1}, 8, 0)) {
    CHECK(t.complete);
    CHECK(t.terminal_state().cells.size() == 4);
  }
}
