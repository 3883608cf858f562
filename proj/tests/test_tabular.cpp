#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

#include "rlab/tabular.hpp"

using namespace rlab;

namespace {

// Two self-loop actions, reward 1 forever; Q* = 1/(1-gamma).
struct SelfLoop final : TabularEnv {
  int num_states() const override { return 1; }
  int num_actions() const override { return 2; }
  int start_state() const override { return 0; }
  int episode_cap() const override { return 500; }
  std::tuple<int, double, bool> step(int, int) const override { return {0, 1.0, false}; }
};

}  // namespace

TEST_CASE("epsilon-greedy policy") {
  std::mt19937_64 rng(1);
  const double q[4] = {1.0, 3.0, 2.0, 0.0};

  SUBCASE("eps=0 is pure argmax") {
    for (int i = 0; i < 100; ++i) CHECK(epsilon_greedy(q, 4, 0.0, rng) == 1);
  }
  SUBCASE("eps=1 is uniform over all actions") {
    std::array<int, 4> freq{};
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++freq[epsilon_greedy(q, 4, 1.0, rng)];
    for (int c : freq) CHECK(std::abs(double(c) / n - 0.25) < 0.01);
  }
  SUBCASE("eps=0.1 picks the greedy arm with p=0.925") {
    int greedy = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) greedy += epsilon_greedy(q, 4, 0.1, rng) == 1;
    CHECK(std::abs(double(greedy) / n - 0.925) < 0.01);
  }
  SUBCASE("ties break to the lowest index") {
    const double tied[4] = {2.0, 2.0, 2.0, 1.0};
    CHECK(epsilon_greedy(tied, 4, 0.0, rng) == 0);
  }
}

TEST_CASE("softmax policy") {
  std::mt19937_64 rng(2);

  SUBCASE("equal Q values give uniform probabilities") {
    const double q[4] = {0.7, 0.7, 0.7, 0.7};
    auto [a, p] = softmax_policy(q, 4, 1.0, rng);
    for (double v : p) CHECK(v == doctest::Approx(0.25));
  }
  SUBCASE("worked 2-action example at temperature 1") {
    const double q[2] = {1.0, 0.0};
    auto [a, p] = softmax_policy(q, 2, 1.0, rng);
    CHECK(p[0] == doctest::Approx(0.7311).epsilon(1e-3));
    CHECK(p[1] == doctest::Approx(0.2689).epsilon(1e-3));
  }
  SUBCASE("low temperature approaches argmax") {
    const double q[3] = {0.1, 0.5, 0.2};
    auto [a, p] = softmax_policy(q, 3, 0.01, rng);
    CHECK(p[1] > 0.999);
  }
  SUBCASE("probabilities sum to one and are shift-invariant") {
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    for (int i = 0; i < 200; ++i) {
      double q[4];
      for (double& v : q) v = u(rng);
      auto [a1, p1] = softmax_policy(q, 4, 0.7, rng);
      double shifted[4];
      for (int j = 0; j < 4; ++j) shifted[j] = q[j] + 123.456;
      auto [a2, p2] = softmax_policy(shifted, 4, 0.7, rng);
      double sum = 0.0;
      for (int j = 0; j < 4; ++j) {
        sum += p1[j];
        CHECK(p1[j] == doctest::Approx(p2[j]).epsilon(1e-9));
      }
      CHECK(std::abs(sum - 1.0) < 1e-9);
    }
  }
  SUBCASE("non-positive temperature is rejected") {
    const double q[2] = {0.0, 1.0};
    CHECK_THROWS_AS(softmax_policy(q, 2, 0.0, rng), std::invalid_argument);
  }
}

TEST_CASE("alpha=0 leaves tables at their initial values") {
  GridWorld gw;
  TabularOpts opt{.alpha = 0.0, .q_init = 0.25, .gamma = 0.9, .epsilon = 0.3, .episodes = 50,
                  .seed = 4};
  for (const QTable& q : {sarsa_train(gw, opt), qlearning_train(gw, opt),
                          qlambda_train(gw, opt, 0.5, TraceMode::replacing)}) {
    for (double v : q.q) CHECK(v == 0.25);
  }
}

TEST_CASE("sarsa converges to 1/(1-gamma) on the self-loop") {
  SelfLoop env;
  TabularOpts opt{.alpha = 0.3, .gamma = 0.97, .epsilon = 0.0, .episodes = 60, .seed = 7};
  auto q = sarsa_train(env, opt);
  CHECK(q.at(0, 0) == doctest::Approx(1.0 / 0.03).epsilon(0.1 / 33.3));
}

TEST_CASE("sarsa greedy path length equals the Manhattan distance") {
  GridWorld gw;
  TabularOpts opt{.alpha = 0.2,
                  .gamma = 0.9,
                  .epsilon = 1.0,
                  .epsilon_final = 0.05,
                  .episodes = 50000,
                  .seed = 11};
  auto q = sarsa_train(gw, opt);
  int s = gw.start, steps = 0;
  while (s != gw.goal && steps < 50) {
    auto [s2, r, done] = gw.step(s, q.greedy(s));
    s = s2;
    ++steps;
  }
  CHECK(steps == gw.manhattan_to_goal(gw.start));
}

TEST_CASE("q-learning matches the value-iteration oracle") {
  GridWorld gw;
  auto qstar = value_iteration(gw, 0.9, 1e-10);
  TabularOpts opt{.alpha = 0.2, .q_init = 0.5, .gamma = 0.9, .epsilon = 0.2,
                  .episodes = 50000, .seed = 3};
  opt.max_total_steps = 50000;
  auto q = qlearning_train(gw, opt);

  const int d = gw.manhattan_to_goal(gw.start);
  CHECK(q.max_q(gw.start) == doctest::Approx(std::pow(0.9, d - 1)).epsilon(1e-3));

  for (int s = 0; s < gw.num_states(); ++s) {
    if (s == gw.goal) continue;
    auto optimal = qstar.argmax_set(s);
    const int learned = q.greedy(s);
    CHECK(std::find(optimal.begin(), optimal.end(), learned) != optimal.end());
  }
}

TEST_CASE("q(lambda=0) is bitwise-identical to q-learning on a shared stream") {
  GridWorld gw;
  TabularOpts opt{.alpha = 0.25, .gamma = 0.9, .epsilon = 0.3, .episodes = 400, .seed = 17};
  auto q1 = qlearning_train(gw, opt);
  auto q2 = qlambda_train(gw, opt, 0.0, TraceMode::replacing);
  REQUIRE(q1.q.size() == q2.q.size());
  for (std::size_t i = 0; i < q1.q.size(); ++i) CHECK(q1.q[i] == q2.q[i]);
}

TEST_CASE("trace bookkeeping") {
  SUBCASE("replacing trace decays to (gamma*lambda)^3 after three steps") {
    TraceTable t(4, 4, TraceMode::replacing);
    const double gl = 0.9 * 0.8;
    t.visit(2, 1);
    CHECK(t.at(2, 1) == 1.0);
    for (int i = 0; i < 3; ++i) t.decay(gl);
    CHECK(t.at(2, 1) == doctest::Approx(gl * gl * gl));
  }
  SUBCASE("replacing traces never exceed one") {
    TraceTable t(2, 4, TraceMode::replacing);
    for (int i = 0; i < 5; ++i) {
      t.visit(0, 2);
      t.decay(0.5);
      for (double v : t.e) CHECK(v <= 1.0);
    }
  }
  SUBCASE("accumulating trace reaches 1.5 on an immediate revisit at gl=0.5") {
    TraceTable t(2, 4, TraceMode::accumulating);
    t.visit(0, 1);
    t.decay(0.5);
    t.visit(0, 1);
    CHECK(t.at(0, 1) == doctest::Approx(1.5));
  }
  SUBCASE("accumulating traces grow monotonically under consecutive revisits") {
    TraceTable t(2, 4, TraceMode::accumulating);
    double prev = 0.0;
    for (int i = 0; i < 6; ++i) {
      t.visit(1, 3);
      CHECK(t.at(1, 3) > prev);
      prev = t.at(1, 3);
      t.decay(0.7);
      for (double v : t.e) CHECK(v >= 0.0);
    }
  }
}

TEST_CASE("q(lambda) learns the gridworld") {
  GridWorld gw;
  TabularOpts opt{.alpha = 0.2, .gamma = 0.9, .epsilon = 0.2, .episodes = 8000, .seed = 5};
  auto q = qlambda_train(gw, opt, 0.8, TraceMode::replacing);
  auto qstar = value_iteration(gw, 0.9, 1e-10);
  int s = gw.start, steps = 0;
  while (s != gw.goal && steps < 50) {
    auto [s2, r, done] = gw.step(s, q.greedy(s));
    s = s2;
    ++steps;
  }
  CHECK(steps == gw.manhattan_to_goal(gw.start));
  (void)qstar;
}

TEST_CASE("value iteration") {
  SUBCASE("action into the goal is worth exactly 1") {
    GridWorld gw;
    auto q = value_iteration(gw, 0.9, 1e-12);
    // cell left of the goal, moving right
    CHECK(q.at(gw.goal - 1, 3) == doctest::Approx(1.0));
  }
  SUBCASE("gamma=0 reduces to the immediate reward table") {
    GridWorld gw;
    auto q = value_iteration(gw, 0.0, 1e-12);
    for (int s = 0; s < gw.num_states(); ++s)
      for (int a = 0; a < 4; ++a) {
        auto [s2, r, done] = gw.step(s, a);
        CHECK(q.at(s, a) == doctest::Approx(r));
      }
  }
  SUBCASE("3x3 closed form gamma^(d-1)") {
    GridWorld gw(3, 3, 0, 8);
    auto q = value_iteration(gw, 0.9, 1e-12);
    const int d = gw.manhattan_to_goal(0);
    CHECK(q.at(0, 1) == doctest::Approx(std::pow(0.9, d - 1)));  // toward goal
    CHECK(q.at(0, 3) == doctest::Approx(std::pow(0.9, d - 1)));  // the other optimal arm
    CHECK(q.at(0, 0) < q.at(0, 1));                              // off-goal move is worse
  }
  SUBCASE("rejects non-positive tolerance") {
    GridWorld gw;
    CHECK_THROWS_AS(value_iteration(gw, 0.9, 0.0), std::invalid_argument);
  }
}

TEST_CASE("qtable csv export") {
  QTable q(2, 4);
  q.at(1, 2) = 0.5;
  const std::string path = "qtable_test.csv";
  q.to_csv(path);
  std::ifstream f(path);
  std::string header, row0, row1;
  std::getline(f, header);
  std::getline(f, row0);
  std::getline(f, row1);
  CHECK(header == "state_index,a0,a1,a2,a3");
  CHECK(row0 == "0,0,0,0,0");
  CHECK(row1 == "1,0,0,0.5,0");
  std::remove(path.c_str());
}

TEST_CASE("gridworld construction guards") {
  CHECK_THROWS_AS(GridWorld(5, 5, 3, 3), std::invalid_argument);
  CHECK_THROWS_AS(GridWorld(0, 5, 0, 1), std::invalid_argument);
  GridWorld gw;
  CHECK_THROWS_AS(gw.step(0, 7), std::invalid_argument);
}
