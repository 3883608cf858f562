#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "rlab/reacher_env.hpp"

using namespace rlab;

TEST_CASE("forward kinematics on axis-aligned cases") {
  auto [j1, g1] = forward_kinematics(0.0, 0.0);
  CHECK(j1.x == doctest::Approx(0.5));
  CHECK(j1.y == doctest::Approx(0.0));
  CHECK(g1.x == doctest::Approx(1.0));
  CHECK(g1.y == doctest::Approx(0.0));

  auto [j2, g2] = forward_kinematics(M_PI / 2, 0.0);
  CHECK(j2.x == doctest::Approx(0.0));
  CHECK(j2.y == doctest::Approx(0.5));
  CHECK(g2.x == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(g2.y == doctest::Approx(1.0));

  auto [j3, g3] = forward_kinematics(0.0, M_PI / 2);
  CHECK(j3.x == doctest::Approx(0.5));
  CHECK(j3.y == doctest::Approx(0.0));
  CHECK(g3.x == doctest::Approx(0.5));
  CHECK(g3.y == doctest::Approx(0.5));
}

TEST_CASE("reset is deterministic per seed") {
  ReacherEnv env;
  auto s1 = env.reset(1234);
  ReacherEnv env2;
  auto s2 = env2.reset(1234);
  CHECK(s1.theta1 == s2.theta1);
  CHECK(s1.theta2 == s2.theta2);
  CHECK(s1.target_x == s2.target_x);
  CHECK(s1.target_y == s2.target_y);
  CHECK(s1.step_count == 0);
}

TEST_CASE("reset samples targets area-uniformly over the annulus") {
  ReacherEnv env(99);
  double sum_r = 0.0;
  const int n = 1000;
  for (int i = 0; i < n; ++i) {
    const auto& s = env.reset();
    const double r = std::hypot(s.target_x, s.target_y);
    CHECK(r >= 0.2);
    CHECK(r <= 0.95);
    const double d0 = distance(gripper_position(s), target_position(s));
    CHECK(d0 >= kSuccessDistance);
    sum_r += r;
  }
  // E[r] for area-uniform sampling on [0.2, 0.95]
  const double expect = (2.0 / 3.0) * (std::pow(0.95, 3) - std::pow(0.2, 3)) /
                        (0.95 * 0.95 - 0.2 * 0.2);
  CHECK(sum_r / n == doctest::Approx(expect).epsilon(0.03));
}

TEST_CASE("zero action leaves the gripper in place with zero reward") {
  ReacherState s;
  s.theta1 = 1.0;
  s.theta2 = 2.0;
  s.target_x = 0.4;
  s.target_y = -0.3;
  auto out = step(s, Action(0.0f, 0.0f));
  CHECK(out.reward == 0.0f);
  CHECK(out.next_state.theta1 == doctest::Approx(1.0));
  CHECK(out.next_state.theta2 == doctest::Approx(2.0));
  CHECK(out.next_state.step_count == 1);
  CHECK_FALSE(out.done);
}

TEST_CASE("raw action inputs are clipped to [-1,1]") {
  ReacherState s;
  s.target_x = -0.8;
  const Action a(2.0f, -3.0f);
  CHECK(a.a1 == 1.0f);
  CHECK(a.a2 == -1.0f);
  auto out = step(s, a);
  CHECK(out.next_state.theta1 == doctest::Approx(kMaxStepRadians));
  CHECK(out.next_state.theta2 == doctest::Approx(2 * M_PI - kMaxStepRadians));
}

TEST_CASE("crossing the success distance terminates the episode") {
  ReacherState s;
  s.theta1 = 0.3;
  s.theta2 = 0.7;
  const Vec2 old_g = gripper_position(s);
  auto moved = s;
  moved.theta1 = wrap_angle(s.theta1 + kMaxStepRadians);
  moved.theta2 = wrap_angle(s.theta2 + kMaxStepRadians);
  const Vec2 new_g = gripper_position(moved);
  const double mx = new_g.x - old_g.x, my = new_g.y - old_g.y;
  const double mlen = std::hypot(mx, my);
  REQUIRE(mlen > 0.01);
  s.target_x = old_g.x + 0.105 * mx / mlen;
  s.target_y = old_g.y + 0.105 * my / mlen;
  auto out = step(s, Action(1.0f, 1.0f));
  CHECK(out.success);
  CHECK(out.done);
  CHECK(out.reward > 0.0f);
}

TEST_CASE("reward formula on the worked examples") {
  CHECK(reward_fn(0.3, 0.3) == 0.0f);
  CHECK(reward_fn(0.5, 0.46) == doctest::Approx(std::exp(-0.46) * 0.04 / kRewardScale));
  CHECK(reward_fn(0.5, 0.46) == doctest::Approx(0.482).epsilon(1e-3));
  CHECK(reward_fn(0.5, 0.54) == doctest::Approx(-0.445).epsilon(1e-3));
}

TEST_CASE("reward sign equals the sign of the distance decrease") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> d(0.0, 2.0);
  for (int i = 0; i < 20000; ++i) {
    const double d_old = d(rng), d_new = d(rng);
    const float r = reward_fn(d_old, d_new);
    if (d_old > d_new) CHECK(r > 0.0f);
    if (d_old < d_new) CHECK(r < 0.0f);
    CHECK(std::abs(r) <= 1.0f);
  }
}

TEST_CASE("per-step transitions never need the reward clamp") {
  ReacherEnv env(31);
  std::mt19937_64 rng(32);
  std::uniform_real_distribution<float> au(-1.0f, 1.0f);
  for (int ep = 0; ep < 20; ++ep) {
    env.reset();
    for (int t = 0; t < 300 && !env.done(); ++t) {
      const ReacherState before = env.state();
      const Vec2 g0 = gripper_position(before);
      const double d_old = distance(g0, target_position(before));
      auto out = env.step(Action(au(rng), au(rng)));
      const Vec2 g1 = gripper_position(out.next_state);
      const double d_new = distance(g1, target_position(out.next_state));
      CHECK(distance(g0, g1) <= kRewardScale + 1e-9);
      const double raw = std::exp(-d_new) * (d_old - d_new) / kRewardScale;
      CHECK(std::abs(raw) <= 1.0);
      CHECK(out.reward == doctest::Approx(raw).epsilon(1e-6));
    }
  }
}

TEST_CASE("step is pure: equal inputs give equal outputs") {
  ReacherEnv env(5);
  ReacherState s = env.reset();
  const Action a(0.37f, -0.81f);
  auto o1 = step(s, a);
  auto o2 = step(s, a);
  CHECK(o1.next_state.theta1 == o2.next_state.theta1);
  CHECK(o1.next_state.theta2 == o2.next_state.theta2);
  CHECK(o1.reward == o2.reward);
  CHECK(o1.done == o2.done);
}

TEST_CASE("180 two-degree steps bring theta1 back around") {
  ReacherState s;
  s.theta1 = 0.3;
  s.theta2 = M_PI;  // folded arm: gripper pinned at the base, never succeeds
  s.target_x = 0.5;
  s.target_y = 0.5;
  for (int i = 0; i < 180; ++i) {
    auto out = step(s, Action(1.0f, 0.0f));
    REQUIRE_FALSE(out.done);
    s = out.next_state;
  }
  CHECK(s.theta1 == doctest::Approx(0.3).epsilon(1e-9));
  CHECK(s.step_count == 180);
}

TEST_CASE("stepping a finished episode is a usage error") {
  ReacherState capped;
  capped.step_count = kMaxEpisodeSteps;
  capped.target_x = 0.5;
  CHECK_THROWS_AS(step(capped, Action(0, 0)), std::logic_error);

  ReacherState solved;  // gripper (1,0), target on top of it
  solved.target_x = 0.99;
  CHECK_THROWS_AS(step(solved, Action(0, 0)), std::logic_error);

  ReacherEnv env(8);
  env.reset();
  while (!env.done()) env.step(Action(1.0f, -0.5f));
  CHECK_THROWS_AS(env.step(Action(0, 0)), std::logic_error);
}

TEST_CASE("state features") {
  ReacherState s;
  s.target_x = 0.3;
  s.target_y = -0.2;
  auto f = state_features(s);
  CHECK(f[0] == 1.0f);
  CHECK(f[1] == 0.0f);
  CHECK(f[2] == 1.0f);
  CHECK(f[3] == 0.0f);
  CHECK(f[4] == doctest::Approx(0.3f));
  CHECK(f[5] == doctest::Approx(-0.2f));

  s.theta1 = M_PI;
  f = state_features(s);
  CHECK(f[0] == doctest::Approx(-1.0f));
  CHECK(f[1] == doctest::Approx(0.0f).epsilon(1e-6));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 2 * M_PI);
  for (int i = 0; i < 100; ++i) {
    s.theta1 = u(rng);
    s.theta2 = u(rng);
    f = state_features(s);
    CHECK(std::hypot(f[0], f[1]) == doctest::Approx(1.0f).epsilon(1e-5));
    CHECK(std::hypot(f[2], f[3]) == doctest::Approx(1.0f).epsilon(1e-5));
    auto raw = state_features_raw(s);
    CHECK(raw[0] == doctest::Approx(float(s.theta1)));
    CHECK(raw[1] == doctest::Approx(float(s.theta2)));
  }
}

TEST_CASE("render: background is empty, output is binary") {
  ReacherState s;  // arm along +x, target bottom right
  s.target_x = 0.5;
  s.target_y = -0.5;
  auto f = render(s, NoiseConfig{});
  CHECK(f.at(0, 0) == 0.0f);
  CHECK(f.at(5, 3) == 0.0f);
  int lit = 0;
  for (float v : f.intensity) {
    CHECK((v == 0.0f || v == 1.0f));
    if (v == 1.0f) ++lit;
  }
  CHECK(lit > 30);      // arm + dots + star
  CHECK(lit < 200);     // sparse line art
}

TEST_CASE("render is bit-deterministic with and without noise") {
  ReacherEnv env(77);
  ReacherState s = env.reset();
  NoiseConfig noisy{true, 123, 60};
  auto a1 = render(s, NoiseConfig{});
  auto a2 = render(s, NoiseConfig{});
  auto b1 = render(s, noisy);
  auto b2 = render(s, noisy);
  CHECK(a1.intensity == a2.intensity);
  CHECK(b1.intensity == b2.intensity);
  CHECK(a1.intensity != b1.intensity);
}

TEST_CASE("static noise: same pixel set on every frame, scene drawn over it") {
  NoiseConfig noisy{true, 5, 60};
  const auto px = noise_pixels(noisy);
  CHECK(px.size() == 60);
  CHECK(std::set<int>(px.begin(), px.end()).size() == 60);
  CHECK(noise_pixels(noisy) == px);

  ReacherEnv env(3);
  ReacherState s1 = env.reset();
  ReacherState s2 = env.reset();
  auto f1 = render(s1, noisy);
  auto f2 = render(s2, noisy);
  for (int p : px) {
    CHECK(f1.intensity[p] == 1.0f);
    CHECK(f2.intensity[p] == 1.0f);
  }
  // frames of two states may differ only where some scene is drawn
  auto clean1 = render(s1, NoiseConfig{});
  auto clean2 = render(s2, NoiseConfig{});
  int scene_budget = 0;
  for (float v : clean1.intensity) scene_budget += v == 1.0f;
  for (float v : clean2.intensity) scene_budget += v == 1.0f;
  int diffs = 0;
  for (int p = 0; p < 64 * 64; ++p) diffs += f1.intensity[p] != f2.intensity[p];
  CHECK(diffs <= scene_budget);
  CHECK(diffs > 0);
}
