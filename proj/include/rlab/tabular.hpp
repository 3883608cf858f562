#ifndef RLAB_TABULAR_HPP
#define RLAB_TABULAR_HPP

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace rlab {

// Small deterministic discrete environment. step() is a pure function of
// (state, action): {next state, reward, terminal}.
struct TabularEnv {
  virtual ~TabularEnv() = default;
  virtual int num_states() const = 0;
  virtual int num_actions() const = 0;
  virtual int start_state() const = 0;
  virtual std::tuple<int, double, bool> step(int state, int action) const = 0;
  virtual int episode_cap() const = 0;
};

// Deterministic gridworld: actions {up, down, left, right}, off-grid moves
// clamp to the boundary, reward 1 on the transition into the goal, 0 otherwise.
struct GridWorld final : TabularEnv {
  int width = 5, height = 5;
  int start = 0;
  int goal = 24;
  int cap = 200;

  GridWorld() = default;
  GridWorld(int w, int h, int start_cell, int goal_cell, int episode_cap = 200);

  int num_states() const override { return width * height; }
  int num_actions() const override { return 4; }
  int start_state() const override { return start; }
  int episode_cap() const override { return cap; }
  std::tuple<int, double, bool> step(int state, int action) const override;

  int cell(int row, int col) const { return row * width + col; }
  int manhattan_to_goal(int state) const;
};

struct QTable {
  int states = 0;
  int actions = 0;
  std::vector<double> q;

  QTable() = default;
  QTable(int s, int a) : states(s), actions(a), q(std::size_t(s) * a, 0.0) {}
  double& at(int s, int a) { return q[std::size_t(s) * actions + a]; }
  double at(int s, int a) const { return q[std::size_t(s) * actions + a]; }
  const double* row(int s) const { return q.data() + std::size_t(s) * actions; }

  // Lowest-index argmax.
  int greedy(int s) const;
  double max_q(int s) const;
  // All actions within tol of the row maximum.
  std::vector<int> argmax_set(int s, double tol = 1e-9) const;

  void to_csv(const std::string& path) const;
};

// With probability eps a uniform action over all n (greedy included),
// otherwise the lowest-index argmax.
int epsilon_greedy(const double* q_row, int n, double eps, std::mt19937_64& rng);

// Max-shifted Boltzmann selection; returns the sampled action and the
// probability vector.
std::pair<int, std::vector<double>> softmax_policy(const double* q_row, int n,
                                                   double temperature, std::mt19937_64& rng);

enum class TraceMode { replacing, accumulating };

// Eligibility values for every (state, action) pair.
struct TraceTable {
  TraceMode mode = TraceMode::replacing;
  int states = 0, actions = 0;
  std::vector<double> e;

  TraceTable(int s, int a, TraceMode m) : mode(m), states(s), actions(a), e(std::size_t(s) * a, 0.0) {}
  double& at(int s, int a) { return e[std::size_t(s) * actions + a]; }
  // Visit bookkeeping: replacing sets to 1, accumulating increments by 1.
  void visit(int s, int a);
  void decay(double gamma_lambda);
  void clear();
};

struct TabularOpts {
  double alpha = 0.1;
  double q_init = 0.0;  // "initialize Q arbitrarily"; optimistic values drive exploration
  double gamma = 0.9;
  double epsilon = 0.1;
  double epsilon_final = -1.0;  // <0: constant epsilon
  int episodes = 1000;
  long max_total_steps = 0;  // 0: no cap
  std::uint64_t seed = 0;
};

QTable sarsa_train(const TabularEnv& env, const TabularOpts& opt);
QTable qlearning_train(const TabularEnv& env, const TabularOpts& opt);
QTable qlambda_train(const TabularEnv& env, const TabularOpts& opt, double lambda, TraceMode mode);
QTable value_iteration(const TabularEnv& env, double gamma, double tol);

}  // namespace rlab

#endif
