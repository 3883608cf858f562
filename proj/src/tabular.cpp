#include "rlab/tabular.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace rlab {

GridWorld::GridWorld(int w, int h, int start_cell, int goal_cell, int episode_cap)
    : width(w), height(h), start(start_cell), goal(goal_cell), cap(episode_cap) {
  if (w <= 0 || h <= 0) throw std::invalid_argument("grid extents must be positive");
  if (start == goal) throw std::invalid_argument("goal must differ from start");
  if (start < 0 || start >= w * h || goal < 0 || goal >= w * h)
    throw std::invalid_argument("start/goal outside the grid");
}

std::tuple<int, double, bool> GridWorld::step(int state, int action) const {
  int row = state / width, col = state % width;
  switch (action) {
    case 0: row = std::max(0, row - 1); break;
    case 1: row = std::min(height - 1, row + 1); break;
    case 2: col = std::max(0, col - 1); break;
    case 3: col = std::min(width - 1, col + 1); break;
    default: throw std::invalid_argument("gridworld action out of range");
  }
  const int next = cell(row, col);
  const bool hit = next == goal;
  return {next, hit ? 1.0 : 0.0, hit};
}

int GridWorld::manhattan_to_goal(int state) const {
  return std::abs(state / width - goal / width) + std::abs(state % width - goal % width);
}

int QTable::greedy(int s) const {
  const double* r = row(s);
  int best = 0;
  for (int a = 1; a < actions; ++a)
    if (r[a] > r[best]) best = a;
  return best;
}

double QTable::max_q(int s) const { return row(s)[greedy(s)]; }

std::vector<int> QTable::argmax_set(int s, double tol) const {
  const double m = max_q(s);
  std::vector<int> out;
  for (int a = 0; a < actions; ++a)
    if (row(s)[a] >= m - tol) out.push_back(a);
  return out;
}

void QTable::to_csv(const std::string& path) const {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f << "state_index";
  for (int a = 0; a < actions; ++a) f << ",a" << a;
  f << "\n";
  for (int s = 0; s < states; ++s) {
    f << s;
    for (int a = 0; a < actions; ++a) f << "," << at(s, a);
    f << "\n";
  }
}

int epsilon_greedy(const double* q_row, int n, double eps, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  if (u(rng) < eps) {
    std::uniform_int_distribution<int> pick(0, n - 1);
    return pick(rng);
  }
  int best = 0;
  for (int a = 1; a < n; ++a)
    if (q_row[a] > q_row[best]) best = a;
  return best;
}

std::pair<int, std::vector<double>> softmax_policy(const double* q_row, int n,
                                                   double temperature, std::mt19937_64& rng) {
  if (temperature <= 0.0) throw std::invalid_argument("softmax temperature must be positive");
  double m = q_row[0];
  for (int a = 1; a < n; ++a) m = std::max(m, q_row[a]);
  std::vector<double> p(n);
  double z = 0.0;
  for (int a = 0; a < n; ++a) {
    p[a] = std::exp((q_row[a] - m) / temperature);
    z += p[a];
  }
  for (double& v : p) v /= z;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = u(rng);
  double acc = 0.0;
  for (int a = 0; a < n; ++a) {
    acc += p[a];
    if (r < acc) return {a, p};
  }
  return {n - 1, p};
}

void TraceTable::visit(int s, int a) {
  double& v = at(s, a);
  v = mode == TraceMode::replacing ? 1.0 : v + 1.0;
}

void TraceTable::decay(double gamma_lambda) {
  for (double& v : e) v *= gamma_lambda;
}

void TraceTable::clear() { std::fill(e.begin(), e.end(), 0.0); }

namespace {

double epsilon_at(const TabularOpts& opt, int episode) {
  if (opt.epsilon_final < 0.0 || opt.episodes <= 1) return opt.epsilon;
  const double f = double(episode) / double(opt.episodes - 1);
  return opt.epsilon + (opt.epsilon_final - opt.epsilon) * f;
}

bool budget_left(const TabularOpts& opt, long steps) {
  return opt.max_total_steps == 0 || steps < opt.max_total_steps;
}

}  // namespace

QTable sarsa_train(const TabularEnv& env, const TabularOpts& opt) {
  if (opt.alpha < 0.0 || opt.alpha > 1.0) throw std::invalid_argument("alpha must be in [0,1]");
  QTable q(env.num_states(), env.num_actions());
  if (opt.q_init != 0.0) std::fill(q.q.begin(), q.q.end(), opt.q_init);
  std::mt19937_64 rng(opt.seed);
  long steps = 0;
  for (int ep = 0; ep < opt.episodes && budget_left(opt, steps); ++ep) {
    const double eps = epsilon_at(opt, ep);
    int s = env.start_state();
    int a = epsilon_greedy(q.row(s), q.actions, eps, rng);
    for (int t = 0; t < env.episode_cap() && budget_left(opt, steps); ++t) {
      const auto [s2, r, terminal] = env.step(s, a);
      ++steps;
      if (terminal) {
        q.at(s, a) += opt.alpha * (r - q.at(s, a));
        break;
      }
      const int a2 = epsilon_greedy(q.row(s2), q.actions, eps, rng);
      q.at(s, a) += opt.alpha * (r + opt.gamma * q.at(s2, a2) - q.at(s, a));
      s = s2;
      a = a2;
    }
  }
  return q;
}

QTable qlearning_train(const TabularEnv& env, const TabularOpts& opt) {
  if (opt.alpha < 0.0 || opt.alpha > 1.0) throw std::invalid_argument("alpha must be in [0,1]");
  QTable q(env.num_states(), env.num_actions());
  if (opt.q_init != 0.0) std::fill(q.q.begin(), q.q.end(), opt.q_init);
  std::mt19937_64 rng(opt.seed);
  long steps = 0;
  for (int ep = 0; ep < opt.episodes && budget_left(opt, steps); ++ep) {
    const double eps = epsilon_at(opt, ep);
    int s = env.start_state();
    for (int t = 0; t < env.episode_cap() && budget_left(opt, steps); ++t) {
      const int a = epsilon_greedy(q.row(s), q.actions, eps, rng);
      const auto [s2, r, terminal] = env.step(s, a);
      ++steps;
      const double bootstrap = terminal ? 0.0 : opt.gamma * q.max_q(s2);
      q.at(s, a) += opt.alpha * (r + bootstrap - q.at(s, a));
      if (terminal) break;
      s = s2;
    }
  }
  return q;
}

// Watkins Q(lambda): the visited pair's trace is bumped before the sweep, all
// Q values move by alpha*delta*e, and traces decay by gamma*lambda afterwards
// or are cut to zero when the action taken was exploratory.
QTable qlambda_train(const TabularEnv& env, const TabularOpts& opt, double lambda,
                     TraceMode mode) {
  if (opt.alpha < 0.0 || opt.alpha > 1.0) throw std::invalid_argument("alpha must be in [0,1]");
  if (lambda < 0.0 || lambda > 1.0) throw std::invalid_argument("lambda must be in [0,1]");
  QTable q(env.num_states(), env.num_actions());
  if (opt.q_init != 0.0) std::fill(q.q.begin(), q.q.end(), opt.q_init);
  TraceTable traces(env.num_states(), env.num_actions(), mode);
  std::mt19937_64 rng(opt.seed);
  const double gl = opt.gamma * lambda;
  long steps = 0;
  for (int ep = 0; ep < opt.episodes && budget_left(opt, steps); ++ep) {
    const double eps = epsilon_at(opt, ep);
    traces.clear();
    int s = env.start_state();
    for (int t = 0; t < env.episode_cap() && budget_left(opt, steps); ++t) {
      const int a = epsilon_greedy(q.row(s), q.actions, eps, rng);
      const bool exploratory = q.at(s, a) < q.max_q(s);
      const auto [s2, r, terminal] = env.step(s, a);
      ++steps;
      const double bootstrap = terminal ? 0.0 : opt.gamma * q.max_q(s2);
      const double delta = r + bootstrap - q.at(s, a);
      traces.visit(s, a);
      for (std::size_t i = 0; i < traces.e.size(); ++i)
        if (traces.e[i] != 0.0) q.q[i] += opt.alpha * delta * traces.e[i];
      if (terminal) break;
      if (exploratory)
        traces.clear();
      else
        traces.decay(gl);
      s = s2;
    }
  }
  return q;
}

QTable value_iteration(const TabularEnv& env, double gamma, double tol) {
  if (tol <= 0.0) throw std::invalid_argument("tolerance must be positive");
  QTable q(env.num_states(), env.num_actions());
  while (true) {
    double worst = 0.0;
    for (int s = 0; s < q.states; ++s) {
      for (int a = 0; a < q.actions; ++a) {
        const auto [s2, r, terminal] = env.step(s, a);
        const double v = r + (terminal ? 0.0 : gamma * q.max_q(s2));
        worst = std::max(worst, std::abs(v - q.at(s, a)));
        q.at(s, a) = v;
      }
    }
    if (worst < tol) break;
  }
  return q;
}

}  // namespace rlab
