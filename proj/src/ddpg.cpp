#include "rlab/ddpg.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace rlab {

std::vector<float> nstep_returns(const std::vector<float>& rewards, float bootstrap,
                                 float gamma) {
  if (rewards.empty()) throw std::invalid_argument("nstep_returns needs at least one reward");
  std::vector<float> out(rewards.size());
  float acc = bootstrap;
  for (std::size_t i = rewards.size(); i-- > 0;) {
    acc = rewards[i] + gamma * acc;
    out[i] = acc;
  }
  return out;
}

std::vector<float> FeaturesReacherEnv::reset() {
  const auto f = state_features(env_.reset());
  return {f.begin(), f.end()};
}

std::tuple<std::vector<float>, float, bool, bool> FeaturesReacherEnv::step(const Action& a) {
  const StepOutcome out = env_.step(a);
  const auto f = state_features(out.next_state);
  return {{f.begin(), f.end()}, out.reward, out.done, out.success};
}

std::vector<float> PixelReacherEnv::observe() const {
  const PixelFrame f = render(env_.state(), noise_);
  return {f.intensity.begin(), f.intensity.end()};
}

std::vector<float> PixelReacherEnv::reset() {
  env_.reset();
  return observe();
}

std::tuple<std::vector<float>, float, bool, bool> PixelReacherEnv::step(const Action& a) {
  const StepOutcome out = env_.step(a);
  return {observe(), out.reward, out.done, out.success};
}

namespace {

Tensor single_batch(const std::vector<std::size_t>& shape, const std::vector<float>& data) {
  std::vector<std::size_t> full{1};
  full.insert(full.end(), shape.begin(), shape.end());
  return Tensor(full, data);
}

int flat_dim(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  return static_cast<int>(n);
}

Tensor make_state_batch(const std::vector<std::vector<float>>& states,
                        const std::vector<std::size_t>& shape) {
  std::vector<std::size_t> full{states.size()};
  full.insert(full.end(), shape.begin(), shape.end());
  Tensor out(full);
  const std::size_t d = flat_dim(shape);
  for (std::size_t i = 0; i < states.size(); ++i)
    std::copy(states[i].begin(), states[i].end(), out.ptr() + i * d);
  return out;
}

Tensor make_action_batch(const std::vector<Action>& actions) {
  Tensor out({actions.size(), 2});
  for (std::size_t i = 0; i < actions.size(); ++i) {
    out[2 * i] = actions[i].a1;
    out[2 * i + 1] = actions[i].a2;
  }
  return out;
}

Tensor concat_cols(const Tensor& a, const Tensor& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[0] != b.shape[0])
    throw std::invalid_argument("concat_cols expects matching batched inputs");
  const std::size_t n = a.shape[0], p = a.shape[1], q = b.shape[1];
  Tensor out({n, p + q});
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(a.ptr() + i * p, a.ptr() + (i + 1) * p, out.ptr() + i * (p + q));
    std::copy(b.ptr() + i * q, b.ptr() + (i + 1) * q, out.ptr() + i * (p + q) + p);
  }
  return out;
}

Tensor take_cols(const Tensor& d, std::size_t from, std::size_t len) {
  const std::size_t n = d.shape[0], w = d.shape[1];
  Tensor out({n, len});
  for (std::size_t i = 0; i < n; ++i)
    std::copy(d.ptr() + i * w + from, d.ptr() + i * w + from + len, out.ptr() + i * len);
  return out;
}

}  // namespace

std::vector<LayerSpec> NetConfig::actor_layers() const {
  std::vector<LayerSpec> layers;
  if (pixels()) {
    layers.push_back(LayerSpec::conv2d(1, 8, 5, 2, Activation::relu));
    layers.push_back(LayerSpec::conv2d(8, 16, 5, 2, Activation::relu));
    layers.push_back(LayerSpec::flatten());
    layers.push_back(LayerSpec::dense(16 * 16 * 16, hidden1, Activation::relu));
  } else {
    layers.push_back(LayerSpec::dense(flat_dim(state_shape), hidden1, Activation::relu));
  }
  layers.push_back(LayerSpec::dense(hidden1, hidden2, Activation::relu));
  layers.push_back(LayerSpec::dense(hidden2, 2, Activation::tanh));
  return layers;
}

std::vector<LayerSpec> NetConfig::critic_trunk_layers() const {
  std::vector<LayerSpec> layers;
  if (pixels()) {
    layers.push_back(LayerSpec::conv2d(1, 8, 5, 2, Activation::relu));
    layers.push_back(LayerSpec::conv2d(8, 16, 5, 2, Activation::relu));
    layers.push_back(LayerSpec::flatten());
    layers.push_back(LayerSpec::dense(16 * 16 * 16, hidden1, Activation::relu));
  } else {
    layers.push_back(LayerSpec::dense(flat_dim(state_shape), hidden1, Activation::relu));
  }
  return layers;
}

std::vector<LayerSpec> NetConfig::critic_head_layers(float output_l2) const {
  return {LayerSpec::dense(hidden1 + 2, hidden2, Activation::relu),
          LayerSpec::dense(hidden2, 1, Activation::linear, output_l2)};
}

ActorCritic::ActorCritic(const NetConfig& cfg, const HyperParams& hp, std::uint64_t seed,
                         AccessRegime regime)
    : net(cfg),
      actor(cfg.actor_layers(), seed * 4 + 0, regime),
      critic_trunk(cfg.critic_trunk_layers(), seed * 4 + 1, regime),
      critic_head(cfg.critic_head_layers(hp.critic_output_l2), seed * 4 + 2, regime),
      target_actor(actor),
      target_trunk(critic_trunk),
      target_head(critic_head),
      opt_actor(actor.params(), AdamConfig{.lr = hp.lr_actor}),
      opt_trunk(critic_trunk.params(), AdamConfig{.lr = hp.lr_critic}),
      opt_head(critic_head.params(), AdamConfig{.lr = hp.lr_critic}) {}

Tensor ActorCritic::critic_q(const Tensor& states, const Tensor& actions,
                             ForwardCache* trunk_cache, ForwardCache* head_cache) const {
  const Tensor h = critic_trunk.forward(states, trunk_cache);
  return critic_head.forward(concat_cols(h, actions), head_cache);
}

std::vector<float> ActorCritic::targets(const Tensor& next_states,
                                        const std::vector<float>& rewards,
                                        const std::vector<std::uint8_t>& terminal,
                                        float gamma) const {
  const Tensor mu = target_actor.forward(next_states);
  const Tensor h = target_trunk.forward(next_states);
  const Tensor q = target_head.forward(concat_cols(h, mu));
  std::vector<float> y(rewards.size());
  for (std::size_t i = 0; i < y.size(); ++i)
    y[i] = rewards[i] + (terminal[i] ? 0.0f : gamma * q[i]);
  return y;
}

void ActorCritic::soft_update_targets(float tau) {
  soft_update(target_actor.params(), actor.params(), tau);
  soft_update(target_trunk.params(), critic_trunk.params(), tau);
  soft_update(target_head.params(), critic_head.params(), tau);
}

void ActorCritic::sync_targets_hard() {
  target_actor.params().copy_values_from(actor.params());
  target_trunk.params().copy_values_from(critic_trunk.params());
  target_head.params().copy_values_from(critic_head.params());
}

Action act(const Network& actor, const std::vector<float>& state,
           const std::vector<std::size_t>& state_shape, float noise_scale, OUNoise& ou,
           std::mt19937_64& rng) {
  Tensor x(state_shape, state);
  const Tensor mu = actor.forward(x);
  float a1 = mu[0], a2 = mu[1];
  if (noise_scale != 0.0f) {
    const auto n = ou.step(rng);
    a1 += noise_scale * n[0];
    a2 += noise_scale * n[1];
  }
  return Action(a1, a2);  // the constructor clamps
}

BatchGrads compute_grads(ActorCritic& ac, const Tensor& states, const Tensor& actions,
                         const std::vector<float>& returns, GradKind::Value kind) {
  const std::size_t n = states.shape[0];
  if (actions.shape[0] != n || returns.size() != n)
    throw std::invalid_argument("batch dimension mismatch");
  const float scale = kind == GradKind::mean ? 1.0f / float(n) : 1.0f;
  BatchGrads out;

  // critic: d/dtheta_Q of scale * sum (Q(s_i,a_i) - R_i)^2
  ForwardCache tc, hc;
  const Tensor q = ac.critic_q(states, actions, &tc, &hc);
  Tensor dq(q.shape);
  float loss = 0.0f;
  for (std::size_t i = 0; i < n; ++i) {
    const float e = q[i] - returns[i];
    loss += e * e;
    dq[i] = 2.0f * e * scale;
  }
  out.critic_loss = loss * scale;
  Tensor dz;
  out.head = ac.critic_head.backward(hc, dq, &dz);
  const std::size_t h1 = ac.critic_trunk.layers().back().out;
  out.trunk = ac.critic_trunk.backward(tc, take_cols(dz, 0, h1));

  // actor: ascend Q(s, mu(s)); gradients returned in descent convention
  ForwardCache acache, tc2, hc2;
  const Tensor mu = ac.actor.forward(states, &acache);
  ac.critic_q(states, mu, &tc2, &hc2);
  Tensor dq2(q.shape);
  dq2.fill(-scale);
  Tensor dz2;
  ac.critic_head.backward(hc2, dq2, &dz2);
  out.actor = ac.actor.backward(acache, take_cols(dz2, h1, 2));
  return out;
}

float ddpg_update(ActorCritic& ac, const Tensor& states, const Tensor& actions,
                  const std::vector<float>& rewards, const Tensor& next_states,
                  const std::vector<std::uint8_t>& terminal, float gamma) {
  const std::vector<float> y = ac.targets(next_states, rewards, terminal, gamma);
  BatchGrads g = compute_grads(ac, states, actions, y, GradKind::mean);
  adam_step(ac.critic_trunk.params(), g.trunk, ac.opt_trunk);
  adam_step(ac.critic_head.params(), g.head, ac.opt_head);
  adam_step(ac.actor.params(), g.actor, ac.opt_actor);
  return g.critic_loss;
}

EvalOutcome evaluate_policy(FeatureEnv& env, const Network& actor,
                            const std::vector<std::size_t>& state_shape, int episodes,
                            std::uint64_t seed) {
  env.seed(seed);
  OUNoise ou;
  std::mt19937_64 rng(seed);
  EvalOutcome out;
  out.episodes = episodes;
  for (int ep = 0; ep < episodes; ++ep) {
    auto s = env.reset();
    while (true) {
      const Action a = act(actor, s, state_shape, 0.0f, ou, rng);
      auto [s2, r, done, success] = env.step(a);
      s = std::move(s2);
      if (done) {
        out.successes += success ? 1 : 0;
        break;
      }
    }
  }
  out.percent = 100.0 * out.successes / std::max(1, episodes);
  return out;
}

namespace {

struct MetricsCollector {
  std::mutex mu;
  std::vector<EpisodeRecord> episodes;
  long next_index = 0;

  void record(long global_step, int steps, bool success, double total_reward, int worker) {
    std::lock_guard<std::mutex> l(mu);
    episodes.push_back(
        {global_step, next_index++, steps, success, total_reward, worker});
  }
};

void snapshot_result(DdpgResult& res, const ActorCritic& ac) {
  res.net = ac.net;
  res.actor = ac.actor.params();
  res.critic_trunk = ac.critic_trunk.params();
  res.critic_head = ac.critic_head.params();
  res.actor_version = ac.actor.params().version();
  res.trunk_version = ac.critic_trunk.params().version();
  res.head_version = ac.critic_head.params().version();
}

}  // namespace

DdpgResult train_ddpg_baseline(const EnvFactory& make_env, const NetConfig& net,
                               const HyperParams& hp, std::uint64_t seed) {
  auto env = make_env();
  env->seed(seed);
  if (env->state_shape() != net.state_shape)
    throw std::invalid_argument("environment state shape does not match network config");
  ActorCritic ac(net, hp, seed);
  const bool pixels = net.pixels();
  ReplayBuffer replay(pixels ? StateKind::pixels : StateKind::features,
                      pixels ? 0 : env->dim(), hp.replay_capacity);
  std::mt19937_64 rng(seed ^ 0x5eedf00dULL);
  OUNoise ou;
  MetricsCollector metrics;
  DdpgResult res;
  long global = 0;
  std::uint64_t updates = 0;

  const auto to_px = [](const std::vector<float>& v) {
    std::vector<std::uint8_t> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
      out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(v[i], 0.0f, 1.0f) * 255.0f));
    return out;
  };
  const auto from_px = [](const std::vector<std::uint8_t>& v) {
    std::vector<float> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / 255.0f;
    return out;
  };

  std::vector<std::vector<float>> bs, bs2;
  std::vector<Action> ba;
  std::vector<float> br;
  std::vector<std::uint8_t> bt;

  while (global < hp.total_steps) {
    std::vector<float> s = env->reset();
    ou.reset();
    double ep_reward = 0.0;
    int steps = 0;

    while (true) {
      const Action a = act(ac.actor, s, net.state_shape, hp.noise_scale(global), ou, rng);
      auto [s2, r, done, success] = env->step(a);
      Transition t;
      if (pixels) {
        t.state_px = to_px(s);
        t.next_px = to_px(s2);
      } else {
        t.state = s;
        t.next_state = s2;
      }
      t.action = {a.a1, a.a2};
      t.reward = r;
      t.terminal = done;
      replay.push(std::move(t));
      ++global;
      ++steps;
      ep_reward += r;

      if (global > hp.warmup_steps &&
          replay.count() >= static_cast<std::size_t>(hp.batch_size)) {
        bs.clear(); bs2.clear(); ba.clear(); br.clear(); bt.clear();
        for (std::size_t idx : replay.sample_indices(hp.batch_size, rng)) {
          const Transition& tr = replay.logical(idx);
          bs.push_back(pixels ? from_px(tr.state_px) : tr.state);
          bs2.push_back(pixels ? from_px(tr.next_px) : tr.next_state);
          ba.push_back(Action(tr.action[0], tr.action[1]));
          br.push_back(tr.reward);
          bt.push_back(tr.terminal ? 1 : 0);
        }
        ddpg_update(ac, make_state_batch(bs, net.state_shape), make_action_batch(ba), br,
                    make_state_batch(bs2, net.state_shape), bt, hp.gamma);
        ac.soft_update_targets(hp.tau);
        ++updates;
      }

      s = std::move(s2);
      if (done) {
        metrics.record(global, steps, success, ep_reward, 0);
        break;
      }
      if (global >= hp.total_steps) break;
    }
  }

  snapshot_result(res, ac);
  res.episodes = std::move(metrics.episodes);
  res.env_steps = global;
  res.update_regions = updates;
  return res;
}

DdpgResult train_ddpg_distributed(const EnvFactory& make_env, const NetConfig& net,
                                  const HyperParams& hp, std::uint64_t seed) {
  ActorCritic shared(net, hp, seed, AccessRegime::exclusive);
  std::mutex region_mu;  // the one mutual-exclusion region for all parameter access
  std::atomic<long> T{0};
  std::atomic<std::uint64_t> regions{0};
  MetricsCollector metrics;

  auto worker = [&](int w) {
    auto env = make_env();
    env->seed(seed + 1000003ULL * (w + 1));
    std::mt19937_64 rng(seed ^ (0xabcdefULL * (w + 1)));
    OUNoise ou;
    std::vector<std::vector<float>> bs;
    std::vector<Action> ba;
    std::vector<float> br;  // one-step targets R_t, fixed at collection time
    bool out_of_budget = false;

    while (!out_of_budget && T.load(std::memory_order_relaxed) < hp.total_steps) {
      std::vector<float> s = env->reset();
      ou.reset();
      bs.clear(); ba.clear(); br.clear();
      double ep_reward = 0.0;
      int steps = 0;

      while (true) {
        const long prior = T.fetch_add(1, std::memory_order_relaxed);
        if (prior >= hp.total_steps) {
          out_of_budget = true;
          break;
        }
        Action a;
        {
          std::lock_guard<std::mutex> l(region_mu);
          a = act(shared.actor, s, net.state_shape, hp.noise_scale(prior), ou, rng);
        }
        auto [s2, r, done, success] = env->step(a);
        float Rt;
        {
          std::lock_guard<std::mutex> l(region_mu);
          if (done) {
            Rt = r;
          } else {
            Rt = shared.targets(single_batch(net.state_shape, s2), {r}, {0}, hp.gamma)[0];
          }
        }
        bs.push_back(s);
        ba.push_back(a);
        br.push_back(Rt);
        ep_reward += r;
        ++steps;

        if (static_cast<int>(bs.size()) == hp.update_interval || done) {
          std::lock_guard<std::mutex> l(region_mu);
          BatchGrads g = compute_grads(shared, make_state_batch(bs, net.state_shape),
                                       make_action_batch(ba), br, GradKind::sum);
          adam_step(shared.critic_trunk.params(), g.trunk, shared.opt_trunk);
          adam_step(shared.critic_head.params(), g.head, shared.opt_head);
          adam_step(shared.actor.params(), g.actor, shared.opt_actor);
          shared.soft_update_targets(hp.tau);
          regions.fetch_add(1, std::memory_order_relaxed);
          bs.clear(); ba.clear(); br.clear();
        }

        s = std::move(s2);
        if (done) {
          metrics.record(prior + 1, steps, success, ep_reward, w);
          break;
        }
      }
    }
  };

  std::vector<std::thread> threads;
  for (int w = 0; w < hp.worker_count; ++w) threads.emplace_back(worker, w);
  for (auto& t : threads) t.join();

  DdpgResult res;
  snapshot_result(res, shared);
  std::sort(metrics.episodes.begin(), metrics.episodes.end(),
            [](const EpisodeRecord& a, const EpisodeRecord& b) {
              return a.global_step < b.global_step;
            });
  for (long i = 0; i < static_cast<long>(metrics.episodes.size()); ++i)
    metrics.episodes[i].episode_index = i;
  res.episodes = std::move(metrics.episodes);
  res.env_steps = T.load();
  res.update_regions = regions.load();
  return res;
}

DdpgResult train_ddpg_async(const EnvFactory& make_env, const NetConfig& net,
                            const HyperParams& hp, std::uint64_t seed) {
  ActorCritic shared(net, hp, seed, AccessRegime::relaxed);
  std::atomic<long> T{0};
  std::atomic<std::uint64_t> regions{0};
  MetricsCollector metrics;

  auto sync_trained = [&](ActorCritic& priv) {
    hogwild::copy_params(priv.actor.params(), shared.actor.params());
    hogwild::copy_params(priv.critic_trunk.params(), shared.critic_trunk.params());
    hogwild::copy_params(priv.critic_head.params(), shared.critic_head.params());
  };
  auto sync_targets = [&](ActorCritic& priv) {
    hogwild::copy_params(priv.target_actor.params(), shared.target_actor.params());
    hogwild::copy_params(priv.target_trunk.params(), shared.target_trunk.params());
    hogwild::copy_params(priv.target_head.params(), shared.target_head.params());
  };

  auto worker = [&](int w) {
    auto env = make_env();
    env->seed(seed + 1000003ULL * (w + 1));
    std::mt19937_64 rng(seed ^ (0x9e3779b9ULL * (w + 1)));
    OUNoise ou;
    ActorCritic priv(net, hp, seed);  // thread-local copies theta'
    sync_trained(priv);
    std::vector<std::vector<float>> bs;
    std::vector<Action> ba;
    std::vector<float> br;  // raw rewards; returns computed backward at update time
    bool out_of_budget = false;

    while (!out_of_budget && T.load(std::memory_order_relaxed) < hp.total_steps) {
      std::vector<float> s = env->reset();
      ou.reset();
      bs.clear(); ba.clear(); br.clear();
      double ep_reward = 0.0;
      int steps = 0;

      while (true) {
        const long prior = T.fetch_add(1, std::memory_order_relaxed);
        if (prior >= hp.total_steps) {
          out_of_budget = true;
          break;
        }
        const Action a = act(priv.actor, s, net.state_shape, hp.noise_scale(prior), ou, rng);
        auto [s2, r, done, success] = env->step(a);
        bs.push_back(s);
        ba.push_back(a);
        br.push_back(r);
        ep_reward += r;
        ++steps;

        if (static_cast<int>(bs.size()) == hp.update_interval || done) {
          sync_targets(priv);
          float bootstrap = 0.0f;
          if (!done) {
            const Tensor xn = single_batch(net.state_shape, s2);
            const Tensor mu = priv.target_actor.forward(xn);
            const Tensor h = priv.target_trunk.forward(xn);
            bootstrap = priv.target_head.forward(concat_cols(h, mu))[0];
          }
          const std::vector<float> returns = nstep_returns(br, bootstrap, hp.gamma);
          BatchGrads g = compute_grads(priv, make_state_batch(bs, net.state_shape),
                                       make_action_batch(ba), returns, GradKind::sum);
          hogwild::adam_step(shared.critic_trunk.params(), g.trunk, shared.opt_trunk);
          hogwild::adam_step(shared.critic_head.params(), g.head, shared.opt_head);
          hogwild::adam_step(shared.actor.params(), g.actor, shared.opt_actor);
          hogwild::soft_update(shared.target_actor.params(), shared.actor.params(), hp.tau);
          hogwild::soft_update(shared.target_trunk.params(), shared.critic_trunk.params(),
                               hp.tau);
          hogwild::soft_update(shared.target_head.params(), shared.critic_head.params(),
                               hp.tau);
          sync_trained(priv);
          regions.fetch_add(1, std::memory_order_relaxed);
          bs.clear(); ba.clear(); br.clear();
        }

        s = std::move(s2);
        if (done) {
          metrics.record(prior + 1, steps, success, ep_reward, w);
          break;
        }
      }
    }
  };

  std::vector<std::thread> threads;
  for (int w = 0; w < hp.worker_count; ++w) threads.emplace_back(worker, w);
  for (auto& t : threads) t.join();

  DdpgResult res;
  snapshot_result(res, shared);
  std::sort(metrics.episodes.begin(), metrics.episodes.end(),
            [](const EpisodeRecord& a, const EpisodeRecord& b) {
              return a.global_step < b.global_step;
            });
  for (long i = 0; i < static_cast<long>(metrics.episodes.size()); ++i)
    metrics.episodes[i].episode_index = i;
  res.episodes = std::move(metrics.episodes);
  res.env_steps = T.load();
  res.update_regions = regions.load();
  return res;
}

}  // namespace rlab
