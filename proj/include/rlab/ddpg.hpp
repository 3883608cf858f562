#ifndef RLAB_DDPG_HPP
#define RLAB_DDPG_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <tuple>
#include <vector>

#include "rlab/network.hpp"
#include "rlab/param_store.hpp"
#include "rlab/reacher_env.hpp"
#include "rlab/replay.hpp"

namespace rlab {

struct HyperParams {
  float tau = 0.001f;
  float lr_critic = 1e-4f;
  float lr_actor = 1e-4f;
  float gamma = 0.97f;
  float critic_output_l2 = 0.02f;
  int max_episode_steps = 1000;
  int update_interval = 5;  // n-step buffer length for the worker variants
  int worker_count = 16;
  long total_steps = 100000;  // shared T_max
  // exploration: noise scale decays linearly from start to final over the
  // first decay_fraction of total steps, then stays at final
  float noise_start = 1.0f;
  float noise_final = 0.1f;
  float noise_decay_fraction = 0.5f;
  // baseline only
  int batch_size = 64;
  std::size_t replay_capacity = 100000;
  long warmup_steps = 1000;

  float noise_scale(long step) const {
    const double horizon = noise_decay_fraction * double(total_steps);
    if (horizon <= 0 || step >= horizon) return noise_final;
    return noise_start + (noise_final - noise_start) * float(step / horizon);
  }
};

// Ornstein-Uhlenbeck process: x += theta*(0 - x) + sigma*N(0,1), per component.
struct OUNoise {
  float theta = 0.15f;
  float sigma = 0.2f;
  std::array<float, 2> x{0.0f, 0.0f};

  void reset() { x = {0.0f, 0.0f}; }
  std::array<float, 2> step(std::mt19937_64& rng) {
    std::normal_distribution<float> gauss(0.0f, 1.0f);
    for (float& v : x) v += theta * (0.0f - v) + sigma * gauss(rng);
    return x;
  }
};

// Iterates R <- r_i + gamma*R backward from R = bootstrap; out[i] is the
// value at the visit of step i.
std::vector<float> nstep_returns(const std::vector<float>& rewards, float bootstrap,
                                 float gamma);

// Environment as the agent sees it: a state vector (features, a pixel frame,
// or a pretrained embedding) plus the reacher step semantics.
struct FeatureEnv {
  virtual ~FeatureEnv() = default;
  virtual std::vector<std::size_t> state_shape() const = 0;  // {d} or {1,64,64}
  virtual void seed(std::uint64_t s) = 0;
  virtual std::vector<float> reset() = 0;
  // (next state, reward, done, success)
  virtual std::tuple<std::vector<float>, float, bool, bool> step(const Action& a) = 0;

  std::size_t dim() const {
    std::size_t n = 1;
    for (auto e : state_shape()) n *= e;
    return n;
  }
};

// 6-dimensional sin/cos feature observation.
class FeaturesReacherEnv final : public FeatureEnv {
 public:
  std::vector<std::size_t> state_shape() const override { return {6}; }
  void seed(std::uint64_t s) override { env_.seed(s); }
  std::vector<float> reset() override;
  std::tuple<std::vector<float>, float, bool, bool> step(const Action& a) override;

 private:
  ReacherEnv env_;
};

// Raw 64x64 frame observation for end-to-end training.
class PixelReacherEnv final : public FeatureEnv {
 public:
  explicit PixelReacherEnv(NoiseConfig noise = {}) : noise_(noise) {}
  std::vector<std::size_t> state_shape() const override { return {1, 64, 64}; }
  void seed(std::uint64_t s) override { env_.seed(s); }
  std::vector<float> reset() override;
  std::tuple<std::vector<float>, float, bool, bool> step(const Action& a) override;

 private:
  std::vector<float> observe() const;
  ReacherEnv env_;
  NoiseConfig noise_;
};

using EnvFactory = std::function<std::unique_ptr<FeatureEnv>()>;

struct NetConfig {
  std::vector<std::size_t> state_shape{6};
  int hidden1 = 400;
  int hidden2 = 300;

  bool pixels() const { return state_shape.size() == 3; }
  std::vector<LayerSpec> actor_layers() const;
  std::vector<LayerSpec> critic_trunk_layers() const;
  std::vector<LayerSpec> critic_head_layers(float output_l2) const;
};

// Actor, critic (trunk + action-concat head) and their target copies, plus
// the Adam moments. The critic splits at the action concatenation.
struct ActorCritic {
  NetConfig net;
  Network actor, critic_trunk, critic_head;
  Network target_actor, target_trunk, target_head;
  AdamState opt_actor, opt_trunk, opt_head;

  ActorCritic(const NetConfig& cfg, const HyperParams& hp, std::uint64_t seed,
              AccessRegime regime = AccessRegime::exclusive);

  // Q(s,a) through the trained critic; caches are optional.
  Tensor critic_q(const Tensor& states, const Tensor& actions, ForwardCache* trunk_cache,
                  ForwardCache* head_cache) const;
  // Bootstrap targets y = r + gamma*Q'(s', mu'(s')), gamma term dropped on
  // terminal transitions. Reads only the target networks.
  std::vector<float> targets(const Tensor& next_states, const std::vector<float>& rewards,
                             const std::vector<std::uint8_t>& terminal, float gamma) const;

  void soft_update_targets(float tau);
  void sync_targets_hard();
};

// clamp(actor(state) + scale*ou.step(rng), -1, 1)
Action act(const Network& actor, const std::vector<float>& state,
           const std::vector<std::size_t>& state_shape, float noise_scale, OUNoise& ou,
           std::mt19937_64& rng);

struct GradKind {
  enum Value { mean, sum };
};

// Critic and actor gradients for a batch with precomputed targets.
// Critic loss: (1/N or 1) * sum (y_i - Q(s_i,a_i))^2; actor gradients ascend
// Q(s, mu(s)) and are returned in descent convention (ready for Adam).
struct BatchGrads {
  float critic_loss = 0.0f;
  ParamStore actor, trunk, head;
};
BatchGrads compute_grads(ActorCritic& ac, const Tensor& states, const Tensor& actions,
                         const std::vector<float>& returns, GradKind::Value kind);

// One minibatch DDPG update (Listing-5 style): targets from the target nets,
// mean-gradient Adam steps on critic and actor.
float ddpg_update(ActorCritic& ac, const Tensor& states, const Tensor& actions,
                  const std::vector<float>& rewards, const Tensor& next_states,
                  const std::vector<std::uint8_t>& terminal, float gamma);

struct EpisodeRecord {
  long global_step = 0;  // shared step counter when the episode finished
  long episode_index = 0;
  int steps = 0;
  bool success = false;
  double total_reward = 0.0;
  int worker = 0;
};

struct DdpgResult {
  NetConfig net;
  ParamStore actor, critic_trunk, critic_head;
  std::vector<EpisodeRecord> episodes;
  long env_steps = 0;
  std::uint64_t update_regions = 0;  // distributed/async: completed update blocks
  std::uint64_t actor_version = 0, trunk_version = 0, head_version = 0;
};

DdpgResult train_ddpg_baseline(const EnvFactory& make_env, const NetConfig& net,
                               const HyperParams& hp, std::uint64_t seed);
DdpgResult train_ddpg_distributed(const EnvFactory& make_env, const NetConfig& net,
                                  const HyperParams& hp, std::uint64_t seed);
DdpgResult train_ddpg_async(const EnvFactory& make_env, const NetConfig& net,
                            const HyperParams& hp, std::uint64_t seed);

// Greedy closed-loop evaluation (no exploration noise).
struct EvalOutcome {
  int episodes = 0;
  int successes = 0;
  double percent = 0.0;
};
EvalOutcome evaluate_policy(FeatureEnv& env, const Network& actor,
                            const std::vector<std::size_t>& state_shape, int episodes,
                            std::uint64_t seed);

}  // namespace rlab

#endif
