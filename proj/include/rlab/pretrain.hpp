#ifndef RLAB_PRETRAIN_HPP
#define RLAB_PRETRAIN_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "rlab/ddpg.hpp"
#include "rlab/network.hpp"
#include "rlab/reacher_env.hpp"
#include "rlab/replay.hpp"

namespace rlab {

// Per-pixel mean over a training set; subtracting it suppresses static
// backgrounds before a model sees the frame.
struct MeanImage {
  std::vector<float> mean;  // 4096 values in [0,1]; empty when unused
};

MeanImage mean_removal_fit(const ReplayBuffer& data, std::size_t limit = 0);
std::vector<float> mean_removal_apply(const std::vector<float>& frame, const MeanImage& m);

// Random-action dataset: `episodes` episodes contribute exactly `steps`
// records each (the environment is re-seeded and reset when an episode
// terminates early). Records carry features, the executed action, the next
// features, the next gripper position, and frames when requested.
ReplayBuffer gen_random_dataset(const NoiseConfig& noise, int episodes, int steps,
                                std::uint64_t seed, bool with_pixels);
void gen_random_dataset_file(const NoiseConfig& noise, int episodes, int steps,
                             std::uint64_t seed, bool with_pixels, const std::string& path);

struct PretrainOpts {
  long batches = 20000;
  int batch_size = 256;
  float lr = 1e-3f;
  float lr_final = -1.0f;  // <0: constant lr; otherwise linear decay to this
  int hidden = 128;        // inverse-model width (paper figure gives none)
  std::uint64_t seed = 0;
  double holdout_fraction = 0.1;
  bool mean_removal = true;  // pixel models only
  int stat_buckets = 10;
};

struct PretrainStats {
  std::vector<double> bucket_loss;        // average training loss per bucket
  std::vector<double> bucket_recon_loss;  // autoencoder: reconstruction part
  std::vector<double> bucket_state_loss;  // autoencoder: state part
  double holdout_mse = 0.0;          // primary training objective on held-out data
  double holdout_metric = 0.0;       // model-specific acceptance metric (see each trainer)
  double holdout_recon_mse = 0.0;    // autoencoder only
};

// Angles at t plus the gripper position at t+1 regress the executed action.
struct InverseModel {
  Network net;  // 6 -> 128 tanh -> 128 tanh -> 2 tanh
  Action act(const ReacherState& s) const;
};

// Pixels regress the 6 physical state values directly.
struct InternalModel {
  Network net;  // conv8 -> conv16 -> dense 100 relu -> dense 6 linear
  MeanImage mean;
  bool mean_removal = true;
  std::vector<float> extract(const std::vector<float>& frame) const;  // the 6-vector
};

// Joint reconstruction + state regression through a 30-unit sigmoid latent
// code; the state head is purely linear.
struct RegularizedAutoencoder {
  Network encoder;     // conv8 -> conv16 -> flatten -> dense 30 sigmoid
  Network state_head;  // 30 -> 6 linear
  Network decoder;     // 30 -> 512 relu -> 4096 linear
  MeanImage mean;
  bool mean_removal = true;
  std::vector<float> extract(const std::vector<float>& frame) const;  // latent, 30
  std::vector<float> reconstruct(const std::vector<float>& frame) const;
  std::vector<float> predict_state(const std::vector<float>& frame) const;
};

// phi(pixels) is a 10-unit sigmoid bottleneck computed before the action is
// concatenated; the head predicts the next state encoding.
struct ForwardModel {
  Network phi;   // conv8 -> conv16 -> flatten -> dense 10 sigmoid
  Network head;  // 12 -> 100 relu -> 6 linear
  MeanImage mean;
  bool mean_removal = true;
  std::vector<float> extract(const std::vector<float>& frame) const;  // phi, 10
  std::vector<float> predict_next(const std::vector<float>& frame, const Action& a) const;
};

InverseModel make_inverse_model(std::uint64_t seed, int hidden = 128);
Action inverse_act(const InverseModel& m, const ReacherState& s);

// holdout_metric: mean squared error of the predicted action (the training loss).
InverseModel train_inverse(const ReplayBuffer& data, const PretrainOpts& opt,
                           PretrainStats* stats = nullptr);
// holdout_metric: RMS Euclidean error of the predicted target position, world units.
InternalModel train_internal(const ReplayBuffer& data, const PretrainOpts& opt,
                             PretrainStats* stats = nullptr);
// holdout_metric: state-head MSE; holdout_recon_mse: reconstruction MSE.
RegularizedAutoencoder train_regularized_autoencoder(const ReplayBuffer& data,
                                                     const PretrainOpts& opt,
                                                     PretrainStats* stats = nullptr);
// holdout_metric: RMSE over the 4 next-angle-encoding components.
ForwardModel train_forward(const ReplayBuffer& data, const PretrainOpts& opt,
                           PretrainStats* stats = nullptr);

// Model checkpoints: NNP1 stores with a zero-extent "kind:<name>" marker and
// the mean image when mean removal is enabled.
void save_inverse(const InverseModel& m, const std::string& path);
void save_internal(const InternalModel& m, const std::string& path);
void save_autoencoder(const RegularizedAutoencoder& m, const std::string& path);
void save_forward(const ForwardModel& m, const std::string& path);
std::string checkpoint_kind(const std::string& path);
InverseModel load_inverse(const std::string& path);
InternalModel load_internal(const std::string& path);
RegularizedAutoencoder load_autoencoder(const std::string& path);
ForwardModel load_forward(const std::string& path);

// Reacher observed through a frozen extractor: render, (mean-remove,) embed.
class PretrainedReacherEnv final : public FeatureEnv {
 public:
  using Extractor = std::function<std::vector<float>(const std::vector<float>&)>;
  PretrainedReacherEnv(Extractor extract, std::size_t dim, NoiseConfig noise)
      : extract_(std::move(extract)), dim_(dim), noise_(noise) {}

  std::vector<std::size_t> state_shape() const override { return {dim_}; }
  void seed(std::uint64_t s) override { env_.seed(s); }
  std::vector<float> reset() override;
  std::tuple<std::vector<float>, float, bool, bool> step(const Action& a) override;

 private:
  std::vector<float> observe() const;
  Extractor extract_;
  std::size_t dim_;
  NoiseConfig noise_;
  ReacherEnv env_;
};

}  // namespace rlab

#endif
