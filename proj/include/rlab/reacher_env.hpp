#ifndef RLAB_REACHER_ENV_HPP
#define RLAB_REACHER_ENV_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace rlab {

// Planar 2-segment reacher. Purely kinematic: actions rotate the segments,
// nothing else moves. World coordinates span [-1,1] on both axes with the
// arm base at the origin.

constexpr double kSegment1 = 0.5;
constexpr double kSegment2 = 0.5;
constexpr double kMaxStepRadians = 3.14159265358979323846 / 90.0;  // 2 degrees
constexpr double kSuccessDistance = 0.1;
constexpr int kMaxEpisodeSteps = 1000;
// Upper bound on single-step gripper displacement; normalizes the reward.
constexpr double kRewardScale = kMaxStepRadians * (kSegment1 + kSegment2 + kSegment2);

struct Vec2 {
  double x = 0.0, y = 0.0;
};

inline double distance(const Vec2& a, const Vec2& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return std::sqrt(dx * dx + dy * dy);
}

struct ReacherState {
  double theta1 = 0.0;  // absolute angle of segment 1, in [0, 2pi)
  double theta2 = 0.0;  // angle of segment 2 relative to segment 1, in [0, 2pi)
  double target_x = 0.0;
  double target_y = 0.0;
  int step_count = 0;
};

struct Action {
  float a1 = 0.0f, a2 = 0.0f;
  Action() = default;
  Action(float x, float y);  // clamps both components into [-1,1]
};

struct StepOutcome {
  ReacherState next_state;
  float reward = 0.0f;
  bool done = false;
  bool success = false;
};

struct PixelFrame {
  static constexpr int width = 64;
  static constexpr int height = 64;
  std::array<float, 64 * 64> intensity{};  // row-major, values in [0,1]

  float& at(int row, int col) { return intensity[row * width + col]; }
  float at(int row, int col) const { return intensity[row * width + col]; }
};

struct NoiseConfig {
  bool enabled = false;
  std::uint64_t seed = 0;
  int pixel_count = 60;
};

double wrap_angle(double theta);  // into [0, 2pi)

// joint = end of segment 1, gripper = end of segment 2.
std::pair<Vec2, Vec2> forward_kinematics(double theta1, double theta2);

inline Vec2 gripper_position(const ReacherState& s) {
  return forward_kinematics(s.theta1, s.theta2).second;
}
inline Vec2 target_position(const ReacherState& s) { return {s.target_x, s.target_y}; }

// r = exp(-d_new) * (d_old - d_new), normalized by the displacement bound
// and clamped into [-1,1].
float reward_fn(double d_old, double d_new);

// [cos t1, sin t1, cos t2, sin t2, target_x, target_y]
std::array<float, 6> state_features(const ReacherState& s);
// [t1, t2, target_x, target_y] for fidelity comparisons against raw angles.
std::array<float, 4> state_features_raw(const ReacherState& s);

// Pure transition function. Throws std::logic_error when the episode is
// already finished (step cap reached or gripper already within the success
// distance).
StepOutcome step(const ReacherState& state, const Action& action);

PixelFrame render(const ReacherState& s, const NoiseConfig& noise);

// The static noise pixel set for a config: pixel_count distinct positions,
// identical for every frame rendered under the same config.
std::vector<int> noise_pixels(const NoiseConfig& noise);

// u8 quantization used by replay storage and the wire protocol
// (intensity*255, rounded).
std::vector<std::uint8_t> quantize_frame(const PixelFrame& f);
PixelFrame dequantize_frame(const std::vector<std::uint8_t>& bytes);

class ReacherEnv {
 public:
  ReacherEnv() : rng_(0x9e3779b97f4a7c15ull) {}
  explicit ReacherEnv(std::uint64_t seed) : rng_(seed) {}

  void seed(std::uint64_t s) { rng_.seed(s); }

  // Draws a fresh episode from the current rng stream: angles uniform in
  // [0, 2pi), target uniform by area over the annulus r in [0.2, 0.95],
  // resampled until the initial gripper-target distance is >= 0.1.
  const ReacherState& reset();
  const ReacherState& reset(std::uint64_t reseed);

  StepOutcome step(const Action& a);

  const ReacherState& state() const { return state_; }
  bool done() const { return done_; }

 private:
  ReacherState state_{};
  bool done_ = true;
  std::mt19937_64 rng_;
};

}  // namespace rlab

#endif
