#include "rlab/reacher_env.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

namespace rlab {

namespace {
constexpr double kTwoPi = 2.0 * 3.14159265358979323846;
constexpr double kTargetRadiusMin = 0.2;
constexpr double kTargetRadiusMax = 0.95;
}  // namespace

double wrap_angle(double theta) {
  theta = std::fmod(theta, kTwoPi);
  if (theta < 0.0) theta += kTwoPi;
  return theta;
}

Action::Action(float x, float y)
    : a1(std::clamp(x, -1.0f, 1.0f)), a2(std::clamp(y, -1.0f, 1.0f)) {}

std::pair<Vec2, Vec2> forward_kinematics(double theta1, double theta2) {
  theta1 = wrap_angle(theta1);
  theta2 = wrap_angle(theta2);
  Vec2 joint{kSegment1 * std::cos(theta1), kSegment1 * std::sin(theta1)};
  Vec2 gripper{joint.x + kSegment2 * std::cos(theta1 + theta2),
               joint.y + kSegment2 * std::sin(theta1 + theta2)};
  return {joint, gripper};
}

float reward_fn(double d_old, double d_new) {
  const double r_dist = std::exp(-d_new);
  const double r_ctrl = d_old - d_new;
  const double raw = r_dist * r_ctrl / kRewardScale;
  return static_cast<float>(std::clamp(raw, -1.0, 1.0));
}

std::array<float, 6> state_features(const ReacherState& s) {
  return {static_cast<float>(std::cos(s.theta1)), static_cast<float>(std::sin(s.theta1)),
          static_cast<float>(std::cos(s.theta2)), static_cast<float>(std::sin(s.theta2)),
          static_cast<float>(s.target_x),         static_cast<float>(s.target_y)};
}

std::array<float, 4> state_features_raw(const ReacherState& s) {
  return {static_cast<float>(s.theta1), static_cast<float>(s.theta2),
          static_cast<float>(s.target_x), static_cast<float>(s.target_y)};
}

StepOutcome step(const ReacherState& state, const Action& action) {
  if (state.step_count >= kMaxEpisodeSteps)
    throw std::logic_error("step() called on an episode past its step cap");
  const double d_old = distance(gripper_position(state), target_position(state));
  if (d_old < kSuccessDistance)
    throw std::logic_error("step() called on an already successful episode");
  StepOutcome out;
  out.next_state = state;
  out.next_state.theta1 = wrap_angle(state.theta1 + action.a1 * kMaxStepRadians);
  out.next_state.theta2 = wrap_angle(state.theta2 + action.a2 * kMaxStepRadians);
  out.next_state.step_count = state.step_count + 1;
  const double d_new =
      distance(gripper_position(out.next_state), target_position(out.next_state));
  out.reward = reward_fn(d_old, d_new);
  out.success = d_new < kSuccessDistance;
  out.done = out.success || out.next_state.step_count >= kMaxEpisodeSteps;
  return out;
}

std::vector<int> noise_pixels(const NoiseConfig& noise) {
  std::vector<int> px;
  if (!noise.enabled || noise.pixel_count <= 0) return px;
  std::mt19937_64 rng(noise.seed);
  std::uniform_int_distribution<int> dist(0, PixelFrame::width * PixelFrame::height - 1);
  std::unordered_set<int> seen;
  const int want = std::min(noise.pixel_count, PixelFrame::width * PixelFrame::height);
  while (static_cast<int>(px.size()) < want) {
    const int p = dist(rng);
    if (seen.insert(p).second) px.push_back(p);
  }
  return px;
}

namespace {

// World [-1,1]^2 to pixel coordinates; row 0 is the top of the image (y=+1).
inline double px_col(double x) { return (x + 1.0) * 0.5 * (PixelFrame::width - 1); }
inline double px_row(double y) { return (1.0 - y) * 0.5 * (PixelFrame::height - 1); }

inline void put(PixelFrame& f, int row, int col) {
  if (row >= 0 && row < PixelFrame::height && col >= 0 && col < PixelFrame::width)
    f.at(row, col) = 1.0f;
}

// 1-pixel line by integer stepping along the dominant axis.
void draw_line(PixelFrame& f, double r0, double c0, double r1, double c1) {
  const int steps = std::max(1, static_cast<int>(std::max(std::abs(r1 - r0), std::abs(c1 - c0))) + 1);
  for (int i = 0; i <= steps; ++i) {
    const double t = static_cast<double>(i) / steps;
    put(f, static_cast<int>(std::lround(r0 + (r1 - r0) * t)),
        static_cast<int>(std::lround(c0 + (c1 - c0) * t)));
  }
}

void draw_disc(PixelFrame& f, double rc, double cc, double radius) {
  const int r_lo = static_cast<int>(std::floor(rc - radius)), r_hi = static_cast<int>(std::ceil(rc + radius));
  const int c_lo = static_cast<int>(std::floor(cc - radius)), c_hi = static_cast<int>(std::ceil(cc + radius));
  for (int r = r_lo; r <= r_hi; ++r)
    for (int c = c_lo; c <= c_hi; ++c)
      if ((r - rc) * (r - rc) + (c - cc) * (c - cc) <= radius * radius) put(f, r, c);
}

// 8-point star: plus and cross arms of the given pixel radius.
void draw_star(PixelFrame& f, double rc, double cc, int radius) {
  const int r = static_cast<int>(std::lround(rc)), c = static_cast<int>(std::lround(cc));
  for (int i = -radius; i <= radius; ++i) {
    put(f, r + i, c);
    put(f, r, c + i);
    put(f, r + i, c + i);
    put(f, r + i, c - i);
  }
}

}  // namespace

PixelFrame render(const ReacherState& s, const NoiseConfig& noise) {
  PixelFrame f;
  for (int p : noise_pixels(noise)) f.intensity[p] = 1.0f;
  const auto [joint, gripper] = forward_kinematics(s.theta1, s.theta2);
  draw_star(f, px_row(s.target_y), px_col(s.target_x), 3);
  draw_line(f, px_row(0.0), px_col(0.0), px_row(joint.y), px_col(joint.x));
  draw_line(f, px_row(joint.y), px_col(joint.x), px_row(gripper.y), px_col(gripper.x));
  draw_disc(f, px_row(0.0), px_col(0.0), 1.5);
  draw_disc(f, px_row(joint.y), px_col(joint.x), 1.5);
  draw_disc(f, px_row(gripper.y), px_col(gripper.x), 1.5);
  return f;
}

std::vector<std::uint8_t> quantize_frame(const PixelFrame& f) {
  std::vector<std::uint8_t> out(f.intensity.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = static_cast<std::uint8_t>(std::lround(std::clamp(f.intensity[i], 0.0f, 1.0f) * 255.0f));
  return out;
}

PixelFrame dequantize_frame(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() != PixelFrame::width * PixelFrame::height)
    throw std::invalid_argument("frame byte count must be 4096");
  PixelFrame f;
  for (std::size_t i = 0; i < bytes.size(); ++i) f.intensity[i] = bytes[i] / 255.0f;
  return f;
}

const ReacherState& ReacherEnv::reset() {
  std::uniform_real_distribution<double> angle(0.0, kTwoPi);
  std::uniform_real_distribution<double> r2(kTargetRadiusMin * kTargetRadiusMin,
                                            kTargetRadiusMax * kTargetRadiusMax);
  state_.theta1 = angle(rng_);
  state_.theta2 = angle(rng_);
  state_.step_count = 0;
  const Vec2 gripper = gripper_position(state_);
  while (true) {
    const double radius = std::sqrt(r2(rng_));
    const double phi = angle(rng_);
    state_.target_x = radius * std::cos(phi);
    state_.target_y = radius * std::sin(phi);
    if (distance(gripper, target_position(state_)) >= kSuccessDistance) break;
  }
  done_ = false;
  return state_;
}

const ReacherState& ReacherEnv::reset(std::uint64_t reseed) {
  rng_.seed(reseed);
  return reset();
}

StepOutcome ReacherEnv::step(const Action& a) {
  if (done_) throw std::logic_error("step() called on a finished episode");
  StepOutcome out = rlab::step(state_, a);
  state_ = out.next_state;
  done_ = out.done;
  return out;
}

}  // namespace rlab
