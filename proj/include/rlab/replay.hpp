#ifndef RLAB_REPLAY_HPP
#define RLAB_REPLAY_HPP

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace rlab {

enum class StateKind : std::uint8_t { features = 0, pixels = 1, features_and_pixels = 2 };

// One replay record. Which payloads are populated is fixed by the owning
// buffer's StateKind; pixel payloads are 64x64 intensities quantized to u8.
struct Transition {
  std::vector<float> state;
  std::vector<float> next_state;
  std::vector<std::uint8_t> state_px;
  std::vector<std::uint8_t> next_px;
  std::array<float, 2> action{0.0f, 0.0f};
  float reward = 0.0f;
  std::array<float, 2> next_gripper{0.0f, 0.0f};
  bool terminal = false;
};

// Ring buffer with strictly oldest-first overwrite and uniform
// with-replacement sampling.
class ReplayBuffer {
 public:
  ReplayBuffer(StateKind kind, std::size_t feature_dim, std::size_t capacity);

  StateKind kind() const { return kind_; }
  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t capacity() const { return capacity_; }
  std::size_t count() const { return storage_.size(); }
  bool has_pixels() const { return kind_ != StateKind::features; }
  bool has_features() const { return kind_ != StateKind::pixels; }

  void push(Transition t);

  // Logical index 0 is the oldest stored record.
  const Transition& logical(std::size_t i) const;

  std::vector<std::size_t> sample_indices(std::size_t batch, std::mt19937_64& rng) const;

  void dump(const std::string& path) const;
  static ReplayBuffer load(const std::string& path);

 private:
  void validate(const Transition& t) const;

  StateKind kind_;
  std::size_t feature_dim_;
  std::size_t capacity_;
  std::size_t cursor_ = 0;  // next physical slot to overwrite once full
  std::vector<Transition> storage_;
};

}  // namespace rlab

#endif
