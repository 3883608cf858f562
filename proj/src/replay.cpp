#include "rlab/replay.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace rlab {

namespace {

constexpr char kMagic[5] = {'R', 'L', 'R', 'B', '1'};
constexpr std::size_t kFramePixels = 64 * 64;

template <class T>
void put(std::ofstream& f, T v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::ifstream& f) {
  T v;
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) throw std::runtime_error("dataset file truncated");
  return v;
}

}  // namespace

ReplayBuffer::ReplayBuffer(StateKind kind, std::size_t feature_dim, std::size_t capacity)
    : kind_(kind), feature_dim_(feature_dim), capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("replay capacity must be positive");
  if (has_features() && feature_dim_ == 0)
    throw std::invalid_argument("feature dim must be positive for feature buffers");
  if (!has_features()) feature_dim_ = 0;
}

void ReplayBuffer::validate(const Transition& t) const {
  const std::size_t want_f = has_features() ? feature_dim_ : 0;
  const std::size_t want_p = has_pixels() ? kFramePixels : 0;
  if (t.state.size() != want_f || t.next_state.size() != want_f)
    throw std::invalid_argument("transition feature payload does not match buffer kind");
  if (t.state_px.size() != want_p || t.next_px.size() != want_p)
    throw std::invalid_argument("transition pixel payload does not match buffer kind");
}

void ReplayBuffer::push(Transition t) {
  validate(t);
  if (storage_.size() < capacity_) {
    storage_.push_back(std::move(t));
  } else {
    storage_[cursor_] = std::move(t);
    cursor_ = (cursor_ + 1) % capacity_;
  }
}

const Transition& ReplayBuffer::logical(std::size_t i) const {
  if (i >= storage_.size()) throw std::out_of_range("replay index out of range");
  if (storage_.size() < capacity_) return storage_[i];
  return storage_[(cursor_ + i) % capacity_];
}

std::vector<std::size_t> ReplayBuffer::sample_indices(std::size_t batch,
                                                      std::mt19937_64& rng) const {
  if (storage_.empty()) throw std::logic_error("sample from empty replay buffer");
  std::uniform_int_distribution<std::size_t> pick(0, storage_.size() - 1);
  std::vector<std::size_t> out(batch);
  for (auto& i : out) i = pick(rng);
  return out;
}

void ReplayBuffer::dump(const std::string& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(kMagic, 5);
  put<std::uint8_t>(f, static_cast<std::uint8_t>(kind_));
  put<std::uint32_t>(f, static_cast<std::uint32_t>(feature_dim_));
  put<std::uint32_t>(f, 64);
  put<std::uint32_t>(f, 64);
  put<std::uint64_t>(f, static_cast<std::uint64_t>(capacity_));
  put<std::uint64_t>(f, static_cast<std::uint64_t>(storage_.size()));
  for (std::size_t i = 0; i < storage_.size(); ++i) {
    const Transition& t = logical(i);
    f.write(reinterpret_cast<const char*>(t.state.data()), std::streamsize(t.state.size() * 4));
    f.write(reinterpret_cast<const char*>(t.state_px.data()), std::streamsize(t.state_px.size()));
    f.write(reinterpret_cast<const char*>(t.action.data()), 8);
    put<float>(f, t.reward);
    f.write(reinterpret_cast<const char*>(t.next_state.data()),
            std::streamsize(t.next_state.size() * 4));
    f.write(reinterpret_cast<const char*>(t.next_px.data()), std::streamsize(t.next_px.size()));
    f.write(reinterpret_cast<const char*>(t.next_gripper.data()), 8);
    put<std::uint8_t>(f, t.terminal ? 1 : 0);
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

ReplayBuffer ReplayBuffer::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open dataset: " + path);
  char magic[5];
  f.read(magic, 5);
  if (!f || std::memcmp(magic, kMagic, 5) != 0)
    throw std::runtime_error("bad dataset magic in " + path);
  const auto kind_raw = get<std::uint8_t>(f);
  if (kind_raw > 2) throw std::runtime_error("bad state kind in " + path);
  const auto kind = static_cast<StateKind>(kind_raw);
  const auto fdim = get<std::uint32_t>(f);
  const auto fh = get<std::uint32_t>(f);
  const auto fw = get<std::uint32_t>(f);
  if ((kind != StateKind::features) && (fh != 64 || fw != 64))
    throw std::runtime_error("unsupported frame dims in " + path);
  const auto capacity = get<std::uint64_t>(f);
  const auto count = get<std::uint64_t>(f);
  if (capacity == 0 || count > capacity) throw std::runtime_error("bad record count in " + path);

  // Validate total length before constructing anything: a truncated file must
  // not yield a partial buffer.
  const bool feats = kind != StateKind::pixels;
  const bool pixels = kind != StateKind::features;
  const std::size_t rec = (feats ? 2 * fdim * 4 : 0) + (pixels ? 2 * kFramePixels : 0) + 8 + 4 + 8 + 1;
  const auto payload_start = f.tellg();
  f.seekg(0, std::ios::end);
  const auto end = f.tellg();
  if (static_cast<std::uint64_t>(end - payload_start) != count * rec)
    throw std::runtime_error("dataset payload truncated or oversized: " + path);
  f.seekg(payload_start);

  ReplayBuffer buf(kind, feats ? fdim : 0, capacity);
  for (std::uint64_t i = 0; i < count; ++i) {
    Transition t;
    if (feats) {
      t.state.resize(fdim);
      f.read(reinterpret_cast<char*>(t.state.data()), std::streamsize(fdim * 4));
    }
    if (pixels) {
      t.state_px.resize(kFramePixels);
      f.read(reinterpret_cast<char*>(t.state_px.data()), kFramePixels);
    }
    f.read(reinterpret_cast<char*>(t.action.data()), 8);
    t.reward = get<float>(f);
    if (feats) {
      t.next_state.resize(fdim);
      f.read(reinterpret_cast<char*>(t.next_state.data()), std::streamsize(fdim * 4));
    }
    if (pixels) {
      t.next_px.resize(kFramePixels);
      f.read(reinterpret_cast<char*>(t.next_px.data()), kFramePixels);
    }
    f.read(reinterpret_cast<char*>(t.next_gripper.data()), 8);
    t.terminal = get<std::uint8_t>(f) != 0;
    if (!f) throw std::runtime_error("dataset file truncated");
    buf.push(std::move(t));
  }
  return buf;
}

}  // namespace rlab
