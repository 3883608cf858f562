#ifndef RLAB_PARAM_STORE_HPP
#define RLAB_PARAM_STORE_HPP

#include <atomic>
#include <cmath>
#include <cstdint>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rlab/tensor.hpp"

namespace rlab {

// exclusive: all reads/writes of the store happen under one mutual-exclusion
//   region (the caller holds the region lock).
// relaxed: element-wise updates are individually atomic; no cross-element
//   ordering or visibility guarantees (Hogwild). Readers may see mixtures
//   across elements but never a torn element.
enum class AccessRegime { exclusive, relaxed };

template <class S>
class ParamStoreT {
 public:
  explicit ParamStoreT(AccessRegime regime = AccessRegime::exclusive)
      : regime_(regime) {}

  ParamStoreT(const ParamStoreT& o)
      : items_(o.items_), index_(o.index_), regime_(o.regime_) {
    version_.store(o.version_.load(std::memory_order_relaxed),
                   std::memory_order_relaxed);
  }
  ParamStoreT& operator=(const ParamStoreT& o) {
    if (this != &o) {
      items_ = o.items_;
      index_ = o.index_;
      regime_ = o.regime_;
      version_.store(o.version_.load(std::memory_order_relaxed),
                     std::memory_order_relaxed);
    }
    return *this;
  }

  TensorT<S>& add(const std::string& name, TensorT<S> t) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    index_.emplace(name, items_.size());
    items_.emplace_back(name, std::move(t));
    return items_.back().second;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  TensorT<S>& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("no such parameter: " + name);
    return items_[it->second].second;
  }
  const TensorT<S>& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("no such parameter: " + name);
    return items_[it->second].second;
  }

  std::size_t count() const { return items_.size(); }
  const std::string& name_of(std::size_t i) const { return items_[i].first; }
  TensorT<S>& tensor_of(std::size_t i) { return items_[i].second; }
  const TensorT<S>& tensor_of(std::size_t i) const { return items_[i].second; }

  AccessRegime regime() const { return regime_; }
  std::uint64_t version() const { return version_.load(std::memory_order_relaxed); }

  // Under the exclusive regime this is a plain read-modify-write: it only
  // counts correctly if the caller's mutual exclusion actually works, which
  // is what the no-lost-update checks rely on. Under the relaxed regime the
  // counter itself must not be torn, so fetch_add is used.
  void bump_version() {
    if (regime_ == AccessRegime::exclusive) {
      version_.store(version_.load(std::memory_order_relaxed) + 1,
                     std::memory_order_relaxed);
    } else {
      version_.fetch_add(1, std::memory_order_relaxed);
    }
  }

  // Element-wise value copy; shapes and names must already match.
  void copy_values_from(const ParamStoreT& src) {
    check_layout(src);
    for (std::size_t i = 0; i < items_.size(); ++i)
      items_[i].second.data = src.items_[i].second.data;
  }

  // Template for creating gradient/moment containers with matching layout.
  ParamStoreT zeros_like() const {
    ParamStoreT out(AccessRegime::exclusive);
    for (const auto& [name, t] : items_) out.add(name, TensorT<S>(t.shape));
    return out;
  }

  void set_zero() {
    for (auto& [name, t] : items_) t.fill(S(0));
  }

  void check_layout(const ParamStoreT& o) const {
    if (o.items_.size() != items_.size())
      throw std::invalid_argument("parameter store layout mismatch");
    for (std::size_t i = 0; i < items_.size(); ++i) {
      if (items_[i].first != o.items_[i].first ||
          items_[i].second.shape != o.items_[i].second.shape)
        throw std::invalid_argument("parameter store layout mismatch at " + items_[i].first);
    }
  }

 private:
  std::vector<std::pair<std::string, TensorT<S>>> items_;
  std::unordered_map<std::string, std::size_t> index_;
  std::atomic<std::uint64_t> version_{0};
  AccessRegime regime_;
};

using ParamStore = ParamStoreT<float>;

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

template <class S>
struct AdamStateT {
  AdamConfig cfg;
  std::vector<TensorT<S>> m, v;
  std::atomic<std::int64_t> t{0};

  AdamStateT() = default;
  AdamStateT(const ParamStoreT<S>& params, AdamConfig c) : cfg(c) {
    for (std::size_t i = 0; i < params.count(); ++i) {
      m.emplace_back(params.tensor_of(i).shape);
      v.emplace_back(params.tensor_of(i).shape);
    }
  }
  AdamStateT(const AdamStateT& o) : cfg(o.cfg), m(o.m), v(o.v) {
    t.store(o.t.load(std::memory_order_relaxed), std::memory_order_relaxed);
  }
};

using AdamState = AdamStateT<float>;

// Standard bias-corrected Adam. Gradients must share the store's layout.
template <class S>
void adam_step(ParamStoreT<S>& params, const ParamStoreT<S>& grads, AdamStateT<S>& st) {
  params.check_layout(grads);
  const std::int64_t t = st.t.load(std::memory_order_relaxed) + 1;
  st.t.store(t, std::memory_order_relaxed);
  const S b1 = S(st.cfg.beta1), b2 = S(st.cfg.beta2);
  const S corr1 = S(1) - std::pow(b1, S(t));
  const S corr2 = S(1) - std::pow(b2, S(t));
  const S lr = S(st.cfg.lr), eps = S(st.cfg.eps);
  for (std::size_t i = 0; i < params.count(); ++i) {
    TensorT<S>& p = params.tensor_of(i);
    const TensorT<S>& g = grads.tensor_of(i);
    TensorT<S>& m = st.m[i];
    TensorT<S>& v = st.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const S gj = g[j];
      m[j] = b1 * m[j] + (S(1) - b1) * gj;
      v[j] = b2 * v[j] + (S(1) - b2) * gj * gj;
      const S mhat = m[j] / corr1;
      const S vhat = v[j] / corr2;
      p[j] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
  params.bump_version();
}

// theta_target <- tau*theta_source + (1-tau)*theta_target, element-wise.
template <class S>
void soft_update(ParamStoreT<S>& target, const ParamStoreT<S>& source, S tau) {
  target.check_layout(source);
  for (std::size_t i = 0; i < target.count(); ++i) {
    TensorT<S>& t = target.tensor_of(i);
    const TensorT<S>& s = source.tensor_of(i);
    for (std::size_t j = 0; j < t.size(); ++j)
      t[j] = tau * s[j] + (S(1) - tau) * t[j];
  }
  target.bump_version();
}

// Hogwild-side primitives: every element access is an individually atomic
// relaxed load/store, nothing more. Only meaningful for float stores.
namespace hogwild {

inline float load(const float& x) {
  return std::atomic_ref<const float>(x).load(std::memory_order_relaxed);
}
inline void store(float& x, float v) {
  std::atomic_ref<float>(x).store(v, std::memory_order_relaxed);
}

// dst (private) <- src (shared, relaxed element loads).
void copy_params(ParamStore& dst, const ParamStore& src);

// Adam applied to a shared store without exclusion.
void adam_step(ParamStore& shared, const ParamStore& grads, AdamState& st);

// Soft update of a shared target store from a shared source store.
void soft_update(ParamStore& target, const ParamStore& source, float tau);

}  // namespace hogwild

// "NNP1" checkpoint file: magic, then per-tensor records
// (u16 name length, name bytes, u8 rank, u32 extents, f32 little-endian data).
void save_params(const ParamStore& params, const std::string& path);
ParamStore load_params(const std::string& path);

}  // namespace rlab

#endif
