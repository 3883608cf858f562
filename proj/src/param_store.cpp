#include "rlab/param_store.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>

namespace rlab {

namespace hogwild {

void copy_params(ParamStore& dst, const ParamStore& src) {
  dst.check_layout(src);
  for (std::size_t i = 0; i < dst.count(); ++i) {
    Tensor& d = dst.tensor_of(i);
    const Tensor& s = src.tensor_of(i);
    for (std::size_t j = 0; j < d.size(); ++j) d[j] = load(s[j]);
  }
}

void adam_step(ParamStore& shared, const ParamStore& grads, AdamState& st) {
  shared.check_layout(grads);
  const std::int64_t t = st.t.fetch_add(1, std::memory_order_relaxed) + 1;
  const float b1 = st.cfg.beta1, b2 = st.cfg.beta2;
  const float corr1 = 1.0f - std::pow(b1, float(t));
  const float corr2 = 1.0f - std::pow(b2, float(t));
  const float lr = st.cfg.lr, eps = st.cfg.eps;
  for (std::size_t i = 0; i < shared.count(); ++i) {
    Tensor& p = shared.tensor_of(i);
    const Tensor& g = grads.tensor_of(i);
    Tensor& m = st.m[i];
    Tensor& v = st.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const float gj = g[j];
      const float mj = b1 * load(m[j]) + (1.0f - b1) * gj;
      store(m[j], mj);
      const float vj = b2 * load(v[j]) + (1.0f - b2) * gj * gj;
      store(v[j], vj);
      const float step = lr * (mj / corr1) / (std::sqrt(vj / corr2) + eps);
      store(p[j], load(p[j]) - step);
    }
  }
  shared.bump_version();
}

void soft_update(ParamStore& target, const ParamStore& source, float tau) {
  target.check_layout(source);
  for (std::size_t i = 0; i < target.count(); ++i) {
    Tensor& t = target.tensor_of(i);
    const Tensor& s = source.tensor_of(i);
    for (std::size_t j = 0; j < t.size(); ++j)
      store(t[j], tau * load(s[j]) + (1.0f - tau) * load(t[j]));
  }
  target.bump_version();
}

}  // namespace hogwild

namespace {

constexpr char kMagic[4] = {'N', 'N', 'P', '1'};

template <class T>
void write_le(std::ofstream& f, T v) {
  unsigned char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  f.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <class T>
T read_le(std::ifstream& f) {
  unsigned char buf[sizeof(T)];
  f.read(reinterpret_cast<char*>(buf), sizeof(T));
  if (!f) throw std::runtime_error("checkpoint truncated");
  T v;
  std::memcpy(&v, buf, sizeof(T));
  return v;
}

}  // namespace

void save_params(const ParamStore& params, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot open for writing: " + path);
  f.write(kMagic, 4);
  for (std::size_t i = 0; i < params.count(); ++i) {
    const std::string& name = params.name_of(i);
    const Tensor& t = params.tensor_of(i);
    if (name.size() > 0xFFFF) throw std::invalid_argument("parameter name too long");
    write_le<std::uint16_t>(f, static_cast<std::uint16_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_le<std::uint8_t>(f, static_cast<std::uint8_t>(t.shape.size()));
    for (std::size_t e : t.shape) write_le<std::uint32_t>(f, static_cast<std::uint32_t>(e));
    for (float v : t.data) write_le<float>(f, v);
  }
  if (!f) throw std::runtime_error("write failed: " + path);
}

ParamStore load_params(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("bad checkpoint magic in " + path);
  ParamStore store;
  while (true) {
    std::uint16_t nlen;
    {
      unsigned char buf[2];
      f.read(reinterpret_cast<char*>(buf), 2);
      if (f.eof()) break;
      if (!f) throw std::runtime_error("checkpoint truncated");
      std::memcpy(&nlen, buf, 2);
    }
    std::string name(nlen, '\0');
    f.read(name.data(), nlen);
    if (!f) throw std::runtime_error("checkpoint truncated");
    const auto rank = read_le<std::uint8_t>(f);
    std::vector<std::size_t> shape(rank);
    for (auto& e : shape) e = read_le<std::uint32_t>(f);
    Tensor t(shape);
    f.read(reinterpret_cast<char*>(t.ptr()), static_cast<std::streamsize>(t.size() * 4));
    if (!f && !(f.eof() && t.size() == 0)) throw std::runtime_error("checkpoint truncated");
    store.add(name, std::move(t));
  }
  return store;
}

}  // namespace rlab
