#ifndef RLAB_NETWORK_HPP
#define RLAB_NETWORK_HPP

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "rlab/param_store.hpp"
#include "rlab/tensor.hpp"

namespace rlab {

enum class Activation { linear, relu, tanh, sigmoid };

// Feed-forward layer description. Convolutions use centered odd kernels with
// zero padding and no kernel flip (cross-correlation); output extent per axis
// is ceil(extent/stride).
struct LayerSpec {
  enum class Kind { dense, conv2d, flatten };
  Kind kind = Kind::dense;
  int in = 0, out = 0;                              // dense
  int in_ch = 0, out_ch = 0, kernel = 5, stride = 1;  // conv2d
  Activation act = Activation::linear;
  float l2 = 0.0f;  // penalty on weights (not biases)

  static LayerSpec dense(int in, int out, Activation act, float l2 = 0.0f) {
    if (in <= 0 || out <= 0) throw std::invalid_argument("dense layer extents must be positive");
    LayerSpec s;
    s.kind = Kind::dense;
    s.in = in;
    s.out = out;
    s.act = act;
    s.l2 = l2;
    return s;
  }
  static LayerSpec conv2d(int in_ch, int out_ch, int kernel, int stride, Activation act,
                          float l2 = 0.0f) {
    if (kernel % 2 == 0) throw std::invalid_argument("conv kernel extent must be odd");
    if (stride < 1) throw std::invalid_argument("conv stride must be >= 1");
    if (in_ch <= 0 || out_ch <= 0) throw std::invalid_argument("conv channels must be positive");
    LayerSpec s;
    s.kind = Kind::conv2d;
    s.in_ch = in_ch;
    s.out_ch = out_ch;
    s.kernel = kernel;
    s.stride = stride;
    s.act = act;
    s.l2 = l2;
    return s;
  }
  static LayerSpec flatten() {
    LayerSpec s;
    s.kind = Kind::flatten;
    return s;
  }
};

template <class S>
void apply_activation(TensorT<S>& t, Activation a) {
  switch (a) {
    case Activation::linear:
      return;
    case Activation::relu:
      for (S& v : t.data) v = v > S(0) ? v : S(0);
      return;
    case Activation::tanh:
      for (S& v : t.data) v = std::tanh(v);
      return;
    case Activation::sigmoid:
      for (S& v : t.data) v = S(1) / (S(1) + std::exp(-v));
      return;
  }
}

// d *= act'(preimage), expressed through the layer output y.
template <class S>
void apply_activation_grad(TensorT<S>& d, const TensorT<S>& y, Activation a) {
  switch (a) {
    case Activation::linear:
      return;
    case Activation::relu:
      for (std::size_t i = 0; i < d.size(); ++i)
        if (!(y[i] > S(0))) d[i] = S(0);
      return;
    case Activation::tanh:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= S(1) - y[i] * y[i];
      return;
    case Activation::sigmoid:
      for (std::size_t i = 0; i < d.size(); ++i) d[i] *= y[i] * (S(1) - y[i]);
      return;
  }
}

// Glorot-uniform weights (+-sqrt(6/(fan_in+fan_out))), zero biases.
// Parameter names are "l<i>.W" / "l<i>.b" in layer order.
template <class S>
ParamStoreT<S> glorot_init(const std::vector<LayerSpec>& layers, std::uint64_t seed,
                           AccessRegime regime = AccessRegime::exclusive) {
  ParamStoreT<S> store(regime);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.kind == LayerSpec::Kind::flatten) continue;
    std::size_t fan_in, fan_out;
    std::vector<std::size_t> wshape, bshape;
    if (l.kind == LayerSpec::Kind::dense) {
      fan_in = static_cast<std::size_t>(l.in);
      fan_out = static_cast<std::size_t>(l.out);
      wshape = {fan_out, fan_in};
      bshape = {fan_out};
    } else {
      const std::size_t kk = static_cast<std::size_t>(l.kernel) * l.kernel;
      fan_in = static_cast<std::size_t>(l.in_ch) * kk;
      fan_out = static_cast<std::size_t>(l.out_ch) * kk;
      wshape = {static_cast<std::size_t>(l.out_ch), static_cast<std::size_t>(l.in_ch),
                static_cast<std::size_t>(l.kernel), static_cast<std::size_t>(l.kernel)};
      bshape = {static_cast<std::size_t>(l.out_ch)};
    }
    const S limit = std::sqrt(S(6) / S(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-double(limit), double(limit));
    TensorT<S> w(wshape);
    for (S& v : w.data) v = static_cast<S>(dist(rng));
    store.add("l" + std::to_string(i) + ".W", std::move(w));
    store.add("l" + std::to_string(i) + ".b", TensorT<S>(bshape));
  }
  return store;
}

// Activations recorded by forward; consumed once by a matching backward.
template <class S>
struct ForwardCacheT {
  std::vector<TensorT<S>> acts;  // acts[0] = input, acts[L] = output
  std::uint64_t version = 0;
  bool batched = true;
};

template <class S>
class NetworkT {
 public:
  NetworkT() = default;
  NetworkT(std::vector<LayerSpec> layers, std::uint64_t seed,
           AccessRegime regime = AccessRegime::exclusive)
      : layers_(std::move(layers)), params_(glorot_init<S>(layers_, seed, regime)) {}
  NetworkT(std::vector<LayerSpec> layers, ParamStoreT<S> params)
      : layers_(std::move(layers)), params_(std::move(params)) {}

  const std::vector<LayerSpec>& layers() const { return layers_; }
  ParamStoreT<S>& params() { return params_; }
  const ParamStoreT<S>& params() const { return params_; }

  // Input is (N, in) / (N, C, H, W), or unbatched (in) / (C, H, W).
  TensorT<S> forward(const TensorT<S>& input, ForwardCacheT<S>* cache = nullptr) const {
    bool batched = true;
    TensorT<S> x = normalize_batch(input, &batched);
    if (cache) {
      cache->acts.clear();
      cache->acts.reserve(layers_.size() + 1);
      cache->acts.push_back(x);
      cache->version = params_.version();
      cache->batched = batched;
    }
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      x = layer_forward(i, x);
      if (cache) cache->acts.push_back(x);
    }
    if (!batched) x.shape.erase(x.shape.begin());
    return x;
  }

  // Returns parameter gradients (including any l2 weight penalties) and,
  // optionally, the gradient with respect to the network input.
  ParamStoreT<S> backward(const ForwardCacheT<S>& cache, const TensorT<S>& output_grad,
                          TensorT<S>* input_grad = nullptr) const {
    if (cache.acts.size() != layers_.size() + 1)
      throw std::logic_error("forward cache does not match network");
    if (cache.version != params_.version())
      throw std::logic_error("stale forward cache: parameters changed since forward");
    TensorT<S> d = output_grad;
    if (!cache.batched) d.shape.insert(d.shape.begin(), 1);
    if (d.shape != cache.acts.back().shape)
      throw std::invalid_argument("output gradient shape mismatch");
    ParamStoreT<S> grads = params_.zeros_like();
    for (std::size_t i = layers_.size(); i-- > 0;) {
      d = layer_backward(i, cache.acts[i], cache.acts[i + 1], d, grads);
    }
    add_penalty_grads(grads);
    if (input_grad) {
      if (!cache.batched) d.shape.erase(d.shape.begin());
      *input_grad = std::move(d);
    }
    return grads;
  }

  // Sum of l2 weight penalties, lambda * ||W||^2 per layer.
  S penalty() const {
    S total = S(0);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].l2 <= 0.0f || layers_[i].kind == LayerSpec::Kind::flatten) continue;
      const TensorT<S>& w = params_.at("l" + std::to_string(i) + ".W");
      S ss = S(0);
      for (S v : w.data) ss += v * v;
      total += S(layers_[i].l2) * ss;
    }
    return total;
  }

 private:
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MapM = Eigen::Map<Mat>;
  using CMapM = Eigen::Map<const Mat>;

  TensorT<S> normalize_batch(const TensorT<S>& input, bool* batched) const {
    if (layers_.empty()) throw std::logic_error("empty network");
    const std::size_t want = layers_.front().kind == LayerSpec::Kind::dense ? 2 : 4;
    TensorT<S> x = input;
    if (x.shape.size() + 1 == want) {
      x.shape.insert(x.shape.begin(), 1);
      *batched = false;
    } else if (x.shape.size() == want) {
      *batched = true;
    } else {
      throw std::invalid_argument("input rank " + std::to_string(input.shape.size()) +
                                  " does not match first layer");
    }
    return x;
  }

  TensorT<S> layer_forward(std::size_t i, const TensorT<S>& x) const {
    const LayerSpec& l = layers_[i];
    switch (l.kind) {
      case LayerSpec::Kind::dense:
        return dense_forward(i, x);
      case LayerSpec::Kind::conv2d:
        return conv_forward(i, x);
      case LayerSpec::Kind::flatten: {
        if (x.shape.size() != 4) throw std::invalid_argument("flatten expects (N,C,H,W) input");
        TensorT<S> y = x;
        y.shape = {x.shape[0], x.shape[1] * x.shape[2] * x.shape[3]};
        return y;
      }
    }
    throw std::logic_error("unreachable");
  }

  TensorT<S> dense_forward(std::size_t i, const TensorT<S>& x) const {
    const LayerSpec& l = layers_[i];
    if (x.shape.size() != 2 || x.shape[1] != static_cast<std::size_t>(l.in))
      throw std::invalid_argument("dense layer l" + std::to_string(i) + " expects (N," +
                                  std::to_string(l.in) + "), got " + shape_str(x));
    const std::size_t n = x.shape[0];
    const TensorT<S>& w = params_.at("l" + std::to_string(i) + ".W");
    const TensorT<S>& b = params_.at("l" + std::to_string(i) + ".b");
    TensorT<S> y({n, static_cast<std::size_t>(l.out)});
    CMapM xm(x.ptr(), n, l.in);
    CMapM wm(w.ptr(), l.out, l.in);
    MapM ym(y.ptr(), n, l.out);
    ym.noalias() = xm * wm.transpose();
    ym.rowwise() += Eigen::Map<const Eigen::Matrix<S, 1, Eigen::Dynamic>>(b.ptr(), l.out);
    apply_activation(y, l.act);
    return y;
  }

  TensorT<S> conv_forward(std::size_t li, const TensorT<S>& x) const {
    const LayerSpec& l = layers_[li];
    if (x.shape.size() != 4 || x.shape[1] != static_cast<std::size_t>(l.in_ch))
      throw std::invalid_argument("conv layer l" + std::to_string(li) + " input mismatch, got " +
                                  shape_str(x));
    const int n = static_cast<int>(x.shape[0]);
    const int c = l.in_ch, h = static_cast<int>(x.shape[2]), wd = static_cast<int>(x.shape[3]);
    const int k = l.kernel, s = l.stride, pad = k / 2;
    const int ho = (h + s - 1) / s, wo = (wd + s - 1) / s;
    const int ckk = c * k * k, owh = ho * wo;
    const TensorT<S>& wt = params_.at("l" + std::to_string(li) + ".W");
    const TensorT<S>& b = params_.at("l" + std::to_string(li) + ".b");
    TensorT<S> y({static_cast<std::size_t>(n), static_cast<std::size_t>(l.out_ch),
                  static_cast<std::size_t>(ho), static_cast<std::size_t>(wo)});
    Mat col(owh, ckk);
    CMapM wm(wt.ptr(), l.out_ch, ckk);
    for (int ni = 0; ni < n; ++ni) {
      im2col(x.ptr() + static_cast<std::size_t>(ni) * c * h * wd, c, h, wd, k, s, pad, col);
      MapM ym(y.ptr() + static_cast<std::size_t>(ni) * l.out_ch * owh, l.out_ch, owh);
      ym.noalias() = wm * col.transpose();
      ym.colwise() += Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, 1>>(b.ptr(), l.out_ch);
    }
    apply_activation(y, l.act);
    return y;
  }

  TensorT<S> layer_backward(std::size_t i, const TensorT<S>& x, const TensorT<S>& y,
                            TensorT<S> d, ParamStoreT<S>& grads) const {
    const LayerSpec& l = layers_[i];
    if (l.kind == LayerSpec::Kind::flatten) {
      d.shape = x.shape;
      return d;
    }
    apply_activation_grad(d, y, l.act);
    if (l.kind == LayerSpec::Kind::dense) return dense_backward(i, x, d, grads);
    return conv_backward(i, x, d, grads);
  }

  TensorT<S> dense_backward(std::size_t i, const TensorT<S>& x, const TensorT<S>& dz,
                            ParamStoreT<S>& grads) const {
    const LayerSpec& l = layers_[i];
    const std::size_t n = x.shape[0];
    const TensorT<S>& w = params_.at("l" + std::to_string(i) + ".W");
    TensorT<S>& gw = grads.at("l" + std::to_string(i) + ".W");
    TensorT<S>& gb = grads.at("l" + std::to_string(i) + ".b");
    CMapM xm(x.ptr(), n, l.in);
    CMapM dzm(dz.ptr(), n, l.out);
    CMapM wm(w.ptr(), l.out, l.in);
    MapM gwm(gw.ptr(), l.out, l.in);
    gwm.noalias() = dzm.transpose() * xm;
    Eigen::Map<Eigen::Matrix<S, 1, Eigen::Dynamic>>(gb.ptr(), l.out) = dzm.colwise().sum();
    TensorT<S> dx({n, static_cast<std::size_t>(l.in)});
    MapM dxm(dx.ptr(), n, l.in);
    dxm.noalias() = dzm * wm;
    return dx;
  }

  TensorT<S> conv_backward(std::size_t li, const TensorT<S>& x, const TensorT<S>& dz,
                           ParamStoreT<S>& grads) const {
    const LayerSpec& l = layers_[li];
    const int n = static_cast<int>(x.shape[0]);
    const int c = l.in_ch, h = static_cast<int>(x.shape[2]), wd = static_cast<int>(x.shape[3]);
    const int k = l.kernel, s = l.stride, pad = k / 2;
    const int ho = (h + s - 1) / s, wo = (wd + s - 1) / s;
    const int ckk = c * k * k, owh = ho * wo;
    const TensorT<S>& wt = params_.at("l" + std::to_string(li) + ".W");
    TensorT<S>& gw = grads.at("l" + std::to_string(li) + ".W");
    TensorT<S>& gb = grads.at("l" + std::to_string(li) + ".b");
    TensorT<S> dx(x.shape);
    Mat col(owh, ckk), dcol(owh, ckk);
    CMapM wm(wt.ptr(), l.out_ch, ckk);
    MapM gwm(gw.ptr(), l.out_ch, ckk);
    Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, 1>> gbm(gb.ptr(), l.out_ch);
    for (int ni = 0; ni < n; ++ni) {
      im2col(x.ptr() + static_cast<std::size_t>(ni) * c * h * wd, c, h, wd, k, s, pad, col);
      CMapM dzm(dz.ptr() + static_cast<std::size_t>(ni) * l.out_ch * owh, l.out_ch, owh);
      gwm.noalias() += dzm * col;
      gbm += dzm.rowwise().sum();
      dcol.noalias() = dzm.transpose() * wm;
      col2im_add(dcol, c, h, wd, k, s, pad, dx.ptr() + static_cast<std::size_t>(ni) * c * h * wd);
    }
    return dx;
  }

  static void im2col(const S* x, int c, int h, int w, int k, int s, int pad, Mat& col) {
    const int ho = (h + s - 1) / s, wo = (w + s - 1) / s;
    for (int oi = 0; oi < ho; ++oi) {
      for (int oj = 0; oj < wo; ++oj) {
        S* row = col.data() + (static_cast<std::size_t>(oi) * wo + oj) * col.cols();
        for (int ci = 0; ci < c; ++ci) {
          const S* plane = x + static_cast<std::size_t>(ci) * h * w;
          for (int du = 0; du < k; ++du) {
            const int r = oi * s + du - pad;
            for (int dv = 0; dv < k; ++dv) {
              const int cc = oj * s + dv - pad;
              *row++ = (r >= 0 && r < h && cc >= 0 && cc < w) ? plane[r * w + cc] : S(0);
            }
          }
        }
      }
    }
  }

  static void col2im_add(const Mat& dcol, int c, int h, int w, int k, int s, int pad, S* dx) {
    const int ho = (h + s - 1) / s, wo = (w + s - 1) / s;
    for (int oi = 0; oi < ho; ++oi) {
      for (int oj = 0; oj < wo; ++oj) {
        const S* row = dcol.data() + (static_cast<std::size_t>(oi) * wo + oj) * dcol.cols();
        for (int ci = 0; ci < c; ++ci) {
          S* plane = dx + static_cast<std::size_t>(ci) * h * w;
          for (int du = 0; du < k; ++du) {
            const int r = oi * s + du - pad;
            for (int dv = 0; dv < k; ++dv) {
              const int cc = oj * s + dv - pad;
              if (r >= 0 && r < h && cc >= 0 && cc < w) plane[r * w + cc] += *row;
              ++row;
            }
          }
        }
      }
    }
  }

  void add_penalty_grads(ParamStoreT<S>& grads) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      if (layers_[i].l2 <= 0.0f || layers_[i].kind == LayerSpec::Kind::flatten) continue;
      const TensorT<S>& w = params_.at("l" + std::to_string(i) + ".W");
      TensorT<S>& gw = grads.at("l" + std::to_string(i) + ".W");
      const S lam2 = S(2) * S(layers_[i].l2);
      for (std::size_t j = 0; j < w.size(); ++j) gw[j] += lam2 * w[j];
    }
  }

  std::vector<LayerSpec> layers_;
  ParamStoreT<S> params_;
};

using Network = NetworkT<float>;
using ForwardCache = ForwardCacheT<float>;

// loss = mean((pred-target)^2), gradient = 2(pred-target)/numel.
template <class S>
std::pair<S, TensorT<S>> mse_loss(const TensorT<S>& pred, const TensorT<S>& target) {
  if (!pred.same_shape(target)) throw std::invalid_argument("mse_loss shape mismatch");
  const S invn = S(1) / S(pred.size());
  TensorT<S> grad(pred.shape);
  S loss = S(0);
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const S e = pred[i] - target[i];
    loss += e * e;
    grad[i] = S(2) * e * invn;
  }
  return {loss * invn, std::move(grad)};
}

}  // namespace rlab

#endif
