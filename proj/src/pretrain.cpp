#include "rlab/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rlab {

namespace {

constexpr std::size_t kFrame = 64 * 64;

std::vector<LayerSpec> inverse_layers(int hidden = 128) {
  return {LayerSpec::dense(6, hidden, Activation::tanh),
          LayerSpec::dense(hidden, hidden, Activation::tanh),
          LayerSpec::dense(hidden, 2, Activation::tanh)};
}

float lr_at(const PretrainOpts& opt, long b) {
  if (opt.lr_final < 0.0f || opt.batches <= 1) return opt.lr;
  const float f = float(b) / float(opt.batches - 1);
  return opt.lr + (opt.lr_final - opt.lr) * f;
}
std::vector<LayerSpec> conv_front() {
  return {LayerSpec::conv2d(1, 8, 5, 2, Activation::relu),
          LayerSpec::conv2d(8, 16, 5, 2, Activation::relu), LayerSpec::flatten()};
}
std::vector<LayerSpec> internal_layers() {
  auto l = conv_front();
  l.push_back(LayerSpec::dense(16 * 16 * 16, 100, Activation::relu));
  l.push_back(LayerSpec::dense(100, 6, Activation::linear));
  return l;
}
std::vector<LayerSpec> encoder_layers() {
  auto l = conv_front();
  l.push_back(LayerSpec::dense(16 * 16 * 16, 30, Activation::sigmoid));
  return l;
}
std::vector<LayerSpec> state_head_layers() {
  return {LayerSpec::dense(30, 6, Activation::linear)};
}
std::vector<LayerSpec> decoder_layers() {
  return {LayerSpec::dense(30, 512, Activation::relu),
          LayerSpec::dense(512, int(kFrame), Activation::linear)};
}
std::vector<LayerSpec> phi_layers() {
  auto l = conv_front();
  l.push_back(LayerSpec::dense(16 * 16 * 16, 10, Activation::sigmoid));
  return l;
}
std::vector<LayerSpec> forward_head_layers() {
  return {LayerSpec::dense(12, 100, Activation::relu), LayerSpec::dense(100, 6, Activation::linear)};
}

std::vector<float> frame_floats(const std::vector<std::uint8_t>& px) {
  std::vector<float> out(px.size());
  for (std::size_t i = 0; i < px.size(); ++i) out[i] = px[i] / 255.0f;
  return out;
}

std::size_t train_count(const ReplayBuffer& data, const PretrainOpts& opt) {
  const auto holdout = std::size_t(double(data.count()) * opt.holdout_fraction);
  if (data.count() <= holdout || data.count() == 0)
    throw std::invalid_argument("dataset too small for the requested holdout split");
  return data.count() - holdout;
}

// Centered frame batch (N,1,64,64) for records idx; mean may be empty.
Tensor frame_batch(const ReplayBuffer& data, const std::vector<std::size_t>& idx,
                   const MeanImage& mean, bool next) {
  Tensor x({idx.size(), 1, 64, 64});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& px = next ? data.logical(idx[i]).next_px : data.logical(idx[i]).state_px;
    float* dst = x.ptr() + i * kFrame;
    if (mean.mean.empty()) {
      for (std::size_t j = 0; j < kFrame; ++j) dst[j] = px[j] / 255.0f;
    } else {
      for (std::size_t j = 0; j < kFrame; ++j) dst[j] = px[j] / 255.0f - mean.mean[j];
    }
  }
  return x;
}

Tensor feature_batch(const ReplayBuffer& data, const std::vector<std::size_t>& idx, bool next) {
  const std::size_t d = data.feature_dim();
  Tensor y({idx.size(), d});
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& f = next ? data.logical(idx[i]).next_state : data.logical(idx[i]).state;
    std::copy(f.begin(), f.end(), y.ptr() + i * d);
  }
  return y;
}

std::vector<std::size_t> sample_train(std::size_t n_train, int batch, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, n_train - 1);
  std::vector<std::size_t> idx(batch);
  for (auto& i : idx) i = pick(rng);
  return idx;
}

void bucket_add(std::vector<double>& buckets, long batches, int n_buckets, long b, double v) {
  if (buckets.empty()) buckets.assign(n_buckets, 0.0);
  const long per = std::max<long>(1, batches / n_buckets);
  const std::size_t k = std::min<std::size_t>(buckets.size() - 1, std::size_t(b / per));
  buckets[k] += v / double(per);
}

}  // namespace

MeanImage mean_removal_fit(const ReplayBuffer& data, std::size_t limit) {
  if (data.count() == 0) throw std::invalid_argument("cannot fit a mean on an empty dataset");
  if (!data.has_pixels()) throw std::invalid_argument("dataset has no pixel payload");
  const std::size_t n = limit == 0 ? data.count() : std::min(limit, data.count());
  MeanImage m;
  m.mean.assign(kFrame, 0.0f);
  std::vector<double> acc(kFrame, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& px = data.logical(i).state_px;
    for (std::size_t j = 0; j < kFrame; ++j) acc[j] += px[j] / 255.0;
  }
  for (std::size_t j = 0; j < kFrame; ++j) m.mean[j] = float(acc[j] / double(n));
  return m;
}

std::vector<float> mean_removal_apply(const std::vector<float>& frame, const MeanImage& m) {
  if (m.mean.empty()) return frame;
  if (frame.size() != m.mean.size())
    throw std::invalid_argument("frame/mean size mismatch");
  std::vector<float> out(frame.size());
  for (std::size_t i = 0; i < frame.size(); ++i) out[i] = frame[i] - m.mean[i];
  return out;
}

ReplayBuffer gen_random_dataset(const NoiseConfig& noise, int episodes, int steps,
                                std::uint64_t seed, bool with_pixels) {
  if (episodes <= 0 || steps <= 0)
    throw std::invalid_argument("episodes and steps must be positive");
  ReplayBuffer buf(with_pixels ? StateKind::features_and_pixels : StateKind::features, 6,
                   std::size_t(episodes) * steps);
  ReacherEnv env(seed);
  std::mt19937_64 rng(seed ^ 0xda7a5e7ULL);
  std::uniform_real_distribution<float> ua(-1.0f, 1.0f);
  env.reset();
  for (int ep = 0; ep < episodes; ++ep) {
    for (int t = 0; t < steps; ++t) {
      if (env.done()) env.reset();
      const ReacherState s = env.state();
      const Action a(ua(rng), ua(rng));
      Transition rec;
      const auto f = state_features(s);
      rec.state.assign(f.begin(), f.end());
      if (with_pixels) rec.state_px = quantize_frame(render(s, noise));
      const StepOutcome out = env.step(a);
      const auto f2 = state_features(out.next_state);
      rec.next_state.assign(f2.begin(), f2.end());
      if (with_pixels) rec.next_px = quantize_frame(render(out.next_state, noise));
      rec.action = {a.a1, a.a2};
      rec.reward = out.reward;
      const Vec2 g = gripper_position(out.next_state);
      rec.next_gripper = {float(g.x), float(g.y)};
      rec.terminal = out.done;
      buf.push(std::move(rec));
    }
  }
  return buf;
}

void gen_random_dataset_file(const NoiseConfig& noise, int episodes, int steps,
                             std::uint64_t seed, bool with_pixels, const std::string& path) {
  gen_random_dataset(noise, episodes, steps, seed, with_pixels).dump(path);
}

Action InverseModel::act(const ReacherState& s) const {
  const auto f = state_features(s);
  const Tensor x({6}, {f[0], f[1], f[2], f[3], float(s.target_x), float(s.target_y)});
  const Tensor a = net.forward(x);
  return Action(a[0], a[1]);
}

Action inverse_act(const InverseModel& m, const ReacherState& s) { return m.act(s); }

InverseModel make_inverse_model(std::uint64_t seed, int hidden) {
  return InverseModel{Network(inverse_layers(hidden), seed)};
}

InverseModel train_inverse(const ReplayBuffer& data, const PretrainOpts& opt,
                           PretrainStats* stats) {
  if (!data.has_features()) throw std::invalid_argument("inverse training needs feature records");
  const std::size_t n_train = train_count(data, opt);
  InverseModel m = make_inverse_model(opt.seed, opt.hidden);
  AdamState adam(m.net.params(), AdamConfig{.lr = opt.lr});
  std::mt19937_64 rng(opt.seed ^ 0x1217ULL);

  const auto make_io = [&](const std::vector<std::size_t>& idx) {
    Tensor x({idx.size(), 6}), y({idx.size(), 2});
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const Transition& r = data.logical(idx[i]);
      float* dst = x.ptr() + i * 6;
      std::copy(r.state.begin(), r.state.begin() + 4, dst);
      dst[4] = r.next_gripper[0];
      dst[5] = r.next_gripper[1];
      y[2 * i] = r.action[0];
      y[2 * i + 1] = r.action[1];
    }
    return std::pair{std::move(x), std::move(y)};
  };

  for (long b = 0; b < opt.batches; ++b) {
    auto [x, y] = make_io(sample_train(n_train, opt.batch_size, rng));
    ForwardCache cache;
    const Tensor pred = m.net.forward(x, &cache);
    auto [loss, grad] = mse_loss(pred, y);
    adam.cfg.lr = lr_at(opt, b);
    adam_step(m.net.params(), m.net.backward(cache, grad), adam);
    if (stats) bucket_add(stats->bucket_loss, opt.batches, opt.stat_buckets, b, loss);
  }

  if (stats) {
    double se = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = n_train; i < data.count(); i += 256) {
      std::vector<std::size_t> idx;
      for (std::size_t j = i; j < std::min(data.count(), i + 256); ++j) idx.push_back(j);
      auto [x, y] = make_io(idx);
      const Tensor pred = m.net.forward(x);
      for (std::size_t k = 0; k < pred.size(); ++k) {
        const double e = pred[k] - y[k];
        se += e * e;
      }
      cnt += pred.size();
    }
    stats->holdout_mse = se / double(cnt);
    stats->holdout_metric = stats->holdout_mse;
  }
  return m;
}

std::vector<float> InternalModel::extract(const std::vector<float>& frame) const {
  const std::vector<float> in = mean_removal ? mean_removal_apply(frame, mean) : frame;
  const Tensor out = net.forward(Tensor({1, 64, 64}, in));
  return out.data;
}

InternalModel train_internal(const ReplayBuffer& data, const PretrainOpts& opt,
                             PretrainStats* stats) {
  if (!data.has_pixels() || !data.has_features())
    throw std::invalid_argument("internal-model training needs pixel+feature records");
  const std::size_t n_train = train_count(data, opt);
  InternalModel m{Network(internal_layers(), opt.seed), {}, opt.mean_removal};
  if (opt.mean_removal) m.mean = mean_removal_fit(data, n_train);
  AdamState adam(m.net.params(), AdamConfig{.lr = opt.lr});
  std::mt19937_64 rng(opt.seed ^ 0x17a1ULL);

  for (long b = 0; b < opt.batches; ++b) {
    const auto idx = sample_train(n_train, opt.batch_size, rng);
    const Tensor x = frame_batch(data, idx, m.mean, false);
    const Tensor y = feature_batch(data, idx, false);
    ForwardCache cache;
    const Tensor pred = m.net.forward(x, &cache);
    auto [loss, grad] = mse_loss(pred, y);
    adam.cfg.lr = lr_at(opt, b);
    adam_step(m.net.params(), m.net.backward(cache, grad), adam);
    if (stats) bucket_add(stats->bucket_loss, opt.batches, opt.stat_buckets, b, loss);
  }

  if (stats) {
    double se = 0.0, pos_se = 0.0;
    std::size_t cnt = 0, pos_cnt = 0;
    for (std::size_t i = n_train; i < data.count(); i += 128) {
      std::vector<std::size_t> idx;
      for (std::size_t j = i; j < std::min(data.count(), i + 128); ++j) idx.push_back(j);
      const Tensor x = frame_batch(data, idx, m.mean, false);
      const Tensor y = feature_batch(data, idx, false);
      const Tensor pred = m.net.forward(x);
      for (std::size_t r = 0; r < idx.size(); ++r) {
        for (int k = 0; k < 6; ++k) {
          const double e = pred[r * 6 + k] - y[r * 6 + k];
          se += e * e;
        }
        const double dx = pred[r * 6 + 4] - y[r * 6 + 4];
        const double dy = pred[r * 6 + 5] - y[r * 6 + 5];
        pos_se += dx * dx + dy * dy;
        ++pos_cnt;
      }
      cnt += idx.size() * 6;
    }
    stats->holdout_mse = se / double(cnt);
    stats->holdout_metric = std::sqrt(pos_se / double(pos_cnt));
  }
  return m;
}

std::vector<float> RegularizedAutoencoder::extract(const std::vector<float>& frame) const {
  const std::vector<float> in = mean_removal ? mean_removal_apply(frame, mean) : frame;
  return encoder.forward(Tensor({1, 64, 64}, in)).data;
}

std::vector<float> RegularizedAutoencoder::reconstruct(const std::vector<float>& frame) const {
  return decoder.forward(Tensor({30}, extract(frame))).data;
}

std::vector<float> RegularizedAutoencoder::predict_state(const std::vector<float>& frame) const {
  return state_head.forward(Tensor({30}, extract(frame))).data;
}

RegularizedAutoencoder train_regularized_autoencoder(const ReplayBuffer& data,
                                                     const PretrainOpts& opt,
                                                     PretrainStats* stats) {
  if (!data.has_pixels() || !data.has_features())
    throw std::invalid_argument("autoencoder training needs pixel+feature records");
  const std::size_t n_train = train_count(data, opt);
  RegularizedAutoencoder m{Network(encoder_layers(), opt.seed),
                           Network(state_head_layers(), opt.seed + 1),
                           Network(decoder_layers(), opt.seed + 2),
                           {},
                           opt.mean_removal};
  if (opt.mean_removal) m.mean = mean_removal_fit(data, n_train);
  AdamState adam_enc(m.encoder.params(), AdamConfig{.lr = opt.lr});
  AdamState adam_head(m.state_head.params(), AdamConfig{.lr = opt.lr});
  AdamState adam_dec(m.decoder.params(), AdamConfig{.lr = opt.lr});
  std::mt19937_64 rng(opt.seed ^ 0xae0ULL);

  for (long b = 0; b < opt.batches; ++b) {
    const auto idx = sample_train(n_train, opt.batch_size, rng);
    const Tensor x = frame_batch(data, idx, m.mean, false);
    const Tensor y_state = feature_batch(data, idx, false);
    Tensor x_flat = x;
    x_flat.shape = {idx.size(), kFrame};

    ForwardCache c_enc, c_head, c_dec;
    const Tensor z = m.encoder.forward(x, &c_enc);
    const Tensor s_pred = m.state_head.forward(z, &c_head);
    const Tensor recon = m.decoder.forward(z, &c_dec);
    auto [state_loss, dstate] = mse_loss(s_pred, y_state);
    auto [recon_loss, drecon] = mse_loss(recon, x_flat);

    Tensor dz_head, dz_dec;
    ParamStore g_head = m.state_head.backward(c_head, dstate, &dz_head);
    ParamStore g_dec = m.decoder.backward(c_dec, drecon, &dz_dec);
    for (std::size_t i = 0; i < dz_head.size(); ++i) dz_head[i] += dz_dec[i];
    ParamStore g_enc = m.encoder.backward(c_enc, dz_head);
    adam_head.cfg.lr = adam_dec.cfg.lr = adam_enc.cfg.lr = lr_at(opt, b);
    adam_step(m.state_head.params(), g_head, adam_head);
    adam_step(m.decoder.params(), g_dec, adam_dec);
    adam_step(m.encoder.params(), g_enc, adam_enc);

    if (stats) {
      bucket_add(stats->bucket_loss, opt.batches, opt.stat_buckets, b, state_loss + recon_loss);
      bucket_add(stats->bucket_recon_loss, opt.batches, opt.stat_buckets, b, recon_loss);
      bucket_add(stats->bucket_state_loss, opt.batches, opt.stat_buckets, b, state_loss);
    }
  }

  if (stats) {
    double state_se = 0.0, recon_se = 0.0;
    std::size_t state_cnt = 0, recon_cnt = 0;
    for (std::size_t i = n_train; i < data.count(); i += 128) {
      std::vector<std::size_t> idx;
      for (std::size_t j = i; j < std::min(data.count(), i + 128); ++j) idx.push_back(j);
      const Tensor x = frame_batch(data, idx, m.mean, false);
      const Tensor y_state = feature_batch(data, idx, false);
      const Tensor z = m.encoder.forward(x);
      const Tensor s_pred = m.state_head.forward(z);
      const Tensor recon = m.decoder.forward(z);
      for (std::size_t k = 0; k < s_pred.size(); ++k) {
        const double e = s_pred[k] - y_state[k];
        state_se += e * e;
      }
      for (std::size_t k = 0; k < recon.size(); ++k) {
        const double e = recon[k] - x[k];
        recon_se += e * e;
      }
      state_cnt += s_pred.size();
      recon_cnt += recon.size();
    }
    stats->holdout_metric = state_se / double(state_cnt);
    stats->holdout_mse = stats->holdout_metric;
    stats->holdout_recon_mse = recon_se / double(recon_cnt);
  }
  return m;
}

std::vector<float> ForwardModel::extract(const std::vector<float>& frame) const {
  const std::vector<float> in = mean_removal ? mean_removal_apply(frame, mean) : frame;
  return phi.forward(Tensor({1, 64, 64}, in)).data;
}

std::vector<float> ForwardModel::predict_next(const std::vector<float>& frame,
                                              const Action& a) const {
  std::vector<float> z = extract(frame);
  z.push_back(a.a1);
  z.push_back(a.a2);
  return head.forward(Tensor({12}, z)).data;
}

ForwardModel train_forward(const ReplayBuffer& data, const PretrainOpts& opt,
                           PretrainStats* stats) {
  if (!data.has_pixels() || !data.has_features())
    throw std::invalid_argument("forward-model training needs pixel+feature records");
  const std::size_t n_train = train_count(data, opt);
  ForwardModel m{Network(phi_layers(), opt.seed), Network(forward_head_layers(), opt.seed + 1),
                 {}, opt.mean_removal};
  if (opt.mean_removal) m.mean = mean_removal_fit(data, n_train);
  AdamState adam_phi(m.phi.params(), AdamConfig{.lr = opt.lr});
  AdamState adam_head(m.head.params(), AdamConfig{.lr = opt.lr});
  std::mt19937_64 rng(opt.seed ^ 0xf0dULL);

  const auto concat_action = [&](const Tensor& z, const std::vector<std::size_t>& idx) {
    Tensor zc({idx.size(), 12});
    for (std::size_t i = 0; i < idx.size(); ++i) {
      std::copy(z.ptr() + i * 10, z.ptr() + (i + 1) * 10, zc.ptr() + i * 12);
      zc[i * 12 + 10] = data.logical(idx[i]).action[0];
      zc[i * 12 + 11] = data.logical(idx[i]).action[1];
    }
    return zc;
  };

  for (long b = 0; b < opt.batches; ++b) {
    const auto idx = sample_train(n_train, opt.batch_size, rng);
    const Tensor x = frame_batch(data, idx, m.mean, false);
    const Tensor y = feature_batch(data, idx, true);  // next-state encoding
    ForwardCache c_phi, c_head;
    const Tensor z = m.phi.forward(x, &c_phi);
    const Tensor zc = concat_action(z, idx);
    const Tensor pred = m.head.forward(zc, &c_head);
    auto [loss, grad] = mse_loss(pred, y);
    Tensor dzc;
    ParamStore g_head = m.head.backward(c_head, grad, &dzc);
    Tensor dz({idx.size(), 10});
    for (std::size_t i = 0; i < idx.size(); ++i)
      std::copy(dzc.ptr() + i * 12, dzc.ptr() + i * 12 + 10, dz.ptr() + i * 10);
    ParamStore g_phi = m.phi.backward(c_phi, dz);
    adam_head.cfg.lr = adam_phi.cfg.lr = lr_at(opt, b);
    adam_step(m.head.params(), g_head, adam_head);
    adam_step(m.phi.params(), g_phi, adam_phi);
    if (stats) bucket_add(stats->bucket_loss, opt.batches, opt.stat_buckets, b, loss);
  }

  if (stats) {
    double se = 0.0, angle_se = 0.0;
    std::size_t cnt = 0, angle_cnt = 0;
    for (std::size_t i = n_train; i < data.count(); i += 128) {
      std::vector<std::size_t> idx;
      for (std::size_t j = i; j < std::min(data.count(), i + 128); ++j) idx.push_back(j);
      const Tensor x = frame_batch(data, idx, m.mean, false);
      const Tensor y = feature_batch(data, idx, true);
      const Tensor z = m.phi.forward(x);
      const Tensor pred = m.head.forward(concat_action(z, idx));
      for (std::size_t r = 0; r < idx.size(); ++r) {
        for (int k = 0; k < 6; ++k) {
          const double e = pred[r * 6 + k] - y[r * 6 + k];
          se += e * e;
          if (k < 4) {
            angle_se += e * e;
            ++angle_cnt;
          }
        }
      }
      cnt += idx.size() * 6;
    }
    stats->holdout_mse = se / double(cnt);
    stats->holdout_metric = std::sqrt(angle_se / double(angle_cnt));
  }
  return m;
}

namespace {

void add_prefixed(ParamStore& out, const std::string& prefix, const ParamStore& src) {
  for (std::size_t i = 0; i < src.count(); ++i)
    out.add(prefix + src.name_of(i), src.tensor_of(i));
}

void load_into(Network& net, const ParamStore& store, const std::string& prefix) {
  ParamStore& dst = net.params();
  for (std::size_t i = 0; i < dst.count(); ++i) {
    const Tensor& src = store.at(prefix + dst.name_of(i));
    if (src.shape != dst.tensor_of(i).shape)
      throw std::runtime_error("checkpoint shape mismatch at " + prefix + dst.name_of(i));
    dst.tensor_of(i).data = src.data;
  }
}

MeanImage load_mean(const ParamStore& store) {
  MeanImage m;
  if (store.has("mean_image")) m.mean = store.at("mean_image").data;
  return m;
}

void add_mean(ParamStore& out, const MeanImage& m, bool enabled) {
  if (enabled && !m.mean.empty()) out.add("mean_image", Tensor({kFrame}, m.mean));
}

}  // namespace

void save_inverse(const InverseModel& m, const std::string& path) {
  ParamStore out;
  out.add("kind:inverse", Tensor({0}));
  add_prefixed(out, "net.", m.net.params());
  save_params(out, path);
}

void save_internal(const InternalModel& m, const std::string& path) {
  ParamStore out;
  out.add("kind:internal", Tensor({0}));
  add_prefixed(out, "net.", m.net.params());
  add_mean(out, m.mean, m.mean_removal);
  save_params(out, path);
}

void save_autoencoder(const RegularizedAutoencoder& m, const std::string& path) {
  ParamStore out;
  out.add("kind:autoencoder", Tensor({0}));
  add_prefixed(out, "encoder.", m.encoder.params());
  add_prefixed(out, "state_head.", m.state_head.params());
  add_prefixed(out, "decoder.", m.decoder.params());
  add_mean(out, m.mean, m.mean_removal);
  save_params(out, path);
}

void save_forward(const ForwardModel& m, const std::string& path) {
  ParamStore out;
  out.add("kind:forward", Tensor({0}));
  add_prefixed(out, "phi.", m.phi.params());
  add_prefixed(out, "head.", m.head.params());
  add_mean(out, m.mean, m.mean_removal);
  save_params(out, path);
}

std::string checkpoint_kind(const std::string& path) {
  const ParamStore store = load_params(path);
  for (std::size_t i = 0; i < store.count(); ++i) {
    const std::string& n = store.name_of(i);
    if (n.rfind("kind:", 0) == 0) return n.substr(5);
  }
  return "";
}

InverseModel load_inverse(const std::string& path) {
  const ParamStore store = load_params(path);
  if (!store.has("kind:inverse")) throw std::runtime_error("not an inverse-model checkpoint");
  InverseModel m = make_inverse_model(0);
  load_into(m.net, store, "net.");
  return m;
}

InternalModel load_internal(const std::string& path) {
  const ParamStore store = load_params(path);
  if (!store.has("kind:internal")) throw std::runtime_error("not an internal-model checkpoint");
  InternalModel m{Network(internal_layers(), 0), load_mean(store), store.has("mean_image")};
  load_into(m.net, store, "net.");
  return m;
}

RegularizedAutoencoder load_autoencoder(const std::string& path) {
  const ParamStore store = load_params(path);
  if (!store.has("kind:autoencoder"))
    throw std::runtime_error("not an autoencoder checkpoint");
  RegularizedAutoencoder m{Network(encoder_layers(), 0), Network(state_head_layers(), 0),
                           Network(decoder_layers(), 0), load_mean(store),
                           store.has("mean_image")};
  load_into(m.encoder, store, "encoder.");
  load_into(m.state_head, store, "state_head.");
  load_into(m.decoder, store, "decoder.");
  return m;
}

ForwardModel load_forward(const std::string& path) {
  const ParamStore store = load_params(path);
  if (!store.has("kind:forward")) throw std::runtime_error("not a forward-model checkpoint");
  ForwardModel m{Network(phi_layers(), 0), Network(forward_head_layers(), 0), load_mean(store),
                 store.has("mean_image")};
  load_into(m.phi, store, "phi.");
  load_into(m.head, store, "head.");
  return m;
}

std::vector<float> PretrainedReacherEnv::observe() const {
  const PixelFrame f = render(env_.state(), noise_);
  std::vector<float> frame(f.intensity.begin(), f.intensity.end());
  std::vector<float> out = extract_(frame);
  if (out.size() != dim_) throw std::logic_error("extractor dimension mismatch");
  return out;
}

std::vector<float> PretrainedReacherEnv::reset() {
  env_.reset();
  return observe();
}

std::tuple<std::vector<float>, float, bool, bool> PretrainedReacherEnv::step(const Action& a) {
  const StepOutcome out = env_.step(a);
  return {observe(), out.reward, out.done, out.success};
}

}  // namespace rlab
