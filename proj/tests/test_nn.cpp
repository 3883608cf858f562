#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <random>

#include "rlab/network.hpp"
#include "rlab/param_store.hpp"
#include "support/oracles.hpp"

using namespace rlab;

namespace {

NetworkT<double> tiny_net(std::uint64_t seed) {
  return NetworkT<double>({LayerSpec::dense(4, 5, Activation::tanh),
                           LayerSpec::dense(5, 3, Activation::relu),
                           LayerSpec::dense(3, 2, Activation::sigmoid, 0.02f)},
                          seed);
}

}  // namespace

TEST_CASE("dense identity layer is a pass-through") {
  Network net({LayerSpec::dense(3, 3, Activation::linear)}, 0);
  Tensor& w = net.params().at("l0.W");
  w.fill(0.0f);
  for (int i = 0; i < 3; ++i) w[i * 3 + i] = 1.0f;
  net.params().at("l0.b").fill(0.0f);
  Tensor x({3}, {0.4f, -1.5f, 2.0f});
  auto y = net.forward(x);
  for (int i = 0; i < 3; ++i) CHECK(y[i] == doctest::Approx(x[i]));
}

TEST_CASE("relu clips negatives") {
  Network net({LayerSpec::dense(2, 2, Activation::relu)}, 0);
  Tensor& w = net.params().at("l0.W");
  w.fill(0.0f);
  w[0] = 1.0f;
  w[3] = 1.0f;
  net.params().at("l0.b").fill(0.0f);
  auto y = net.forward(Tensor({2}, {-1.0f, 2.0f}));
  CHECK(y[0] == 0.0f);
  CHECK(y[1] == doctest::Approx(2.0f));
}

TEST_CASE("conv on 1x1 input only overlaps the center tap") {
  Network net({LayerSpec::conv2d(1, 1, 3, 1, Activation::linear)}, 0);
  net.params().at("l0.W").fill(1.0f);
  net.params().at("l0.b").fill(0.0f);
  Tensor x({1, 1, 1}, {5.0f});
  auto y = net.forward(x);
  REQUIRE(y.size() == 1);
  CHECK(y[0] == doctest::Approx(5.0f));
}

TEST_CASE("conv matches the quadruple-loop oracle on random 7x7 inputs") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10; ++trial) {
    const int stride = (trial % 2) + 1;
    Network net({LayerSpec::conv2d(2, 3, 5, stride, Activation::linear)}, 100 + trial);
    auto x = oracles::random_tensor<float>({2, 7, 7}, rng);
    auto y = net.forward(x);
    auto ref = oracles::conv2d_naive<float>(x, net.params().at("l0.W"),
                                            net.params().at("l0.b"), stride);
    REQUIRE(y.shape == ref.shape);
    for (std::size_t i = 0; i < y.size(); ++i)
      CHECK(y[i] == doctest::Approx(ref[i]).epsilon(1e-5));
  }
}

TEST_CASE("backward with zero output gradient and no penalties is zero") {
  auto net = NetworkT<double>({LayerSpec::dense(4, 5, Activation::tanh),
                               LayerSpec::dense(5, 2, Activation::linear)},
                              3);
  std::mt19937_64 rng(5);
  auto x = oracles::random_tensor<double>({4}, rng);
  ForwardCacheT<double> cache;
  auto y = net.forward(x, &cache);
  TensorT<double> dy(y.shape);
  auto grads = net.backward(cache, dy);
  for (std::size_t i = 0; i < grads.count(); ++i)
    for (double v : grads.tensor_of(i).data) CHECK(v == 0.0);
}

TEST_CASE("single linear neuron gradient is g*x") {
  NetworkT<double> net({LayerSpec::dense(1, 1, Activation::linear)}, 0);
  net.params().at("l0.W")[0] = 0.7;
  net.params().at("l0.b")[0] = 0.0;
  TensorT<double> x({1}, {1.3});
  ForwardCacheT<double> cache;
  net.forward(x, &cache);
  TensorT<double> dy({1}, {0.25});
  auto grads = net.backward(cache, dy);
  CHECK(grads.at("l0.W")[0] == doctest::Approx(0.25 * 1.3));
  CHECK(grads.at("l0.b")[0] == doctest::Approx(0.25));
}

TEST_CASE("analytic gradients match central finite differences") {
  std::mt19937_64 rng(11);
  for (int seed = 0; seed < 3; ++seed) {
    auto net = tiny_net(40 + seed);
    auto x = oracles::random_tensor<double>({3, 4}, rng);
    auto tgt = oracles::random_tensor<double>({3, 2}, rng);
    CHECK(oracles::max_grad_rel_error(net, x, tgt) < 1e-4);
  }
  // conv + flatten + dense stack
  for (int seed = 0; seed < 2; ++seed) {
    NetworkT<double> net({LayerSpec::conv2d(1, 2, 3, 2, Activation::relu),
                          LayerSpec::flatten(),
                          LayerSpec::dense(2 * 4 * 4, 3, Activation::tanh, 0.01f)},
                         70 + seed);
    auto x = oracles::random_tensor<double>({2, 1, 7, 7}, rng);
    auto tgt = oracles::random_tensor<double>({2, 3}, rng);
    CHECK(oracles::max_grad_rel_error(net, x, tgt) < 1e-4);
  }
}

TEST_CASE("mse gradient matches finite differences") {
  std::mt19937_64 rng(13);
  auto pred = oracles::random_tensor<double>({6}, rng);
  auto tgt = oracles::random_tensor<double>({6}, rng);
  auto [loss, grad] = mse_loss(pred, tgt);
  const double h = 1e-7;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    auto p = pred;
    p[i] += h;
    const double lp = mse_loss(p, tgt).first;
    p[i] -= 2 * h;
    const double lm = mse_loss(p, tgt).first;
    CHECK(std::abs((lp - lm) / (2 * h) - grad[i]) < 1e-6);
  }
  CHECK(mse_loss(tgt, tgt).first == 0.0);
  auto [l2, g2] = mse_loss(TensorT<double>({1}, {2.0}), TensorT<double>({1}, {0.0}));
  CHECK(l2 == doctest::Approx(4.0));
  CHECK(g2[0] == doctest::Approx(4.0));
}

TEST_CASE("adam") {
  ParamStore params;
  params.add("w", Tensor({3}, {1.0f, -2.0f, 0.5f}));
  auto grads = params.zeros_like();

  SUBCASE("zero gradient keeps parameters fixed") {
    AdamState st(params, AdamConfig{.lr = 0.1f});
    for (int i = 0; i < 50; ++i) adam_step(params, grads, st);
    CHECK(params.at("w")[0] == 1.0f);
    CHECK(params.at("w")[1] == -2.0f);
    CHECK(params.at("w")[2] == 0.5f);
  }
  SUBCASE("first step moves by ~ -lr*sign(g)") {
    AdamState st(params, AdamConfig{.lr = 0.01f});
    grads.at("w") = Tensor({3}, {0.3f, -0.7f, 2.0f});
    adam_step(params, grads, st);
    CHECK(params.at("w")[0] == doctest::Approx(1.0f - 0.01f).epsilon(1e-3));
    CHECK(params.at("w")[1] == doctest::Approx(-2.0f + 0.01f).epsilon(1e-3));
    CHECK(params.at("w")[2] == doctest::Approx(0.5f - 0.01f).epsilon(1e-3));
  }
  SUBCASE("lr=0 never moves regardless of gradient") {
    AdamState st(params, AdamConfig{.lr = 0.0f});
    grads.at("w") = Tensor({3}, {9.0f, -9.0f, 9.0f});
    for (int i = 0; i < 10; ++i) adam_step(params, grads, st);
    CHECK(params.at("w")[0] == 1.0f);
  }
  SUBCASE("hogwild adam matches plain adam when single-threaded") {
    ParamStore a = params, b = params;
    AdamState sa(a, AdamConfig{.lr = 0.05f}), sb(b, AdamConfig{.lr = 0.05f});
    grads.at("w") = Tensor({3}, {0.3f, -0.7f, 2.0f});
    for (int i = 0; i < 20; ++i) {
      adam_step(a, grads, sa);
      hogwild::adam_step(b, grads, sb);
    }
    for (int i = 0; i < 3; ++i) CHECK(a.at("w")[i] == doctest::Approx(b.at("w")[i]));
  }
}

TEST_CASE("soft update") {
  ParamStore target, source;
  target.add("w", Tensor({2}, {0.0f, 4.0f}));
  source.add("w", Tensor({2}, {1.0f, 2.0f}));

  SUBCASE("tau=1 copies the source") {
    soft_update(target, source, 1.0f);
    CHECK(target.at("w")[0] == 1.0f);
    CHECK(target.at("w")[1] == 2.0f);
  }
  SUBCASE("tau=0 leaves the target untouched") {
    soft_update(target, source, 0.0f);
    CHECK(target.at("w")[0] == 0.0f);
    CHECK(target.at("w")[1] == 4.0f);
  }
  SUBCASE("tau=0.001 from theta=1, target=0") {
    ParamStore t0, s0;
    t0.add("w", Tensor({1}, {0.0f}));
    s0.add("w", Tensor({1}, {1.0f}));
    soft_update(t0, s0, 0.001f);
    CHECK(t0.at("w")[0] == doctest::Approx(0.001f));
  }
  SUBCASE("fixed source contracts geometrically") {
    const float tau = 0.05f;
    float expected_gap = 4.0f - 2.0f;
    for (int n = 1; n <= 100; ++n) {
      soft_update(target, source, tau);
      expected_gap *= (1.0f - tau);
      CHECK(target.at("w")[1] - source.at("w")[1] ==
            doctest::Approx(expected_gap).epsilon(1e-4));
    }
  }
}

TEST_CASE("glorot init") {
  std::vector<LayerSpec> spec{LayerSpec::dense(300, 200, Activation::relu)};
  auto a = glorot_init<float>(spec, 42);
  auto b = glorot_init<float>(spec, 42);
  auto c = glorot_init<float>(spec, 43);

  SUBCASE("same seed reproduces identical parameters") {
    for (std::size_t i = 0; i < a.at("l0.W").size(); ++i)
      CHECK(a.at("l0.W")[i] == b.at("l0.W")[i]);
  }
  SUBCASE("different seed differs somewhere") {
    bool differs = false;
    for (std::size_t i = 0; i < a.at("l0.W").size(); ++i)
      if (a.at("l0.W")[i] != c.at("l0.W")[i]) differs = true;
    CHECK(differs);
  }
  SUBCASE("bounds and empirical variance") {
    const double limit = std::sqrt(6.0 / (300 + 200));
    double ss = 0.0;
    const auto& w = a.at("l0.W");
    REQUIRE(w.size() >= 60000);
    for (float v : w.data) {
      CHECK(std::abs(v) <= limit);
      ss += double(v) * double(v);
    }
    const double var = ss / w.size();
    CHECK(var == doctest::Approx(2.0 / 500.0).epsilon(0.05));
  }
  SUBCASE("biases are zero") {
    for (float v : a.at("l0.b").data) CHECK(v == 0.0f);
  }
}

TEST_CASE("forward does not touch the version counter; stale caches are rejected") {
  auto net = tiny_net(1);
  std::mt19937_64 rng(3);
  auto x = oracles::random_tensor<double>({4}, rng);
  const auto v0 = net.params().version();
  ForwardCacheT<double> cache;
  auto y = net.forward(x, &cache);
  CHECK(net.params().version() == v0);

  auto [loss, dy] = mse_loss(y, TensorT<double>(y.shape));
  (void)loss;
  auto grads = net.backward(cache, dy);
  AdamStateT<double> st(net.params(), AdamConfig{.lr = 0.01f});
  adam_step(net.params(), grads, st);
  CHECK(net.params().version() == v0 + 1);
  CHECK_THROWS_AS(net.backward(cache, dy), std::logic_error);
}

TEST_CASE("shape mismatches are configuration errors") {
  Network net({LayerSpec::dense(4, 2, Activation::linear)}, 0);
  CHECK_THROWS_AS(net.forward(Tensor({3}, {1, 2, 3})), std::invalid_argument);
  CHECK_THROWS_AS(mse_loss(Tensor({2}), Tensor({3})), std::invalid_argument);
  ParamStore a, b;
  a.add("w", Tensor({2}));
  b.add("w", Tensor({3}));
  CHECK_THROWS_AS(soft_update(a, b, 0.5f), std::invalid_argument);
}

TEST_CASE("checkpoint round-trips and rejects corruption") {
  auto params = glorot_init<float>(
      {LayerSpec::dense(7, 3, Activation::tanh), LayerSpec::dense(3, 2, Activation::linear)}, 9);
  const std::string path = "nn_ckpt_test.bin";
  save_params(params, path);
  auto loaded = load_params(path);
  REQUIRE(loaded.count() == params.count());
  for (std::size_t i = 0; i < params.count(); ++i) {
    CHECK(loaded.name_of(i) == params.name_of(i));
    REQUIRE(loaded.tensor_of(i).shape == params.tensor_of(i).shape);
    for (std::size_t j = 0; j < params.tensor_of(i).size(); ++j)
      CHECK(loaded.tensor_of(i)[j] == params.tensor_of(i)[j]);
  }
  {
    std::FILE* f = std::fopen(path.c_str(), "r+b");
    REQUIRE(f);
    std::fputc('X', f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(load_params(path), std::runtime_error);
  std::remove(path.c_str());
}
