#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support/test_util.hpp"
#include "wearcnn/ops/activations.hpp"
#include "wearcnn/ops/batchnorm.hpp"
#include "wearcnn/ops/conv.hpp"
#include "wearcnn/ops/dense.hpp"
#include "wearcnn/ops/loss.hpp"
#include "wearcnn/ops/pool.hpp"

using namespace wearcnn;
using test::conv2d_reference;
using test::dot;
using test::finite_difference;
using test::gradients_match;
using test::random_tensor;

namespace {

ConvParams<double> random_conv(int kh, int in_c, int out_c, Rng& rng, Padding padding,
                               int stride = 1) {
  ConvParams<double> p;
  p.kernels = random_tensor({kh, kh, in_c, out_c}, rng);
  p.bias = random_tensor({out_c}, rng);
  p.stride = stride;
  p.padding = padding;
  return p;
}

}  // namespace

TEST_CASE("conv2d identity kernel reproduces input") {
  Rng rng(7);
  const Tensor64 x = random_tensor({2, 5, 5, 3}, rng);
  ConvParams<double> p;
  p.kernels = Tensor64::zeros({1, 1, 3, 3});
  for (int c = 0; c < 3; ++c) p.kernels.data[static_cast<std::size_t>(c * 3 + c)] = 1.0;
  p.bias = Tensor64::zeros({3});
  p.stride = 1;
  p.padding = Padding::valid;
  const Tensor64 y = conv2d_forward(x, p);
  REQUIRE(y.shape == x.shape);
  for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(y.data[i] == doctest::Approx(x.data[i]));
}

TEST_CASE("conv2d 3x3 ramp with all-ones 2x2 kernel") {
  Tensor64 x({1, 3, 3, 1}, {1, 2, 3, 4, 5, 6, 7, 8, 9});
  ConvParams<double> p;
  p.kernels = Tensor64::full({2, 2, 1, 1}, 1.0);
  p.bias = Tensor64::zeros({1});
  p.padding = Padding::valid;
  const Tensor64 y = conv2d_forward(x, p);
  REQUIRE(y.shape == Shape{1, 2, 2, 1});
  CHECK(y.data[0] == doctest::Approx(12.0));
  CHECK(y.data[1] == doctest::Approx(16.0));
  CHECK(y.data[2] == doctest::Approx(24.0));
  CHECK(y.data[3] == doctest::Approx(28.0));
}

TEST_CASE("conv2d matches the naive loop oracle") {
  Rng rng(11);
  for (int instance = 0; instance < 50; ++instance) {
    const int in_c = 1 + static_cast<int>(rng.uniform_int(3));
    const int out_c = 1 + static_cast<int>(rng.uniform_int(4));
    const int kh = 1 + static_cast<int>(rng.uniform_int(3));
    const int h = kh + static_cast<int>(rng.uniform_int(6));
    const int w = kh + static_cast<int>(rng.uniform_int(6));
    const int stride = 1 + static_cast<int>(rng.uniform_int(2));
    const Padding padding = rng.uniform01() < 0.5 ? Padding::same : Padding::valid;
    const Tensor64 x = random_tensor({2, h, w, in_c}, rng);
    const auto p = random_conv(kh, in_c, out_c, rng, padding, stride);
    const Tensor64 got = conv2d_forward(x, p);
    const Tensor64 want = conv2d_reference(x, p.kernels, p.bias, stride, padding);
    REQUIRE(got.shape == want.shape);
    for (std::size_t i = 0; i < got.data.size(); ++i) {
      CHECK(std::abs(got.data[i] - want.data[i]) <=
            1e-12 * std::max(1.0, std::abs(want.data[i])));
    }
  }
}

TEST_CASE("conv2d shape errors name both shapes") {
  Rng rng(3);
  const Tensor64 x = random_tensor({1, 4, 4, 2}, rng);
  const auto p = random_conv(3, 3, 4, rng, Padding::same);  // channel mismatch
  CHECK_THROWS_WITH_AS(conv2d_forward(x, p),
                       doctest::Contains("(1, 4, 4, 2)"), std::invalid_argument);
}

TEST_CASE("conv2d_vjp zero upstream gives zero gradients") {
  Rng rng(5);
  const Tensor64 x = random_tensor({1, 4, 4, 2}, rng);
  const auto p = random_conv(3, 2, 3, rng, Padding::same);
  const auto grads = conv2d_vjp(x, p, Tensor64::zeros({1, 4, 4, 3}));
  for (double v : grads.x.data) CHECK(v == 0.0);
  for (double v : grads.kernels.data) CHECK(v == 0.0);
  for (double v : grads.bias.data) CHECK(v == 0.0);
}

TEST_CASE("conv2d_vjp single-pixel upstream makes grad_bias one-hot") {
  Rng rng(6);
  const Tensor64 x = random_tensor({1, 4, 4, 2}, rng);
  const auto p = random_conv(3, 2, 3, rng, Padding::same);
  Tensor64 upstream = Tensor64::zeros({1, 4, 4, 3});
  upstream(0, 2, 1, 1) = 1.0;
  const auto grads = conv2d_vjp(x, p, upstream);
  CHECK(grads.bias.data[0] == 0.0);
  CHECK(grads.bias.data[1] == 1.0);
  CHECK(grads.bias.data[2] == 0.0);
}

TEST_CASE("conv2d_vjp matches finite differences") {
  Rng rng(13);
  for (int instance = 0; instance < 5; ++instance) {
    const Tensor64 x = random_tensor({2, 5, 5, 2}, rng);
    const auto p = random_conv(3, 2, 3, rng, instance % 2 ? Padding::same : Padding::valid);
    const Tensor64 upstream = random_tensor(conv2d_forward(x, p).shape, rng);
    const auto grads = conv2d_vjp(x, p, upstream);

    const auto fd_x = finite_difference(
        [&](const Tensor64& xp) { return dot(conv2d_forward(xp, p), upstream); }, x);
    CHECK(gradients_match(grads.x, fd_x));

    const auto fd_kernels = finite_difference(
        [&](const Tensor64& kp) {
          return dot(conv2d_forward(x, kp, p.bias, p.stride, p.padding), upstream);
        },
        p.kernels);
    CHECK(gradients_match(grads.kernels, fd_kernels));

    const auto fd_bias = finite_difference(
        [&](const Tensor64& bp) {
          return dot(conv2d_forward(x, p.kernels, bp, p.stride, p.padding), upstream);
        },
        p.bias);
    CHECK(gradients_match(grads.bias, fd_bias));
  }
}

TEST_CASE("relu basics") {
  const Tensor64 x({3}, {-1.5, 0.0, 2.0});
  const Tensor64 y = relu(x);
  CHECK(y.data[0] == 0.0);
  CHECK(y.data[1] == 0.0);
  CHECK(y.data[2] == 2.0);

  const Tensor64 negative = Tensor64::full({4}, -3.0);
  for (double v : relu(negative).data) CHECK(v == 0.0);
  for (double v : relu_vjp(negative, Tensor64::full({4}, 1.0)).data) CHECK(v == 0.0);
}

TEST_CASE("relu gradient away from the kink") {
  Rng rng(17);
  Tensor64 x = random_tensor({4, 6}, rng);
  for (auto& v : x.data) {
    if (std::abs(v) < 1e-4) v += 0.1;  // exclude the kink neighborhood
  }
  const Tensor64 upstream = random_tensor({4, 6}, rng);
  const auto analytic = relu_vjp(x, upstream);
  const auto numeric =
      finite_difference([&](const Tensor64& xp) { return dot(relu(xp), upstream); }, x);
  CHECK(gradients_match(analytic, numeric));
}

TEST_CASE("maxpool on a 4x4 ramp") {
  Tensor64 x({1, 4, 4, 1});
  for (int i = 0; i < 16; ++i) x.data[static_cast<std::size_t>(i)] = i + 1;
  const auto pooled = maxpool2d(x, 2, 2);
  REQUIRE(pooled.values.shape == Shape{1, 2, 2, 1});
  CHECK(pooled.values.data[0] == 6.0);
  CHECK(pooled.values.data[1] == 8.0);
  CHECK(pooled.values.data[2] == 14.0);
  CHECK(pooled.values.data[3] == 16.0);
}

TEST_CASE("maxpool constant input routes ties to the lowest flat index") {
  const Tensor64 x = Tensor64::full({1, 4, 4, 1}, 2.5);
  const auto pooled = maxpool2d(x, 2, 2);
  for (double v : pooled.values.data) CHECK(v == 2.5);
  CHECK(pooled.argmax[0] == 0);   // first element of the first window
  CHECK(pooled.argmax[1] == 2);
  CHECK(pooled.argmax[2] == 8);
  CHECK(pooled.argmax[3] == 10);
}

TEST_CASE("maxpool rejects oversized windows") {
  const Tensor64 x = Tensor64::zeros({1, 2, 2, 1});
  CHECK_THROWS_AS(maxpool2d(x, 3, 1), std::invalid_argument);
}

TEST_CASE("maxpool gradient on distinct values matches finite differences") {
  Rng rng(19);
  Tensor64 x({1, 6, 6, 2});
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    x.data[i] = static_cast<double>(i) * 0.37 + rng.uniform(0.0, 0.1);
  }
  const auto pooled = maxpool2d(x, 2, 2);
  const Tensor64 upstream = random_tensor(pooled.values.shape, rng);
  const Tensor64 analytic = maxpool2d_vjp(x.shape, pooled.argmax, upstream);
  const auto numeric = finite_difference(
      [&](const Tensor64& xp) { return dot(maxpool2d(xp, 2, 2).values, upstream); }, x);
  CHECK(gradients_match(analytic, numeric));
}

TEST_CASE("maxpool vjp conserves gradient mass with unique maxima") {
  Rng rng(23);
  Tensor64 x({2, 4, 4, 3});
  for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] = static_cast<double>(i) * 1.01;
  const auto pooled = maxpool2d(x, 2, 2);
  const Tensor64 upstream = random_tensor(pooled.values.shape, rng);
  const Tensor64 grad = maxpool2d_vjp(x.shape, pooled.argmax, upstream);
  double up_sum = 0.0, grad_sum = 0.0;
  for (double v : upstream.data) up_sum += v;
  for (double v : grad.data) grad_sum += v;
  CHECK(grad_sum == doctest::Approx(up_sum).epsilon(1e-12));
}

TEST_CASE("global maxpool") {
  SUBCASE("constant channel") {
    Tensor64 x = Tensor64::zeros({1, 3, 4, 2});
    for (int y = 0; y < 3; ++y) {
      for (int j = 0; j < 4; ++j) {
        x(0, y, j, 0) = 4.0;
        x(0, y, j, 1) = -2.0;
      }
    }
    const auto pooled = global_maxpool(x);
    REQUIRE(pooled.values.shape == Shape{1, 1, 1, 2});
    CHECK(pooled.values.data[0] == 4.0);
    CHECK(pooled.values.data[1] == -2.0);
  }
  SUBCASE("ramp picks the last element") {
    Tensor64 x({1, 3, 3, 1});
    for (int i = 0; i < 9; ++i) x.data[static_cast<std::size_t>(i)] = i;
    const auto pooled = global_maxpool(x);
    CHECK(pooled.values.data[0] == 8.0);
    CHECK(pooled.argmax[0] == 8);
  }
  SUBCASE("gradient routes to the argmax") {
    Rng rng(29);
    Tensor64 x({2, 3, 3, 2});
    for (std::size_t i = 0; i < x.data.size(); ++i) x.data[i] = static_cast<double>(i) * 0.7;
    const auto pooled = global_maxpool(x);
    const Tensor64 upstream = random_tensor(pooled.values.shape, rng);
    const Tensor64 analytic = global_maxpool_vjp(x.shape, pooled.argmax, upstream);
    const auto numeric = finite_difference(
        [&](const Tensor64& xp) { return dot(global_maxpool(xp).values, upstream); }, x);
    CHECK(gradients_match(analytic, numeric));
  }
}

TEST_CASE("dense layer") {
  SUBCASE("identity weights, zero bias") {
    Rng rng(31);
    const Tensor64 x = random_tensor({3, 4}, rng);
    DenseParams<double> p;
    p.weights = Tensor64::zeros({4, 4});
    for (int i = 0; i < 4; ++i) p.weights(i, i) = 1.0;
    p.bias = Tensor64::zeros({4});
    const Tensor64 y = dense(x, p);
    for (std::size_t i = 0; i < x.data.size(); ++i) CHECK(y.data[i] == doctest::Approx(x.data[i]));
  }
  SUBCASE("hand multiply") {
    const Tensor64 x({1, 2}, {1.0, 2.0});
    DenseParams<double> p;
    p.weights = Tensor64({2, 3}, {3, 4, 5, 6, 7, 8});
    p.bias = Tensor64({3}, {1, 1, 1});
    const Tensor64 y = dense(x, p);
    CHECK(y.data[0] == doctest::Approx(16.0));
    CHECK(y.data[1] == doctest::Approx(19.0));
    CHECK(y.data[2] == doctest::Approx(22.0));
  }
  SUBCASE("gradient check") {
    Rng rng(37);
    const Tensor64 x = random_tensor({4, 5}, rng);
    DenseParams<double> p;
    p.weights = random_tensor({5, 3}, rng);
    p.bias = random_tensor({3}, rng);
    const Tensor64 upstream = random_tensor({4, 3}, rng);
    const auto grads = dense_vjp(x, p, upstream);
    CHECK(gradients_match(
        grads.x,
        finite_difference([&](const Tensor64& xp) { return dot(dense(xp, p), upstream); }, x)));
    CHECK(gradients_match(grads.weights,
                          finite_difference(
                              [&](const Tensor64& wp) { return dot(dense(x, wp, p.bias), upstream); },
                              p.weights)));
    CHECK(gradients_match(
        grads.bias,
        finite_difference([&](const Tensor64& bp) { return dot(dense(x, p.weights, bp), upstream); },
                          p.bias)));
  }
  SUBCASE("dimension mismatch") {
    const Tensor64 x = Tensor64::zeros({2, 3});
    DenseParams<double> p;
    p.weights = Tensor64::zeros({4, 2});
    p.bias = Tensor64::zeros({2});
    CHECK_THROWS_AS(dense(x, p), std::invalid_argument);
  }
}

TEST_CASE("batchnorm forward") {
  Rng rng(41);
  SUBCASE("gamma=1, beta=0 on a zero-mean unit-var batch is near identity") {
    Tensor64 x({2, 3});
    for (int f = 0; f < 3; ++f) {
      x(0, f) = 1.0;
      x(1, f) = -1.0;
    }
    auto p = make_batchnorm_params<double>(3);
    const Tensor64 y = batchnorm(x, p, RunMode::train);
    for (std::size_t i = 0; i < y.data.size(); ++i) {
      CHECK(y.data[i] == doctest::Approx(x.data[i]).epsilon(1e-3));
    }
  }
  SUBCASE("train-mode output has per-feature mean 0 and var 1") {
    const Tensor64 x = random_tensor({16, 4}, rng, -3.0, 5.0);
    auto p = make_batchnorm_params<double>(4);
    const Tensor64 y = batchnorm(x, p, RunMode::train);
    for (int f = 0; f < 4; ++f) {
      double mean = 0.0;
      for (int r = 0; r < 16; ++r) mean += y(r, f);
      mean /= 16.0;
      double var = 0.0;
      for (int r = 0; r < 16; ++r) var += (y(r, f) - mean) * (y(r, f) - mean);
      var /= 16.0;
      CHECK(mean == doctest::Approx(0.0).epsilon(1e-9));
      CHECK(var == doctest::Approx(1.0).epsilon(5e-3));
    }
  }
  SUBCASE("train mode rejects batches of one") {
    auto p = make_batchnorm_params<double>(3);
    CHECK_THROWS_AS(batchnorm(Tensor64::zeros({1, 3}), p, RunMode::train), std::invalid_argument);
  }
  SUBCASE("running stats feed infer mode") {
    const Tensor64 x = random_tensor({32, 3}, rng, 2.0, 4.0);
    auto p = make_batchnorm_params<double>(3);
    p.momentum = 0.0;  // running stats become the batch stats outright
    batchnorm(x, p, RunMode::train);
    const Tensor64 y = batchnorm(x, p, RunMode::infer);
    double mean = 0.0;
    for (int r = 0; r < 32; ++r) mean += y(r, 0);
    CHECK(mean / 32.0 == doctest::Approx(0.0).epsilon(1e-6));
  }
}

TEST_CASE("batchnorm gradients match finite differences") {
  Rng rng(43);
  const Tensor64 x = random_tensor({6, 3}, rng);
  auto p = make_batchnorm_params<double>(3);
  p.gamma = random_tensor({3}, rng, 0.5, 1.5);
  p.beta = random_tensor({3}, rng);
  const Tensor64 upstream = random_tensor({6, 3}, rng);

  for (const RunMode mode : {RunMode::train, RunMode::infer}) {
    CAPTURE(mode == RunMode::train);
    BatchNormCache<double> cache;
    auto p_run = p;
    batchnorm(x, p_run, mode, &cache);
    const auto grads = batchnorm_vjp(p.gamma, cache, upstream);

    auto run = [&](const Tensor64& xp, const Tensor64& gp, const Tensor64& bp) {
      auto p_fd = p;
      p_fd.gamma = gp;
      p_fd.beta = bp;
      return dot(batchnorm(xp, p_fd, mode), upstream);
    };
    CHECK(gradients_match(
        grads.x, finite_difference([&](const Tensor64& xp) { return run(xp, p.gamma, p.beta); }, x)));
    CHECK(gradients_match(
        grads.gamma,
        finite_difference([&](const Tensor64& gp) { return run(x, gp, p.beta); }, p.gamma)));
    CHECK(gradients_match(
        grads.beta,
        finite_difference([&](const Tensor64& bp) { return run(x, p.gamma, bp); }, p.beta)));
  }
}

TEST_CASE("softmax") {
  SUBCASE("uniform logits") {
    const Tensor64 y = softmax(Tensor64({1, 4}, {0, 0, 0, 0}));
    for (double v : y.data) CHECK(v == doctest::Approx(0.25));
  }
  SUBCASE("large logits do not overflow") {
    const Tensor64 y = softmax(Tensor64({1, 2}, {1000.0, 1000.0}));
    CHECK(y.data[0] == doctest::Approx(0.5));
    CHECK(y.data[1] == doctest::Approx(0.5));
  }
  SUBCASE("direct evaluation") {
    const Tensor64 y = softmax(Tensor64({1, 3}, {1.0, 2.0, 3.0}));
    CHECK(y.data[0] == doctest::Approx(0.09003).epsilon(1e-4));
    CHECK(y.data[1] == doctest::Approx(0.24473).epsilon(1e-4));
    CHECK(y.data[2] == doctest::Approx(0.66524).epsilon(1e-4));
  }
  SUBCASE("rows sum to one and shift invariance") {
    Rng rng(47);
    for (int i = 0; i < 50; ++i) {
      const Tensor64 x = random_tensor({3, 5}, rng, -30.0, 30.0);
      const Tensor64 y = softmax(x);
      Tensor64 shifted = x;
      const double c = rng.uniform(-100.0, 100.0);
      for (auto& v : shifted.data) v += c;
      const Tensor64 y_shifted = softmax(shifted);
      for (int r = 0; r < 3; ++r) {
        double sum = 0.0;
        for (int j = 0; j < 5; ++j) sum += y(r, j);
        CHECK(std::abs(sum - 1.0) < 1e-12);
      }
      for (std::size_t j = 0; j < y.data.size(); ++j) {
        CHECK(std::abs(y.data[j] - y_shifted.data[j]) < 1e-12);
      }
    }
  }
}

TEST_CASE("sparse categorical cross-entropy") {
  SUBCASE("uniform logits over 16 classes give ln 16") {
    const Tensor64 logits = Tensor64::zeros({4, 16});
    const std::vector<int> labels{0, 5, 10, 15};
    CHECK(scce_loss(logits, std::span<const int>(labels)) ==
          doctest::Approx(2.7725887222397811));
  }
  SUBCASE("perfectly peaked logits drive the loss to zero") {
    Tensor64 logits = Tensor64::zeros({2, 4});
    logits(0, 1) = 1e4;
    logits(1, 3) = 1e4;
    const std::vector<int> labels{1, 3};
    CHECK(scce_loss(logits, std::span<const int>(labels)) == doctest::Approx(0.0).epsilon(1e-12));
  }
  SUBCASE("out-of-range label") {
    const Tensor64 logits = Tensor64::zeros({1, 4});
    const std::vector<int> labels{4};
    CHECK_THROWS_AS(scce_loss(logits, std::span<const int>(labels)), std::invalid_argument);
  }
  SUBCASE("gradient check") {
    Rng rng(53);
    const Tensor64 logits = random_tensor({5, 6}, rng);
    std::vector<int> labels(5);
    for (auto& label : labels) label = static_cast<int>(rng.uniform_int(6));
    const Tensor64 analytic = scce_vjp(logits, std::span<const int>(labels));
    const auto numeric = finite_difference(
        [&](const Tensor64& lp) {
          return static_cast<double>(scce_loss(lp, std::span<const int>(labels)));
        },
        logits);
    CHECK(gradients_match(analytic, numeric));
  }
}

TEST_CASE("l2 penalty") {
  const Tensor64 w({1}, {2.0});
  const std::vector<const Tensor64*> weights{&w};
  CHECK(l2_penalty(std::span<const Tensor64* const>(weights), 0.0) == 0.0);
  CHECK(l2_penalty(std::span<const Tensor64* const>(weights), 0.01) == doctest::Approx(0.04));

  Rng rng(59);
  const Tensor64 big = random_tensor({3, 4}, rng);
  const std::vector<const Tensor64*> more{&big};
  const double lambda = 0.37;
  const auto numeric = finite_difference(
      [&](const Tensor64& wp) {
        const std::vector<const Tensor64*> view{&wp};
        return static_cast<double>(l2_penalty(std::span<const Tensor64* const>(view), lambda));
      },
      big);
  for (std::size_t i = 0; i < big.data.size(); ++i) {
    CHECK(numeric.data[i] == doctest::Approx(2.0 * lambda * big.data[i]).epsilon(1e-6));
  }
}
