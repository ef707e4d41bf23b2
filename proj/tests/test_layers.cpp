#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "churngrid/kernels.hpp"
#include "churngrid/layers.hpp"
#include "churngrid/rng.hpp"
#include "doctest.h"

using namespace churngrid;

namespace {

std::vector<double> random_vec(Rng& rng, size_t n, double lo = -1.0, double hi = 1.0) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Central finite difference of a scalar function with respect to x[i].
double fd(std::function<double()> f, double* xi, double eps = 1e-6) {
  const double keep = *xi;
  *xi = keep + eps;
  const double hi = f();
  *xi = keep - eps;
  const double lo = f();
  *xi = keep;
  return (hi - lo) / (2.0 * eps);
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

// Textbook quadruple-loop valid convolution, deliberately naive.
void conv_naive(const double* input, int C, int H, int W, const double* k, int O, int KH, int KW,
                const double* bias, double* out) {
  const int OH = H - KH + 1, OW = W - KW + 1;
  for (int o = 0; o < O; ++o) {
    for (int y = 0; y < OH; ++y) {
      for (int x = 0; x < OW; ++x) {
        double acc = bias[o];
        for (int c = 0; c < C; ++c) {
          for (int ky = 0; ky < KH; ++ky) {
            for (int kx = 0; kx < KW; ++kx) {
              acc += k[((o * C + c) * KH + ky) * KW + kx] * input[(c * H + y + ky) * W + x + kx];
            }
          }
        }
        out[(o * OH + y) * OW + x] = acc;
      }
    }
  }
}

}  // namespace

TEST_CASE("convolution toy oracle: difference kernel") {
  const std::vector<double> input{1, 2, 3, 4, 5, 6, 7};
  const std::vector<double> kernel{1, 0, 0, 0, 0, -1};
  const std::vector<double> bias{0.0};
  std::vector<double> out(2);
  nn::conv2d_forward(input.data(), 1, 1, 7, kernel.data(), 1, 1, 6, bias.data(), out.data());
  CHECK(out[0] == -5.0);
  CHECK(out[1] == -5.0);
}

TEST_CASE("convolution matches the naive implementation on random tensors") {
  Rng rng(10);
  const int C = 2, H = 3, W = 9, O = 3, KH = 2, KW = 4;
  const std::vector<double> input = random_vec(rng, C * H * W);
  const std::vector<double> kernels = random_vec(rng, O * C * KH * KW);
  const std::vector<double> bias = random_vec(rng, O);
  const int OH = H - KH + 1, OW = W - KW + 1;
  std::vector<double> fast(O * OH * OW), naive(O * OH * OW);
  nn::conv2d_forward(input.data(), C, H, W, kernels.data(), O, KH, KW, bias.data(), fast.data());
  conv_naive(input.data(), C, H, W, kernels.data(), O, KH, KW, bias.data(), naive.data());
  for (size_t i = 0; i < fast.size(); ++i) CHECK(rel_err(fast[i], naive[i]) < 1e-12);
}

TEST_CASE("convolution backward matches finite differences") {
  Rng rng(11);
  const int C = 2, H = 3, W = 8, O = 2, KH = 2, KW = 3;
  const int OH = H - KH + 1, OW = W - KW + 1;
  std::vector<double> input = random_vec(rng, C * H * W);
  std::vector<double> kernels = random_vec(rng, O * C * KH * KW);
  std::vector<double> bias = random_vec(rng, O);
  const std::vector<double> weight = random_vec(rng, O * OH * OW);

  // Scalar probe loss: dot(weight, conv(input)).
  auto loss = [&] {
    std::vector<double> out(O * OH * OW);
    nn::conv2d_forward(input.data(), C, H, W, kernels.data(), O, KH, KW, bias.data(), out.data());
    return kern::dot_ref(weight.data(), out.data(), out.size());
  };

  std::vector<double> g_input(input.size());
  std::vector<double> g_kernels(kernels.size(), 0.0);
  std::vector<double> g_bias(bias.size(), 0.0);
  nn::conv2d_backward(input.data(), C, H, W, kernels.data(), O, KH, KW, weight.data(),
                      g_input.data(), g_kernels.data(), g_bias.data());

  for (size_t i = 0; i < input.size(); ++i) {
    CHECK(rel_err(g_input[i], fd(loss, &input[i])) < 1e-6);
  }
  for (size_t i = 0; i < kernels.size(); ++i) {
    CHECK(rel_err(g_kernels[i], fd(loss, &kernels[i])) < 1e-6);
  }
  for (size_t i = 0; i < bias.size(); ++i) {
    CHECK(rel_err(g_bias[i], fd(loss, &bias[i])) < 1e-6);
  }
}

TEST_CASE("conv backward accumulates parameter gradients") {
  Rng rng(12);
  const int C = 1, H = 1, W = 5, O = 1, KH = 1, KW = 2;
  const std::vector<double> input = random_vec(rng, W);
  const std::vector<double> kernels = random_vec(rng, KW);
  const std::vector<double> g_out = random_vec(rng, W - KW + 1);
  std::vector<double> g_in(W);

  std::vector<double> g_k(KW, 1.0), g_b(O, 2.0);  // pre-seeded accumulators
  nn::conv2d_backward(input.data(), C, H, W, kernels.data(), O, KH, KW, g_out.data(), g_in.data(),
                      g_k.data(), g_b.data());
  std::vector<double> g_k2(KW, 0.0), g_b2(O, 0.0);
  nn::conv2d_backward(input.data(), C, H, W, kernels.data(), O, KH, KW, g_out.data(), g_in.data(),
                      g_k2.data(), g_b2.data());
  CHECK(g_k[0] == doctest::Approx(g_k2[0] + 1.0).epsilon(1e-12));
  CHECK(g_b[0] == doctest::Approx(g_b2[0] + 2.0).epsilon(1e-12));
}

TEST_CASE("negative control hook flips kernel gradients only") {
  Rng rng(13);
  const int W = 6, KW = 3;
  const std::vector<double> input = random_vec(rng, W);
  const std::vector<double> kernels = random_vec(rng, KW);
  const std::vector<double> g_out = random_vec(rng, W - KW + 1);
  std::vector<double> g_in1(W), g_in2(W);
  std::vector<double> g_k1(KW, 0.0), g_k2(KW, 0.0), g_b1(1, 0.0), g_b2(1, 0.0);

  nn::conv2d_backward(input.data(), 1, 1, W, kernels.data(), 1, 1, KW, g_out.data(), g_in1.data(),
                      g_k1.data(), g_b1.data());
  nn::testhooks::negate_conv_kernel_grad = true;
  nn::conv2d_backward(input.data(), 1, 1, W, kernels.data(), 1, 1, KW, g_out.data(), g_in2.data(),
                      g_k2.data(), g_b2.data());
  nn::testhooks::negate_conv_kernel_grad = false;
  for (int i = 0; i < KW; ++i) CHECK(g_k2[i] == -g_k1[i]);
  CHECK(g_in2 == g_in1);
  CHECK(g_b2 == g_b1);
}

TEST_CASE("pooled_length covers floor, ceil, and the dropped-window guard") {
  CHECK(nn::pooled_length(331, 6, 1, false) == 326);
  CHECK(nn::pooled_length(321, 2, 2, true) == 161);   // ceil mode: 161, not 160
  CHECK(nn::pooled_length(321, 2, 2, false) == 160);
  CHECK(nn::pooled_length(3, 2, 2, true) == 2);
  CHECK(nn::pooled_length(3, 2, 2, false) == 1);
  CHECK(nn::pooled_length(4, 2, 2, true) == 2);
  // A ceil window starting at or past the end is dropped entirely.
  CHECK(nn::pooled_length(3, 2, 4, true) == 1);
  CHECK(nn::pooled_length(6, 6, 1, false) == 1);
}

TEST_CASE("maxpool forward handles truncation and breaks ties low") {
  const std::vector<double> input{1.0, 3.0, 2.0};
  std::vector<double> out(2);
  std::vector<int> argmax(2);
  nn::maxpool_forward(input.data(), 1, 1, 3, 2, 2, true, out.data(), argmax.data());
  CHECK(out == std::vector<double>{3.0, 2.0});  // second window truncated to {2}
  CHECK(argmax == std::vector<int>{1, 2});

  const std::vector<double> tied{2.0, 2.0, 1.0};
  nn::maxpool_forward(tied.data(), 1, 1, 3, 2, 1, false, out.data(), argmax.data());
  CHECK(out == std::vector<double>{2.0, 2.0});
  CHECK(argmax == std::vector<int>{0, 1});  // tie in the first window -> smallest index
}

TEST_CASE("maxpool backward scatters and accumulates into argmax slots") {
  // Overlapping windows can route several output gradients to one input.
  const std::vector<double> input{5.0, 1.0, 0.5};
  std::vector<double> out(2);
  std::vector<int> argmax(2);
  nn::maxpool_forward(input.data(), 1, 1, 3, 2, 1, false, out.data(), argmax.data());
  CHECK(argmax == std::vector<int>{0, 1});

  const std::vector<double> g_out{0.25, 4.0};
  std::vector<double> g_in(3, 99.0);  // must be overwritten, not accumulated
  nn::maxpool_backward(argmax.data(), 1, 1, 2, g_out.data(), 3, g_in.data());
  CHECK(g_in == std::vector<double>{0.25, 4.0, 0.0});
}

TEST_CASE("maxpool and prelu commute for positive slopes") {
  Rng rng(14);
  const int W = 11, K = 3, S = 2;
  const std::vector<double> input = random_vec(rng, W, -3.0, 3.0);
  const int OW = nn::pooled_length(W, K, S, true);

  std::vector<double> pooled(OW), act_then_pool(OW), pool_then_act(OW);
  std::vector<int> argmax(OW);
  std::vector<double> act(W);
  nn::prelu_forward(input.data(), W, 0.25, act.data());
  nn::maxpool_forward(act.data(), 1, 1, W, K, S, true, act_then_pool.data(), argmax.data());
  nn::maxpool_forward(input.data(), 1, 1, W, K, S, true, pooled.data(), argmax.data());
  nn::prelu_forward(pooled.data(), OW, 0.25, pool_then_act.data());
  for (int i = 0; i < OW; ++i) {
    CHECK(act_then_pool[i] == doctest::Approx(pool_then_act[i]).epsilon(1e-12));
  }
}

TEST_CASE("prelu forward and backward match definitions and finite differences") {
  std::vector<double> input{2.0, -3.0, 0.0, 1e-9, -1e-9};
  std::vector<double> out(input.size());
  nn::prelu_forward(input.data(), input.size(), 0.25, out.data());
  CHECK(out[0] == 2.0);
  CHECK(out[1] == -0.75);
  CHECK(out[2] == 0.0);

  Rng rng(15);
  std::vector<double> x = random_vec(rng, 40, -2.0, 2.0);
  const std::vector<double> weight = random_vec(rng, 40);
  double slope = 0.3;
  auto loss = [&] {
    std::vector<double> y(x.size());
    nn::prelu_forward(x.data(), x.size(), slope, y.data());
    return kern::dot_ref(weight.data(), y.data(), y.size());
  };
  std::vector<double> g_in(x.size());
  double g_slope = 0.0;
  nn::prelu_backward(x.data(), weight.data(), x.size(), slope, g_in.data(), &g_slope);
  for (size_t i = 0; i < x.size(); ++i) CHECK(rel_err(g_in[i], fd(loss, &x[i])) < 1e-6);
  CHECK(rel_err(g_slope, fd(loss, &slope)) < 1e-6);

  // The slope gradient accumulates across calls.
  double g_slope2 = g_slope;
  nn::prelu_backward(x.data(), weight.data(), x.size(), slope, g_in.data(), &g_slope2);
  CHECK(g_slope2 == doctest::Approx(2.0 * g_slope).epsilon(1e-12));
}

TEST_CASE("fully connected forward and backward match finite differences") {
  Rng rng(16);
  const int n_in = 7, n_out = 4;
  std::vector<double> input = random_vec(rng, n_in);
  std::vector<double> weights = random_vec(rng, n_out * n_in);
  std::vector<double> bias = random_vec(rng, n_out);
  const std::vector<double> probe = random_vec(rng, n_out);

  auto loss = [&] {
    std::vector<double> y(n_out);
    nn::fc_forward(input.data(), n_in, weights.data(), bias.data(), n_out, y.data());
    return kern::dot_ref(probe.data(), y.data(), n_out);
  };

  std::vector<double> g_in(n_in), g_w(weights.size(), 0.0), g_b(n_out, 0.0);
  nn::fc_backward(input.data(), n_in, weights.data(), n_out, probe.data(), g_in.data(), g_w.data(),
                  g_b.data());
  for (int i = 0; i < n_in; ++i) CHECK(rel_err(g_in[i], fd(loss, &input[i])) < 1e-6);
  for (size_t i = 0; i < weights.size(); ++i) {
    CHECK(rel_err(g_w[i], fd(loss, &weights[i])) < 1e-6);
  }
  for (int i = 0; i < n_out; ++i) CHECK(rel_err(g_b[i], fd(loss, &bias[i])) < 1e-6);

  // Toy forward oracle.
  const std::vector<double> in2{1.0, 2.0};
  const std::vector<double> w2{3.0, 4.0, 5.0, 6.0};
  const std::vector<double> b2{0.5, -0.5};
  std::vector<double> y2(2);
  nn::fc_forward(in2.data(), 2, w2.data(), b2.data(), 2, y2.data());
  CHECK(y2[0] == 3.0 + 8.0 + 0.5);
  CHECK(y2[1] == 5.0 + 12.0 - 0.5);
}

TEST_CASE("dropout keeps ~1-rate units, rescales, and is seed-deterministic") {
  const size_t n = 20000;
  std::vector<double> input(n, 1.0), out(n);
  std::vector<uint8_t> mask(n);
  Rng rng(17);
  nn::dropout_forward_train(input.data(), n, 0.5, rng, out.data(), mask.data());
  size_t kept = 0;
  for (size_t i = 0; i < n; ++i) {
    if (mask[i]) {
      CHECK(out[i] == 2.0);  // inverted scaling by 1/(1-rate)
      ++kept;
    } else {
      CHECK(out[i] == 0.0);
    }
  }
  CHECK(static_cast<double>(kept) / n == doctest::Approx(0.5).epsilon(0.03));

  Rng rng_a(18), rng_b(18);
  std::vector<uint8_t> mask_a(n), mask_b(n);
  nn::dropout_forward_train(input.data(), n, 0.3, rng_a, out.data(), mask_a.data());
  nn::dropout_forward_train(input.data(), n, 0.3, rng_b, out.data(), mask_b.data());
  CHECK(mask_a == mask_b);

  // rate 0 keeps everything unscaled.
  Rng rng_c(19);
  nn::dropout_forward_train(input.data(), 4, 0.0, rng_c, out.data(), mask.data());
  for (int i = 0; i < 4; ++i) CHECK(out[i] == 1.0);

  const std::vector<double> g_out{1.0, 2.0, 3.0};
  const std::vector<uint8_t> m{1, 0, 1};
  std::vector<double> g_in(3);
  nn::dropout_backward(m.data(), g_out.data(), 3, 0.5, g_in.data());
  CHECK(g_in == std::vector<double>{2.0, 0.0, 6.0});
}

TEST_CASE("softmax cross-entropy is stable and matches finite differences") {
  const nn::SoftmaxResult huge = nn::softmax_cross_entropy({1000.0, 1000.0}, 0);
  CHECK(huge.probs[0] == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(huge.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(std::isfinite(nn::softmax_cross_entropy({-1000.0, 1000.0}, 0).loss));

  std::array<double, 2> logits{0.3, -1.2};
  for (int label : {0, 1}) {
    const nn::SoftmaxResult r = nn::softmax_cross_entropy(logits, label);
    CHECK(r.probs[0] + r.probs[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.loss == doctest::Approx(-std::log(r.probs[label])).epsilon(1e-10));
    for (int i = 0; i < 2; ++i) {
      auto loss = [&] { return nn::softmax_cross_entropy(logits, label).loss; };
      CHECK(rel_err(r.grad_logits[i], fd(loss, &logits[i])) < 1e-6);
    }
  }
}
