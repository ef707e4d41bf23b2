#include "churngrid/layers.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "churngrid/kernels.hpp"

namespace churngrid::nn {

namespace testhooks {
bool negate_conv_kernel_grad = false;
}

// The convolution loops are organized as axpy sweeps along the W axis with a
// fixed (o, y, c, ky, kx) accumulation order. Both kernel backends apply axpy
// elementwise, so forward results are bitwise identical whichever is active.
void conv2d_forward(const double* input, int C, int H, int W, const double* kernels, int O, int KH,
                    int KW, const double* bias, double* output) {
  if (KH > H || KW > W) throw std::invalid_argument("conv2d: kernel larger than input");
  const int OH = H - KH + 1;
  const int OW = W - KW + 1;
  for (int o = 0; o < O; ++o) {
    for (int y = 0; y < OH; ++y) {
      double* out_row = output + (static_cast<size_t>(o) * OH + y) * OW;
      std::fill(out_row, out_row + OW, bias[o]);
      for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < KH; ++ky) {
          const double* in_row = input + (static_cast<size_t>(c) * H + y + ky) * W;
          const double* k_row =
              kernels + ((static_cast<size_t>(o) * C + c) * KH + ky) * KW;
          for (int kx = 0; kx < KW; ++kx) {
            kern::axpy(k_row[kx], in_row + kx, out_row, OW);
          }
        }
      }
    }
  }
}

void conv2d_backward(const double* input, int C, int H, int W, const double* kernels, int O,
                     int KH, int KW, const double* grad_output, double* grad_input,
                     double* grad_kernels, double* grad_bias) {
  const int OH = H - KH + 1;
  const int OW = W - KW + 1;
  std::fill(grad_input, grad_input + static_cast<size_t>(C) * H * W, 0.0);
  const double kernel_grad_sign = testhooks::negate_conv_kernel_grad ? -1.0 : 1.0;
  for (int o = 0; o < O; ++o) {
    for (int y = 0; y < OH; ++y) {
      const double* g_row = grad_output + (static_cast<size_t>(o) * OH + y) * OW;
      double bias_acc = 0.0;
      for (int x = 0; x < OW; ++x) bias_acc += g_row[x];
      grad_bias[o] += bias_acc;
      for (int c = 0; c < C; ++c) {
        for (int ky = 0; ky < KH; ++ky) {
          const double* in_row = input + (static_cast<size_t>(c) * H + y + ky) * W;
          double* gin_row = grad_input + (static_cast<size_t>(c) * H + y + ky) * W;
          const double* k_row =
              kernels + ((static_cast<size_t>(o) * C + c) * KH + ky) * KW;
          double* gk_row =
              grad_kernels + ((static_cast<size_t>(o) * C + c) * KH + ky) * KW;
          for (int kx = 0; kx < KW; ++kx) {
            kern::axpy(k_row[kx], g_row, gin_row + kx, OW);
            gk_row[kx] += kernel_grad_sign * kern::dot(g_row, in_row + kx, OW);
          }
        }
      }
    }
  }
}

int pooled_length(int length, int kernel, int stride, bool ceil_mode) {
  if (kernel > length) throw std::invalid_argument("maxpool: kernel larger than input");
  if (stride < 1) throw std::invalid_argument("maxpool: stride must be >= 1");
  int count;
  if (ceil_mode) {
    count = (length - kernel + stride - 1) / stride + 1;
    // Drop a final window that would start outside the input.
    if ((count - 1) * stride >= length) --count;
  } else {
    count = (length - kernel) / stride + 1;
  }
  return count;
}

void maxpool_forward(const double* input, int C, int H, int W, int kernel, int stride,
                     bool ceil_mode, double* output, int* argmax) {
  const int OW = pooled_length(W, kernel, stride, ceil_mode);
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < H; ++y) {
      const double* in_row = input + (static_cast<size_t>(c) * H + y) * W;
      double* out_row = output + (static_cast<size_t>(c) * H + y) * OW;
      int* arg_row = argmax + (static_cast<size_t>(c) * H + y) * OW;
      for (int x = 0; x < OW; ++x) {
        const int begin = x * stride;
        const int end = std::min(begin + kernel, W);
        int best = begin;
        for (int i = begin + 1; i < end; ++i) {
          if (in_row[i] > in_row[best]) best = i;
        }
        out_row[x] = in_row[best];
        arg_row[x] = best;
      }
    }
  }
}

void maxpool_backward(const int* argmax, int C, int H, int W_out, const double* grad_output,
                      int W_in, double* grad_input) {
  std::fill(grad_input, grad_input + static_cast<size_t>(C) * H * W_in, 0.0);
  for (int c = 0; c < C; ++c) {
    for (int y = 0; y < H; ++y) {
      const double* g_row = grad_output + (static_cast<size_t>(c) * H + y) * W_out;
      const int* arg_row = argmax + (static_cast<size_t>(c) * H + y) * W_out;
      double* gin_row = grad_input + (static_cast<size_t>(c) * H + y) * W_in;
      for (int x = 0; x < W_out; ++x) {
        gin_row[arg_row[x]] += g_row[x];
      }
    }
  }
}

void prelu_forward(const double* input, size_t n, double slope, double* output) {
  for (size_t i = 0; i < n; ++i) {
    output[i] = input[i] > 0.0 ? input[i] : slope * input[i];
  }
}

void prelu_backward(const double* input, const double* grad_output, size_t n, double slope,
                    double* grad_input, double* grad_slope) {
  double slope_acc = 0.0;
  for (size_t i = 0; i < n; ++i) {
    if (input[i] > 0.0) {
      grad_input[i] = grad_output[i];
    } else {
      grad_input[i] = slope * grad_output[i];
      slope_acc += grad_output[i] * input[i];
    }
  }
  *grad_slope += slope_acc;
}

void fc_forward(const double* input, int n_in, const double* weights, const double* bias,
                int n_out, double* output) {
  for (int j = 0; j < n_out; ++j) {
    output[j] = bias[j] + kern::dot(weights + static_cast<size_t>(j) * n_in, input, n_in);
  }
}

void fc_backward(const double* input, int n_in, const double* weights, int n_out,
                 const double* grad_output, double* grad_input, double* grad_weights,
                 double* grad_bias) {
  std::fill(grad_input, grad_input + n_in, 0.0);
  for (int j = 0; j < n_out; ++j) {
    const double g = grad_output[j];
    kern::axpy(g, weights + static_cast<size_t>(j) * n_in, grad_input, n_in);
    kern::axpy(g, input, grad_weights + static_cast<size_t>(j) * n_in, n_in);
    grad_bias[j] += g;
  }
}

void dropout_forward_train(const double* input, size_t n, double rate, Rng& rng, double* output,
                           uint8_t* mask) {
  if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout: rate must be in [0,1)");
  const double scale = 1.0 / (1.0 - rate);
  for (size_t i = 0; i < n; ++i) {
    const bool keep = rng.uniform() >= rate;
    mask[i] = keep ? 1 : 0;
    output[i] = keep ? input[i] * scale : 0.0;
  }
}

void dropout_backward(const uint8_t* mask, const double* grad_output, size_t n, double rate,
                      double* grad_input) {
  const double scale = 1.0 / (1.0 - rate);
  for (size_t i = 0; i < n; ++i) {
    grad_input[i] = mask[i] ? grad_output[i] * scale : 0.0;
  }
}

SoftmaxResult softmax_cross_entropy(const std::array<double, 2>& logits, int label) {
  if (label != 0 && label != 1) throw std::invalid_argument("softmax: label must be 0 or 1");
  SoftmaxResult result;
  const double m = std::max(logits[0], logits[1]);
  const double e0 = std::exp(logits[0] - m);
  const double e1 = std::exp(logits[1] - m);
  const double z = e0 + e1;
  result.probs = {e0 / z, e1 / z};
  result.loss = -(logits[label] - m) + std::log(z);
  result.grad_logits = {result.probs[0], result.probs[1]};
  result.grad_logits[label] -= 1.0;
  return result;
}

}  // namespace churngrid::nn
