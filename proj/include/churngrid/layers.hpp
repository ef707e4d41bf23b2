#pragma once

#include <array>
#include <cstddef>
#include <cstdint>

#include "churngrid/rng.hpp"

// Layer primitives as free functions over raw row-major buffers. Shapes are
// passed explicitly so finite-difference tests can run on small tensors; the
// fixed WiseNet wiring lives in model.hpp.
//
// Gradient buffer convention: grad_input buffers are overwritten, parameter
// gradient buffers (kernels, weights, biases, slopes) are accumulated into,
// so per-example contributions sum across a mini-batch.

namespace churngrid::nn {

// Valid-mode stride-1 convolution: input (C,H,W), kernels (O,C,KH,KW),
// bias (O), output (O, H-KH+1, W-KW+1).
void conv2d_forward(const double* input, int C, int H, int W, const double* kernels, int O, int KH,
                    int KW, const double* bias, double* output);

void conv2d_backward(const double* input, int C, int H, int W, const double* kernels, int O,
                     int KH, int KW, const double* grad_output, double* grad_input,
                     double* grad_kernels, double* grad_bias);

// Pooled length along one axis; ceil mode rounds the window count up and
// truncates the final window at the boundary. A ceil-mode window that would
// start at or beyond the input is dropped.
int pooled_length(int length, int kernel, int stride, bool ceil_mode);

// Max pooling along the W axis of a (C,H,W) tensor (both WiseNet pools have
// height 1). argmax records, per output element, the input x index of the
// maximum; ties break toward the smallest index.
void maxpool_forward(const double* input, int C, int H, int W, int kernel, int stride,
                     bool ceil_mode, double* output, int* argmax);

void maxpool_backward(const int* argmax, int C, int H, int W_out, const double* grad_output,
                      int W_in, double* grad_input);

// PReLU with one shared slope: y = x for x > 0, slope*x otherwise.
void prelu_forward(const double* input, size_t n, double slope, double* output);
void prelu_backward(const double* input, const double* grad_output, size_t n, double slope,
                    double* grad_input, double* grad_slope);

// out = W*in + b with W of shape (n_out, n_in), row-major.
void fc_forward(const double* input, int n_in, const double* weights, const double* bias,
                int n_out, double* output);
void fc_backward(const double* input, int n_in, const double* weights, int n_out,
                 const double* grad_output, double* grad_input, double* grad_weights,
                 double* grad_bias);

// Inverted dropout; inference mode is the identity and has no function here.
// mask[i] = 1 when the unit is kept.
void dropout_forward_train(const double* input, size_t n, double rate, Rng& rng, double* output,
                           uint8_t* mask);
void dropout_backward(const uint8_t* mask, const double* grad_output, size_t n, double rate,
                      double* grad_input);

struct SoftmaxResult {
  double loss = 0.0;
  std::array<double, 2> probs{};
  std::array<double, 2> grad_logits{};
};

// Numerically stable two-class softmax + cross-entropy; label in {0,1}.
SoftmaxResult softmax_cross_entropy(const std::array<double, 2>& logits, int label);

namespace testhooks {
// Negative control for the gradient checker: flips the sign of the kernel
// gradients produced by conv2d_backward. Never set outside tests.
extern bool negate_conv_kernel_grad;
}  // namespace testhooks

}  // namespace churngrid::nn
