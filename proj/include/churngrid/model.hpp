#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "churngrid/layers.hpp"
#include "churngrid/rng.hpp"

namespace churngrid::nn {

// The fixed architecture, activation shape chain:
//   (3,3,336) -conv 32x(1x6)-> (32,3,331) -prelu-> -pool 1x6 s1-> (32,3,326)
//   -conv 32x(3x6)-> (32,1,321) -prelu-> -pool 1x2 s2 ceil-> (32,1,161)
//   -flatten-> 5152 -fc-> 512 -prelu-drop-> 512 -prelu-drop-> 1024
//   -prelu-drop-> 2 -softmax
// The final pool uses ceil mode: floor mode would give 160, not 161.
struct WiseNet {
  static constexpr int kInC = 3, kInH = 3, kInW = 336;
  static constexpr int kConv1O = 32, kConv1KH = 1, kConv1KW = 6;
  static constexpr int kConv1H = kInH - kConv1KH + 1;   // 3
  static constexpr int kConv1W = kInW - kConv1KW + 1;   // 331
  static constexpr int kPool1K = 6, kPool1S = 1;
  static constexpr int kPool1W = kConv1W - kPool1K + 1;  // 326
  static constexpr int kConv2O = 32, kConv2KH = 3, kConv2KW = 6;
  static constexpr int kConv2H = kConv1H - kConv2KH + 1;  // 1
  static constexpr int kConv2W = kPool1W - kConv2KW + 1;  // 321
  static constexpr int kPool2K = 2, kPool2S = 2;
  static constexpr int kPool2W = 161;  // ceil((321-2)/2)+1, verified at construction
  static constexpr int kFlat = kConv2O * kConv2H * kPool2W;  // 5152
  static constexpr int kFc1 = 512, kFc2 = 512, kFc3 = 1024, kOut = 2;

  std::vector<double> conv1_k, conv1_b;
  double prelu1 = 0.25;
  std::vector<double> conv2_k, conv2_b;
  double prelu2 = 0.25;
  std::vector<double> fc1_w, fc1_b;
  double prelu3 = 0.25;
  std::vector<double> fc2_w, fc2_b;
  double prelu4 = 0.25;
  std::vector<double> fc3_w, fc3_b;
  double prelu5 = 0.25;
  std::vector<double> fc4_w, fc4_b;

  // Allocates zeroed parameters and verifies the shape chain against the
  // layer arithmetic above (throws std::logic_error on any mismatch).
  WiseNet();

  // He-style init: zero-mean Gaussian with variance 2/fan_in for conv/FC
  // weights, zero biases, shared PReLU slopes at prelu_init.
  void init(Rng& rng, double prelu_init);

  size_t param_count() const;

  struct ParamView {
    const char* name;
    double* data;
    size_t size;
    bool weight_decay;  // decay applies to conv/FC weights only
  };
  // Fixed serialization and update order.
  std::vector<ParamView> param_views();
  std::vector<ParamView> param_views() const;  // views into const model (data not written)
};

// Per-example activations and backward scratch; reusable across calls.
struct Workspace {
  std::vector<double> conv1_out, act1, pool1_out;
  std::vector<int> pool1_arg;
  std::vector<double> conv2_out, act2, pool2_out;
  std::vector<int> pool2_arg;
  std::vector<double> fc1_out, act3, drop1;
  std::vector<double> fc2_out, act4, drop2;
  std::vector<double> fc3_out, act5, drop3;
  std::vector<uint8_t> mask1, mask2, mask3;
  std::array<double, 2> logits{};
  std::array<double, 2> probs{};

  // backward scratch
  std::vector<double> g_conv1_out, g_act1, g_pool1_out;
  std::vector<double> g_conv2_out, g_act2, g_pool2_out;
  std::vector<double> g_fc1_out, g_act3, g_drop1;
  std::vector<double> g_fc2_out, g_act4, g_drop2;
  std::vector<double> g_fc3_out, g_act5, g_drop3;
  std::vector<double> g_input;

  Workspace();
};

// Parameter gradients, mirroring WiseNet's layout.
struct Gradients {
  WiseNet store;  // reuses the layout; values are gradient accumulators

  Gradients() { zero(); }
  void zero();
  std::vector<WiseNet::ParamView> views() { return store.param_views(); }
};

struct ForwardOptions {
  bool train = false;           // enables dropout
  double dropout_rate = 0.5;    // used only when train is set
  Rng* dropout_rng = nullptr;   // required when train is set and rate > 0
};

struct ForwardResult {
  std::array<double, 2> probs{};
  double churn_probability = 0.0;  // probs[1]
};

// input: 3024 mean-subtracted values in (channel, row, column) order.
// The FC-1024 post-PReLU activations remain readable in ws.act5.
ForwardResult forward(const WiseNet& model, const double* input, Workspace& ws,
                      const ForwardOptions& options);

// Runs forward then backpropagation, accumulating parameter gradients into
// `grads`; returns the cross-entropy loss for this example.
double forward_backward(const WiseNet& model, const double* input, int label, Workspace& ws,
                        Gradients& grads, const ForwardOptions& options);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
};

// Central-difference check over >= samples_per_layer randomly chosen
// parameters per layer (dropout off). rel = |a-n| / max(|a|,|n|,1e-4);
// the 1e-4 floor keeps quantities below finite-difference noise from
// registering as spurious relative error.
GradCheckResult gradient_check(WiseNet& model, const double* input, int label, double epsilon,
                               Rng& rng, size_t samples_per_layer = 200);

}  // namespace churngrid::nn
