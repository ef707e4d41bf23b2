#include "churngrid/model.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace churngrid::nn {
namespace {

constexpr size_t kConv1KSize = static_cast<size_t>(WiseNet::kConv1O) * WiseNet::kInC *
                               WiseNet::kConv1KH * WiseNet::kConv1KW;
constexpr size_t kConv2KSize = static_cast<size_t>(WiseNet::kConv2O) * WiseNet::kConv1O *
                               WiseNet::kConv2KH * WiseNet::kConv2KW;

void check_shape(bool ok, const char* what) {
  if (!ok) throw std::logic_error(std::string("wisenet: shape chain broken at ") + what);
}

}  // namespace

WiseNet::WiseNet()
    : conv1_k(kConv1KSize, 0.0),
      conv1_b(kConv1O, 0.0),
      conv2_k(kConv2KSize, 0.0),
      conv2_b(kConv2O, 0.0),
      fc1_w(static_cast<size_t>(kFc1) * kFlat, 0.0),
      fc1_b(kFc1, 0.0),
      fc2_w(static_cast<size_t>(kFc2) * kFc1, 0.0),
      fc2_b(kFc2, 0.0),
      fc3_w(static_cast<size_t>(kFc3) * kFc2, 0.0),
      fc3_b(kFc3, 0.0),
      fc4_w(static_cast<size_t>(kOut) * kFc3, 0.0),
      fc4_b(kOut, 0.0) {
  // Re-derive the activation chain from the layer arithmetic and insist it
  // matches the published table exactly.
  check_shape(kInH - kConv1KH + 1 == 3 && kInW - kConv1KW + 1 == 331, "conv1 (expected 331x3)");
  check_shape(pooled_length(kConv1W, kPool1K, kPool1S, false) == 326, "pool1 (expected 326x3)");
  check_shape(kConv1H - kConv2KH + 1 == 1 && kPool1W - kConv2KW + 1 == 321,
              "conv2 (expected 321x1)");
  check_shape(pooled_length(kConv2W, kPool2K, kPool2S, true) == kPool2W,
              "pool2 (expected 161x1, ceil mode)");
  check_shape(kFlat == 5152, "flatten (expected 5152)");
  check_shape(kFc1 == 512 && kFc2 == 512 && kFc3 == 1024 && kOut == 2, "fc stack");
}

void WiseNet::init(Rng& rng, double prelu_init) {
  auto fill_gaussian = [&rng](std::vector<double>& w, size_t fan_in) {
    const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
    for (double& v : w) v = stddev * rng.normal();
  };
  fill_gaussian(conv1_k, static_cast<size_t>(kInC) * kConv1KH * kConv1KW);
  fill_gaussian(conv2_k, static_cast<size_t>(kConv1O) * kConv2KH * kConv2KW);
  fill_gaussian(fc1_w, kFlat);
  fill_gaussian(fc2_w, kFc1);
  fill_gaussian(fc3_w, kFc2);
  fill_gaussian(fc4_w, kFc3);
  std::fill(conv1_b.begin(), conv1_b.end(), 0.0);
  std::fill(conv2_b.begin(), conv2_b.end(), 0.0);
  std::fill(fc1_b.begin(), fc1_b.end(), 0.0);
  std::fill(fc2_b.begin(), fc2_b.end(), 0.0);
  std::fill(fc3_b.begin(), fc3_b.end(), 0.0);
  std::fill(fc4_b.begin(), fc4_b.end(), 0.0);
  prelu1 = prelu2 = prelu3 = prelu4 = prelu5 = prelu_init;
}

size_t WiseNet::param_count() const {
  size_t total = 0;
  for (const ParamView& view : param_views()) total += view.size;
  return total;
}

std::vector<WiseNet::ParamView> WiseNet::param_views() {
  return {
      {"conv1.kernels", conv1_k.data(), conv1_k.size(), true},
      {"conv1.bias", conv1_b.data(), conv1_b.size(), false},
      {"prelu1.slope", &prelu1, 1, false},
      {"conv2.kernels", conv2_k.data(), conv2_k.size(), true},
      {"conv2.bias", conv2_b.data(), conv2_b.size(), false},
      {"prelu2.slope", &prelu2, 1, false},
      {"fc1.weights", fc1_w.data(), fc1_w.size(), true},
      {"fc1.bias", fc1_b.data(), fc1_b.size(), false},
      {"prelu3.slope", &prelu3, 1, false},
      {"fc2.weights", fc2_w.data(), fc2_w.size(), true},
      {"fc2.bias", fc2_b.data(), fc2_b.size(), false},
      {"prelu4.slope", &prelu4, 1, false},
      {"fc3.weights", fc3_w.data(), fc3_w.size(), true},
      {"fc3.bias", fc3_b.data(), fc3_b.size(), false},
      {"prelu5.slope", &prelu5, 1, false},
      {"fc4.weights", fc4_w.data(), fc4_w.size(), true},
      {"fc4.bias", fc4_b.data(), fc4_b.size(), false},
  };
}

std::vector<WiseNet::ParamView> WiseNet::param_views() const {
  return const_cast<WiseNet*>(this)->param_views();
}

Workspace::Workspace() {
  const size_t conv1 = static_cast<size_t>(WiseNet::kConv1O) * WiseNet::kConv1H * WiseNet::kConv1W;
  const size_t pool1 = static_cast<size_t>(WiseNet::kConv1O) * WiseNet::kConv1H * WiseNet::kPool1W;
  const size_t conv2 = static_cast<size_t>(WiseNet::kConv2O) * WiseNet::kConv2H * WiseNet::kConv2W;
  const size_t pool2 = static_cast<size_t>(WiseNet::kConv2O) * WiseNet::kConv2H * WiseNet::kPool2W;
  conv1_out.resize(conv1);
  act1.resize(conv1);
  pool1_out.resize(pool1);
  pool1_arg.resize(pool1);
  conv2_out.resize(conv2);
  act2.resize(conv2);
  pool2_out.resize(pool2);
  pool2_arg.resize(pool2);
  fc1_out.resize(WiseNet::kFc1);
  act3.resize(WiseNet::kFc1);
  drop1.resize(WiseNet::kFc1);
  fc2_out.resize(WiseNet::kFc2);
  act4.resize(WiseNet::kFc2);
  drop2.resize(WiseNet::kFc2);
  fc3_out.resize(WiseNet::kFc3);
  act5.resize(WiseNet::kFc3);
  drop3.resize(WiseNet::kFc3);
  mask1.resize(WiseNet::kFc1);
  mask2.resize(WiseNet::kFc2);
  mask3.resize(WiseNet::kFc3);

  g_conv1_out.resize(conv1);
  g_act1.resize(conv1);
  g_pool1_out.resize(pool1);
  g_conv2_out.resize(conv2);
  g_act2.resize(conv2);
  g_pool2_out.resize(pool2);
  g_fc1_out.resize(WiseNet::kFc1);
  g_act3.resize(WiseNet::kFc1);
  g_drop1.resize(WiseNet::kFc1);
  g_fc2_out.resize(WiseNet::kFc2);
  g_act4.resize(WiseNet::kFc2);
  g_drop2.resize(WiseNet::kFc2);
  g_fc3_out.resize(WiseNet::kFc3);
  g_act5.resize(WiseNet::kFc3);
  g_drop3.resize(WiseNet::kFc3);
  g_input.resize(static_cast<size_t>(WiseNet::kInC) * WiseNet::kInH * WiseNet::kInW);
}

void Gradients::zero() {
  for (WiseNet::ParamView& view : store.param_views()) {
    std::fill(view.data, view.data + view.size, 0.0);
  }
}

namespace {

// Shared by forward() and forward_backward(): runs the stack up to the
// logits, applying dropout when options.train is set.
void run_forward(const WiseNet& m, const double* input, Workspace& ws,
                 const ForwardOptions& options) {
  const bool drop = options.train && options.dropout_rate > 0.0;
  if (drop && options.dropout_rng == nullptr) {
    throw std::invalid_argument("forward: dropout in train mode needs an rng");
  }

  conv2d_forward(input, WiseNet::kInC, WiseNet::kInH, WiseNet::kInW, m.conv1_k.data(),
                 WiseNet::kConv1O, WiseNet::kConv1KH, WiseNet::kConv1KW, m.conv1_b.data(),
                 ws.conv1_out.data());
  prelu_forward(ws.conv1_out.data(), ws.conv1_out.size(), m.prelu1, ws.act1.data());
  maxpool_forward(ws.act1.data(), WiseNet::kConv1O, WiseNet::kConv1H, WiseNet::kConv1W,
                  WiseNet::kPool1K, WiseNet::kPool1S, false, ws.pool1_out.data(),
                  ws.pool1_arg.data());
  conv2d_forward(ws.pool1_out.data(), WiseNet::kConv1O, WiseNet::kConv1H, WiseNet::kPool1W,
                 m.conv2_k.data(), WiseNet::kConv2O, WiseNet::kConv2KH, WiseNet::kConv2KW,
                 m.conv2_b.data(), ws.conv2_out.data());
  prelu_forward(ws.conv2_out.data(), ws.conv2_out.size(), m.prelu2, ws.act2.data());
  maxpool_forward(ws.act2.data(), WiseNet::kConv2O, WiseNet::kConv2H, WiseNet::kConv2W,
                  WiseNet::kPool2K, WiseNet::kPool2S, true, ws.pool2_out.data(),
                  ws.pool2_arg.data());

  // pool2_out is already the flattened 5152-vector in (channel, x) order.
  fc_forward(ws.pool2_out.data(), WiseNet::kFlat, m.fc1_w.data(), m.fc1_b.data(), WiseNet::kFc1,
             ws.fc1_out.data());
  prelu_forward(ws.fc1_out.data(), WiseNet::kFc1, m.prelu3, ws.act3.data());
  if (drop) {
    dropout_forward_train(ws.act3.data(), WiseNet::kFc1, options.dropout_rate,
                          *options.dropout_rng, ws.drop1.data(), ws.mask1.data());
  } else {
    ws.drop1 = ws.act3;
  }
  fc_forward(ws.drop1.data(), WiseNet::kFc1, m.fc2_w.data(), m.fc2_b.data(), WiseNet::kFc2,
             ws.fc2_out.data());
  prelu_forward(ws.fc2_out.data(), WiseNet::kFc2, m.prelu4, ws.act4.data());
  if (drop) {
    dropout_forward_train(ws.act4.data(), WiseNet::kFc2, options.dropout_rate,
                          *options.dropout_rng, ws.drop2.data(), ws.mask2.data());
  } else {
    ws.drop2 = ws.act4;
  }
  fc_forward(ws.drop2.data(), WiseNet::kFc2, m.fc3_w.data(), m.fc3_b.data(), WiseNet::kFc3,
             ws.fc3_out.data());
  prelu_forward(ws.fc3_out.data(), WiseNet::kFc3, m.prelu5, ws.act5.data());
  if (drop) {
    dropout_forward_train(ws.act5.data(), WiseNet::kFc3, options.dropout_rate,
                          *options.dropout_rng, ws.drop3.data(), ws.mask3.data());
  } else {
    ws.drop3 = ws.act5;
  }
  fc_forward(ws.drop3.data(), WiseNet::kFc3, m.fc4_w.data(), m.fc4_b.data(), WiseNet::kOut,
             ws.logits.data());
}

}  // namespace

ForwardResult forward(const WiseNet& model, const double* input, Workspace& ws,
                      const ForwardOptions& options) {
  run_forward(model, input, ws, options);
  // Label choice does not matter for the probabilities.
  const SoftmaxResult sm = softmax_cross_entropy(ws.logits, 0);
  ws.probs = sm.probs;
  return ForwardResult{sm.probs, sm.probs[1]};
}

double forward_backward(const WiseNet& model, const double* input, int label, Workspace& ws,
                        Gradients& grads, const ForwardOptions& options) {
  run_forward(model, input, ws, options);
  const SoftmaxResult sm = softmax_cross_entropy(ws.logits, label);
  ws.probs = sm.probs;
  const bool drop = options.train && options.dropout_rate > 0.0;
  WiseNet& g = grads.store;

  std::array<double, 2> g_logits = sm.grad_logits;
  fc_backward(ws.drop3.data(), WiseNet::kFc3, model.fc4_w.data(), WiseNet::kOut, g_logits.data(),
              ws.g_drop3.data(), g.fc4_w.data(), g.fc4_b.data());
  if (drop) {
    dropout_backward(ws.mask3.data(), ws.g_drop3.data(), WiseNet::kFc3, options.dropout_rate,
                     ws.g_act5.data());
  } else {
    ws.g_act5 = ws.g_drop3;
  }
  prelu_backward(ws.fc3_out.data(), ws.g_act5.data(), WiseNet::kFc3, model.prelu5,
                 ws.g_fc3_out.data(), &g.prelu5);
  fc_backward(ws.drop2.data(), WiseNet::kFc2, model.fc3_w.data(), WiseNet::kFc3,
              ws.g_fc3_out.data(), ws.g_drop2.data(), g.fc3_w.data(), g.fc3_b.data());
  if (drop) {
    dropout_backward(ws.mask2.data(), ws.g_drop2.data(), WiseNet::kFc2, options.dropout_rate,
                     ws.g_act4.data());
  } else {
    ws.g_act4 = ws.g_drop2;
  }
  prelu_backward(ws.fc2_out.data(), ws.g_act4.data(), WiseNet::kFc2, model.prelu4,
                 ws.g_fc2_out.data(), &g.prelu4);
  fc_backward(ws.drop1.data(), WiseNet::kFc1, model.fc2_w.data(), WiseNet::kFc2,
              ws.g_fc2_out.data(), ws.g_drop1.data(), g.fc2_w.data(), g.fc2_b.data());
  if (drop) {
    dropout_backward(ws.mask1.data(), ws.g_drop1.data(), WiseNet::kFc1, options.dropout_rate,
                     ws.g_act3.data());
  } else {
    ws.g_act3 = ws.g_drop1;
  }
  prelu_backward(ws.fc1_out.data(), ws.g_act3.data(), WiseNet::kFc1, model.prelu3,
                 ws.g_fc1_out.data(), &g.prelu3);
  fc_backward(ws.pool2_out.data(), WiseNet::kFlat, model.fc1_w.data(), WiseNet::kFc1,
              ws.g_fc1_out.data(), ws.g_pool2_out.data(), g.fc1_w.data(), g.fc1_b.data());

  maxpool_backward(ws.pool2_arg.data(), WiseNet::kConv2O, WiseNet::kConv2H, WiseNet::kPool2W,
                   ws.g_pool2_out.data(), WiseNet::kConv2W, ws.g_act2.data());
  prelu_backward(ws.conv2_out.data(), ws.g_act2.data(), ws.g_act2.size(), model.prelu2,
                 ws.g_conv2_out.data(), &g.prelu2);
  conv2d_backward(ws.pool1_out.data(), WiseNet::kConv1O, WiseNet::kConv1H, WiseNet::kPool1W,
                  model.conv2_k.data(), WiseNet::kConv2O, WiseNet::kConv2KH, WiseNet::kConv2KW,
                  ws.g_conv2_out.data(), ws.g_pool1_out.data(), g.conv2_k.data(),
                  g.conv2_b.data());
  maxpool_backward(ws.pool1_arg.data(), WiseNet::kConv1O, WiseNet::kConv1H, WiseNet::kPool1W,
                   ws.g_pool1_out.data(), WiseNet::kConv1W, ws.g_act1.data());
  prelu_backward(ws.conv1_out.data(), ws.g_act1.data(), ws.g_act1.size(), model.prelu1,
                 ws.g_conv1_out.data(), &g.prelu1);
  conv2d_backward(input, WiseNet::kInC, WiseNet::kInH, WiseNet::kInW, model.conv1_k.data(),
                  WiseNet::kConv1O, WiseNet::kConv1KH, WiseNet::kConv1KW, ws.g_conv1_out.data(),
                  ws.g_input.data(), g.conv1_k.data(), g.conv1_b.data());
  return sm.loss;
}

GradCheckResult gradient_check(WiseNet& model, const double* input, int label, double epsilon,
                               Rng& rng, size_t samples_per_layer) {
  Workspace ws;
  Gradients grads;
  grads.zero();
  const ForwardOptions options;  // dropout off
  forward_backward(model, input, label, ws, grads, options);

  auto loss_at = [&]() {
    run_forward(model, input, ws, options);
    return softmax_cross_entropy(ws.logits, label).loss;
  };
  // Activation-region fingerprint of the last forward pass: PReLU input
  // signs plus the pooling argmaxes. A central difference is only a valid
  // derivative estimate when both probes stay in one region; a probe pair
  // straddling a kink or flipping a pooling winner measures a secant across
  // a non-smooth point, so such slots are discarded and redrawn.
  auto region = [&]() {
    std::vector<int> r;
    r.reserve(ws.conv1_out.size() + ws.conv2_out.size() + ws.fc1_out.size() +
              ws.fc2_out.size() + ws.fc3_out.size() + ws.pool1_arg.size() +
              ws.pool2_arg.size());
    for (double a : ws.conv1_out) r.push_back(a < 0.0);
    for (double a : ws.conv2_out) r.push_back(a < 0.0);
    for (double a : ws.fc1_out) r.push_back(a < 0.0);
    for (double a : ws.fc2_out) r.push_back(a < 0.0);
    for (double a : ws.fc3_out) r.push_back(a < 0.0);
    r.insert(r.end(), ws.pool1_arg.begin(), ws.pool1_arg.end());
    r.insert(r.end(), ws.pool2_arg.begin(), ws.pool2_arg.end());
    return r;
  };

  GradCheckResult result;
  std::vector<WiseNet::ParamView> views = model.param_views();
  std::vector<WiseNet::ParamView> grad_views = grads.store.param_views();
  for (size_t v = 0; v < views.size(); ++v) {
    WiseNet::ParamView& view = views[v];
    const double* analytic = grad_views[v].data;
    const size_t samples = std::min(samples_per_layer, view.size);
    std::unordered_set<size_t> done;
    size_t attempts = 0;
    while (done.size() < samples && attempts < samples * 20 + 20) {
      ++attempts;
      const size_t idx = rng.uniform_int(view.size);
      if (done.count(idx) != 0) continue;
      const double saved = view.data[idx];
      view.data[idx] = saved + epsilon;
      const double loss_plus = loss_at();
      const std::vector<int> region_plus = region();
      view.data[idx] = saved - epsilon;
      const double loss_minus = loss_at();
      const bool same_region = region() == region_plus;
      view.data[idx] = saved;
      if (!same_region) continue;
      done.insert(idx);
      const double numeric = (loss_plus - loss_minus) / (2.0 * epsilon);
      const double denom = std::max({std::abs(analytic[idx]), std::abs(numeric), 1e-4});
      const double rel = std::abs(analytic[idx] - numeric) / denom;
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst_param = std::string(view.name) + "[" + std::to_string(idx) + "]";
      }
    }
  }
  return result;
}

}  // namespace churngrid::nn
