#include "churngrid/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "churngrid/kernels.hpp"
#include "churngrid/rng.hpp"

namespace churngrid::baseline {
namespace {

constexpr int kDim = enc::kFeatureDim;

double sigmoid(double z) {
  // Evaluate through exp(-|z|) so large logits cannot overflow.
  if (z >= 0.0) {
    const double e = std::exp(-z);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

struct Standardized {
  std::vector<double> data;  // rows x kDim
  std::vector<int> labels;
  std::vector<double> mean;
  std::vector<double> stddev;

  const double* row(size_t i) const { return data.data() + i * kDim; }
};

Standardized standardize(const std::vector<enc::FeatureVector>& rows) {
  const size_t n = rows.size();
  Standardized out;
  out.mean.assign(kDim, 0.0);
  out.stddev.assign(kDim, 0.0);
  for (const enc::FeatureVector& row : rows) {
    for (int j = 0; j < kDim; ++j) out.mean[j] += row.values[j];
  }
  for (double& m : out.mean) m /= static_cast<double>(n);
  for (const enc::FeatureVector& row : rows) {
    for (int j = 0; j < kDim; ++j) {
      const double d = row.values[j] - out.mean[j];
      out.stddev[j] += d * d;
    }
  }
  for (double& s : out.stddev) {
    s = std::sqrt(s / static_cast<double>(n));
    if (s < 1e-12) s = 1.0;  // constant feature; standardized value becomes 0
  }
  out.data.resize(n * kDim);
  out.labels.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    for (int j = 0; j < kDim; ++j) {
      out.data[i * kDim + j] = (rows[i].values[j] - out.mean[j]) / out.stddev[j];
    }
    out.labels.push_back(rows[i].label);
  }
  return out;
}

// Mean NLL + (l2/2)||w||^2 and its gradient; intercept is not regularized.
double loss_and_grad(const Standardized& set, const std::vector<double>& w, double b, double l2,
                     std::vector<double>* grad_w, double* grad_b) {
  const size_t n = set.labels.size();
  std::fill(grad_w->begin(), grad_w->end(), 0.0);
  *grad_b = 0.0;
  double nll = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double* x = set.row(i);
    const double z = kern::dot(w.data(), x, kDim) + b;
    const double p = sigmoid(z);
    const double y = static_cast<double>(set.labels[i]);
    // Numerically stable -log p(y|x) = log(1+e^-|z|) + max(z,0) - y z.
    nll += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) - y * z;
    kern::axpy(p - y, x, grad_w->data(), kDim);
    *grad_b += p - y;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  nll *= inv_n;
  *grad_b *= inv_n;
  double reg = 0.0;
  for (int j = 0; j < kDim; ++j) {
    (*grad_w)[j] = (*grad_w)[j] * inv_n + l2 * w[j];
    reg += w[j] * w[j];
  }
  return nll + 0.5 * l2 * reg;
}

double loss_only(const Standardized& set, const std::vector<double>& w, double b, double l2) {
  const size_t n = set.labels.size();
  double nll = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double z = kern::dot(w.data(), set.row(i), kDim) + b;
    nll += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) -
           static_cast<double>(set.labels[i]) * z;
  }
  double reg = 0.0;
  for (double v : w) reg += v * v;
  return nll / static_cast<double>(n) + 0.5 * l2 * reg;
}

}  // namespace

double LinearModel::predict(const double* features) const {
  double z = intercept;
  for (size_t j = 0; j < weights.size(); ++j) {
    z += weights[j] * (features[j] - feature_mean[j]) / feature_std[j];
  }
  return sigmoid(z);
}

LinearModel train_logistic(const std::vector<enc::FeatureVector>& rows, double l2,
                           const LogisticConfig& config) {
  if (rows.empty()) throw std::invalid_argument("logistic: empty training set");
  if (l2 < 0.0) throw std::invalid_argument("logistic: l2 must be >= 0");
  bool has_pos = false;
  bool has_neg = false;
  for (const enc::FeatureVector& row : rows) {
    (row.label == 1 ? has_pos : has_neg) = true;
  }
  if (!has_pos || !has_neg) throw std::invalid_argument("logistic: both classes required");

  const Standardized set = standardize(rows);
  std::vector<double> w(kDim, 0.0);
  double b = 0.0;
  std::vector<double> grad_w(kDim, 0.0);
  double grad_b = 0.0;
  std::vector<double> w_try(kDim, 0.0);

  double loss = loss_and_grad(set, w, b, l2, &grad_w, &grad_b);
  for (int iter = 0; iter < config.max_iters; ++iter) {
    double max_grad = std::abs(grad_b);
    double grad_sq = grad_b * grad_b;
    for (int j = 0; j < kDim; ++j) {
      max_grad = std::max(max_grad, std::abs(grad_w[j]));
      grad_sq += grad_w[j] * grad_w[j];
    }
    if (max_grad < config.tolerance) break;

    double step = 1.0;
    bool accepted = false;
    while (step > 1e-12) {
      for (int j = 0; j < kDim; ++j) w_try[j] = w[j] - step * grad_w[j];
      const double b_try = b - step * grad_b;
      const double candidate = loss_only(set, w_try, b_try, l2);
      if (std::isfinite(candidate) && candidate <= loss - 1e-4 * step * grad_sq) {
        w.swap(w_try);
        b = b_try;
        loss = candidate;
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent step left; treat as converged
    loss = loss_and_grad(set, w, b, l2, &grad_w, &grad_b);
    if (!std::isfinite(loss)) throw std::runtime_error("logistic: loss diverged");
  }

  LinearModel model;
  model.weights = std::move(w);
  model.intercept = b;
  model.feature_mean = set.mean;
  model.feature_std = set.stddev;
  return model;
}

double logistic_loss(const LinearModel& model, const std::vector<enc::FeatureVector>& rows,
                     double l2) {
  if (rows.empty()) throw std::invalid_argument("logistic: empty set");
  double nll = 0.0;
  for (const enc::FeatureVector& row : rows) {
    double z = model.intercept;
    for (size_t j = 0; j < model.weights.size(); ++j) {
      z += model.weights[j] * (row.values[j] - model.feature_mean[j]) / model.feature_std[j];
    }
    nll += std::log1p(std::exp(-std::abs(z))) + std::max(z, 0.0) -
           static_cast<double>(row.label) * z;
  }
  double reg = 0.0;
  for (double v : model.weights) reg += v * v;
  return nll / static_cast<double>(rows.size()) + 0.5 * l2 * reg;
}

std::vector<enc::FeatureVector> balance_features(const std::vector<enc::FeatureVector>& rows,
                                                 uint64_t seed) {
  std::vector<size_t> positives;
  std::vector<size_t> negatives;
  for (size_t i = 0; i < rows.size(); ++i) {
    (rows[i].label == 1 ? positives : negatives).push_back(i);
  }
  if (positives.empty() || negatives.empty()) {
    throw std::invalid_argument("balance: both classes must be present");
  }
  if (positives.size() == negatives.size()) return rows;
  std::vector<size_t>& majority = positives.size() > negatives.size() ? positives : negatives;
  const size_t keep = std::min(positives.size(), negatives.size());
  Rng rng(seed);
  shuffle(majority, rng);
  majority.resize(keep);
  std::vector<bool> keep_mask(rows.size(), false);
  for (size_t i : positives) keep_mask[i] = true;
  for (size_t i : negatives) keep_mask[i] = true;
  std::vector<enc::FeatureVector> balanced;
  balanced.reserve(2 * keep);
  for (size_t i = 0; i < rows.size(); ++i) {
    if (keep_mask[i]) balanced.push_back(rows[i]);
  }
  return balanced;
}

}  // namespace churngrid::baseline
