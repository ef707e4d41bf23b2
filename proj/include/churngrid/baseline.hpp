#pragma once

#include <cstdint>
#include <vector>

#include "churngrid/encoder.hpp"

namespace churngrid::baseline {

// L2-regularized logistic regression over the 1009 flattened features, with
// training-set standardization folded into the model.
struct LinearModel {
  std::vector<double> weights;       // per standardized feature
  double intercept = 0.0;
  std::vector<double> feature_mean;  // training-set standardization
  std::vector<double> feature_std;   // constant features get std 1

  double predict(const double* features) const;  // sigmoid(w.x_std + b)
};

struct LogisticConfig {
  int max_iters = 500;
  double tolerance = 1e-6;  // stop when the gradient max-norm drops below
};

// Full-batch gradient descent with Armijo backtracking, so the regularized
// loss never increases across accepted iterations. Deterministic (zero
// init). Requires both classes present; throws on divergence.
LinearModel train_logistic(const std::vector<enc::FeatureVector>& rows, double l2,
                           const LogisticConfig& config = {});

// Mean regularized negative log-likelihood of the model on `rows`.
double logistic_loss(const LinearModel& model, const std::vector<enc::FeatureVector>& rows,
                     double l2);

// Class rebalance for feature rows, mirroring dataset::balance_training.
std::vector<enc::FeatureVector> balance_features(const std::vector<enc::FeatureVector>& rows,
                                                 uint64_t seed);

}  // namespace churngrid::baseline
