#include <cmath>
#include <vector>

#include "churngrid/baseline.hpp"
#include "churngrid/metrics.hpp"
#include "churngrid/rng.hpp"
#include "doctest.h"

using namespace churngrid;

namespace {

// Feature 0 separates the classes; everything else is noise.
std::vector<enc::FeatureVector> separable_rows(int n, uint64_t seed) {
  std::vector<enc::FeatureVector> rows(n);
  Rng rng(seed);
  for (int i = 0; i < n; ++i) {
    rows[i].label = i % 2;
    rows[i].values[0] = rows[i].label ? 200.0 + rng.uniform(0.0, 20.0) : rng.uniform(0.0, 20.0);
    for (int j = 1; j < 20; ++j) rows[i].values[j] = rng.uniform(0.0, 255.0);
    rows[i].values[enc::kFeatureDim - 1] = rng.uniform_int(84);
  }
  return rows;
}

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

TEST_CASE("logistic baseline separates a linearly separable toy set") {
  const std::vector<enc::FeatureVector> rows = separable_rows(60, 1);
  const baseline::LinearModel model = baseline::train_logistic(rows, 1e-3);

  metrics::ScoredSet scored;
  for (const auto& row : rows) {
    scored.probs.push_back(model.predict(row.values.data()));
    scored.labels.push_back(row.label);
  }
  CHECK(metrics::auc(scored) == 1.0);
  CHECK(metrics::error_rate(scored) == 0.0);

  // Training never worsens the zero-model loss, which is exactly ln 2.
  const double trained_loss = baseline::logistic_loss(model, rows, 1e-3);
  CHECK(trained_loss < std::log(2.0));
}

TEST_CASE("the trained model is a stationary point of the regularized loss") {
  const std::vector<enc::FeatureVector> rows = separable_rows(40, 2);
  const double l2 = 0.05;  // strong enough to keep the optimum in easy reach
  baseline::LinearModel model = baseline::train_logistic(rows, l2);

  const double eps = 1e-5;
  for (int j : {0, 1, 7, 500, 1008}) {
    const double keep = model.weights[j];
    model.weights[j] = keep + eps;
    const double hi = baseline::logistic_loss(model, rows, l2);
    model.weights[j] = keep - eps;
    const double lo = baseline::logistic_loss(model, rows, l2);
    model.weights[j] = keep;
    CHECK(std::abs((hi - lo) / (2.0 * eps)) < 1e-3);
  }
}

TEST_CASE("heavy regularization crushes the weights toward zero") {
  const std::vector<enc::FeatureVector> rows = separable_rows(40, 3);
  const baseline::LinearModel strong = baseline::train_logistic(rows, 1e4);
  double max_w = 0.0;
  for (double w : strong.weights) max_w = std::max(max_w, std::abs(w));
  CHECK(max_w < 1e-2);
  // Balanced labels and ~zero weights put every prediction near one half.
  CHECK(strong.predict(rows[0].values.data()) == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("predict applies standardization then the sigmoid") {
  baseline::LinearModel model;
  model.weights = {2.0, -1.0};
  model.intercept = 0.25;
  model.feature_mean = {10.0, 4.0};
  model.feature_std = {5.0, 2.0};
  const double x[2] = {20.0, 0.0};
  // z = 2*(20-10)/5 + (-1)*(0-4)/2 + 0.25
  const double z = 2.0 * 2.0 + 1.0 * 2.0 + 0.25;
  CHECK(model.predict(x) == doctest::Approx(sigmoid(z)).epsilon(1e-12));
}

TEST_CASE("constant features survive standardization with zero effect") {
  std::vector<enc::FeatureVector> rows = separable_rows(30, 4);
  for (auto& row : rows) row.values[5] = 77.0;  // constant column
  const baseline::LinearModel model = baseline::train_logistic(rows, 1e-3);
  CHECK(model.feature_std[5] == 1.0);
  CHECK(model.weights[5] == 0.0);  // zero-variance input never moves off init
}

TEST_CASE("baseline requires both classes") {
  std::vector<enc::FeatureVector> rows = separable_rows(10, 5);
  for (auto& row : rows) row.label = 1;
  CHECK_THROWS(baseline::train_logistic(rows, 1e-3));
  CHECK_THROWS(baseline::train_logistic({}, 1e-3));
}

TEST_CASE("training is deterministic") {
  const std::vector<enc::FeatureVector> rows = separable_rows(30, 6);
  const baseline::LinearModel a = baseline::train_logistic(rows, 1e-2);
  const baseline::LinearModel b = baseline::train_logistic(rows, 1e-2);
  CHECK(a.weights == b.weights);
  CHECK(a.intercept == b.intercept);
}

TEST_CASE("balance_features undersamples the majority deterministically") {
  std::vector<enc::FeatureVector> rows;
  for (int i = 0; i < 9; ++i) {
    enc::FeatureVector row;
    row.label = i < 6 ? 0 : 1;
    row.values[0] = i;
    rows.push_back(row);
  }
  const std::vector<enc::FeatureVector> balanced = baseline::balance_features(rows, 11);
  CHECK(balanced.size() == 6);
  int pos = 0;
  for (const auto& row : balanced) pos += row.label;
  CHECK(pos == 3);
  // Kept rows preserve their original order.
  for (size_t i = 1; i < balanced.size(); ++i) {
    CHECK(balanced[i - 1].values[0] < balanced[i].values[0]);
  }
  const std::vector<enc::FeatureVector> again = baseline::balance_features(rows, 11);
  bool same = again.size() == balanced.size();
  for (size_t i = 0; same && i < balanced.size(); ++i) {
    same = again[i].values[0] == balanced[i].values[0];
  }
  CHECK(same);
}
