#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairshift/dataset.hpp"

namespace fairshift {

double sigmoid(double z);

struct ModelWeights {
  std::vector<double> coefficients;
  double intercept = 0.0;
  // Decision threshold on the probability scale; left unset by training and
  // filled in by ER selection on the training fold.
  std::optional<double> threshold;
  std::vector<std::string> feature_names;

  void validate() const;  // shape/finiteness/threshold-range checks
};

struct TrainConfig {
  // Initial step size; the descent loop halves it whenever a step would
  // increase the loss, so the default works across sample sizes even though
  // the loss is a sum over rows (its gradient scales with n).
  double learning_rate = 1.0;
  int max_epochs = 5000;
  double grad_tolerance = 1e-6;  // on the gradient infinity norm
  double l2_penalty = 1e-4;      // coefficient ridge term; excludes the intercept
  std::uint64_t seed = 0;        // reserved for stochastic variants; descent is exact
};

std::vector<double> margins(const ModelWeights& w, const Matrix& X);

// Probabilities sigmoid(theta . x + b), clamped into (0, 1) so downstream logs
// stay finite even at saturated margins.
std::vector<double> predict_proba(const ModelWeights& w, const Matrix& X);

// Mean binary cross-entropy plus l2_penalty * |coefficients|^2; probabilities
// are clamped to [1e-12, 1 - 1e-12] before the logs. The mean form keeps loss
// values and gradient tolerances comparable across cohort sizes.
double bce_loss(const ModelWeights& w, const Matrix& X, const std::vector<int>& Y,
                double l2_penalty = 0.0);

struct Gradient {
  std::vector<double> coefficients;
  double intercept = 0.0;
  double inf_norm() const;
};

// Exact gradient of bce_loss: X^T (p - Y) / n + 2 * l2_penalty * theta, and
// mean(p - Y) for the intercept.
Gradient bce_gradient(const ModelWeights& w, const Matrix& X, const std::vector<int>& Y,
                      double l2_penalty = 0.0);

struct TrainInfo {
  int epochs_run = 0;
  bool converged = false;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// Full-batch gradient descent from zero-initialized weights until the gradient
// infinity norm drops below grad_tolerance or max_epochs is reached. The
// returned loss never exceeds the initial loss; a non-finite loss raises
// DivergenceError with the epoch index. The threshold field is left unset.
ModelWeights train_performance_model(const Dataset& d, const TrainConfig& cfg,
                                     TrainInfo* info = nullptr);

// Hard labels at the model threshold; ties (p == threshold) classify positive.
// Throws ValidationError when the threshold is unset.
std::vector<int> classify(const ModelWeights& w, const Matrix& X);

double accuracy(const std::vector<int>& preds, const std::vector<int>& Y);

}  // namespace fairshift
