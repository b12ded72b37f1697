#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairshift/fairness.hpp"
#include "fairshift/logistic.hpp"

namespace fairshift {

// Which disparity summary the surrogate optimizes (and the improving check
// compares). squared_sum is the squared-difference form; mean_abs is the mean
// of the absolute rate differences, matching the convention used when the
// disparity is quoted as a single number.
enum class EodVariant { squared_sum, mean_abs };

struct FairTransferConfig {
  double epsilon = 0.02;                // half-width of the overall-TPR band
  double surrogate_temperature = 0.05;  // tau: soft-decision sharpness
  double penalty_weight = 10.0;         // lambda on the squared hinge
  // Transfer is a short fine-tune, not a full minimization: run long enough to
  // remove the group-aligned score offset, and stop before the optimizer
  // starts trading predictive signal for exact rate equality on the training
  // fold. Raise max_epochs (with epsilon relaxed) to equalize rates fully.
  double learning_rate = 0.25;
  int max_epochs = 50;  // 0 is allowed and returns the initialized model
  double grad_tolerance = 1e-7;
  std::uint64_t seed = 0;
  EodVariant eod_variant = EodVariant::squared_sum;

  void validate() const;
};

// Soft-to-hard gap absorbed by the improving check: the fair model's hard
// overall TPR may sit up to epsilon + kTprSlack away from the anchor.
inline constexpr double kTprSlack = 0.02;

// Copy of the performance model (coefficients, intercept, threshold, names).
// Requires a trained model with its threshold set.
ModelWeights init_fair_from(const ModelWeights& perf);

struct SoftFairLoss {
  double loss = 0.0;
  double eod_term = 0.0;    // surrogate disparity
  double omega_term = 0.0;  // TPR band penalty
  double soft_tpr = 0.0;    // mean soft decision over Y=1 rows
  Gradient gradient;
};

// Differentiable surrogate: soft decisions s_i = sigmoid((p_i - t) / tau) with
// the threshold t frozen at w.threshold, group-conditional soft TPR/FPR means,
// the eod_variant disparity of those means, plus a squared-hinge penalty
// penalty_weight * max(0, |softTPR - tpr_anchor| - epsilon)^2.
SoftFairLoss soft_fair_loss(const ModelWeights& w, const Matrix& X,
                            const std::vector<int>& Y, const std::vector<int>& Z,
                            double tpr_anchor, const FairTransferConfig& cfg);

struct CoefficientDelta {
  struct Entry {
    std::string name;
    double theta_perf = 0.0;
    double theta_fair = 0.0;
    double delta = 0.0;  // fair - perf
  };
  std::vector<Entry> entries;  // sorted by |delta| descending
  double intercept_delta = 0.0;
};

CoefficientDelta coefficient_delta(const ModelWeights& perf, const ModelWeights& fair);

struct TransferResult {
  ModelWeights fair;
  CoefficientDelta delta;
  // True when the fair model's hard disparity (per eod_variant) is no worse
  // than the performance model's on the training data and its hard overall TPR
  // is within epsilon + kTprSlack of the anchor. Callers surface false rather
  // than treating the run as a success.
  bool improving = false;
  FairnessMetrics perf_metrics;  // both on the training data
  FairnessMetrics fair_metrics;
  double tpr_anchor = 0.0;
  int epochs_run = 0;
  bool converged = false;
};

// Transfer learning step: freeze the anchor TPR of the performance model on d,
// descend the soft fair loss starting from its weights, then re-select the ER
// threshold for the resulting model on the same data.
TransferResult train_fair_model(const Dataset& d, const ModelWeights& perf,
                                const FairTransferConfig& cfg);

}  // namespace fairshift
