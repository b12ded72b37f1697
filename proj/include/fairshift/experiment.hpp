#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fairshift/importance.hpp"
#include "fairshift/preprocess.hpp"
#include "fairshift/transfer.hpp"

namespace fairshift {

struct ExperimentConfig {
  TrainConfig train;
  FairTransferConfig fair;
  int folds = 5;
  int repetitions = 100;  // permutation repetitions per feature, per fold
};

struct MetricsRow {
  double auc = 0.0, acc = 0.0;
  double tpr_diff_abs = 0.0, fpr_diff_abs = 0.0;
  double eod_sq = 0.0, eod_reported = 0.0;
  double overall_tpr = 0.0;
};

struct FoldResult {
  int fold = 0;
  ScalerParams scaler;       // fitted on the training split only
  ModelWeights perf_model;   // thresholds selected on the training split only
  ModelWeights fair_model;
  double tpr_anchor = 0.0;
  MetricsRow perf, fair;     // held-out metrics
  double fairness_improvement = 0.0;
  int transfer_epochs = 0;
  bool transfer_converged = false;
  bool transfer_improving = false;
  ImportanceReport importance;  // on the held-out split
  CoefficientDelta delta;
};

struct ImportanceSummaryRow {
  std::string name;
  double delta_mean = 0.0;  // mean over folds of the per-fold means
  double delta_std = 0.0;   // sample std over folds
  int rank = 0;
};

struct Aggregate {
  MetricsRow perf_mean, perf_std, fair_mean, fair_std;
  double improvement_mean = 0.0, improvement_std = 0.0;
  std::vector<ImportanceSummaryRow> importance;
  CoefficientDelta delta;  // per-feature means over folds
};

struct ExperimentReport {
  std::vector<FoldResult> folds;
  std::vector<int> skipped_folds;  // test split missing a (Y,Z) cell
  Aggregate aggregate;
  int requested_folds = 0;
  int repetitions = 0;
  std::uint64_t master_seed = 0;
};

// Cross-validated end-to-end run: per fold, fit the scaler, the performance
// model, its ER threshold, the TPR anchor and the fair model on the training
// split only, then evaluate both models and the permutation contributions on
// the held-out split. All randomness derives from master_seed, so reports are
// identical across runs and thread counts. A fold whose test split misses a
// (Y,Z) cell is skipped with a warning; two or more such folds are an error.
// fold_override substitutes the stratified assignment (used by leakage tests).
ExperimentReport run_experiment(const Dataset& d, const ExperimentConfig& cfg,
                                std::uint64_t master_seed,
                                const std::optional<FoldAssignment>& fold_override =
                                    std::nullopt);

// Worker cap from FAIRSHIFT_THREADS (0 or unset = hardware concurrency).
int thread_cap();

}  // namespace fairshift
