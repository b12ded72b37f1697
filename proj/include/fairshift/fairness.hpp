#pragma once

#include <vector>

#include "fairshift/logistic.hpp"

namespace fairshift {

struct CellCounts {
  long tp = 0, fn = 0, fp = 0, tn = 0;
};

// Group-conditional confusion rates. Every (label, group) conditioning cell
// must be non-empty; an empty cell raises DegenerateCellError naming it.
struct GroupRates {
  double tpr_g1 = 0.0, fpr_g1 = 0.0;
  double tpr_g0 = 0.0, fpr_g0 = 0.0;
  CellCounts counts_g1, counts_g0;
};

struct FairnessMetrics {
  double tpr_diff_abs = 0.0, fpr_diff_abs = 0.0;  // |between-group differences|
  double tpr_diff_sq = 0.0, fpr_diff_sq = 0.0;
  double eod_sq = 0.0;        // tpr_diff_sq + fpr_diff_sq; drives optimization
  double eod_reported = 0.0;  // (tpr_diff_abs + fpr_diff_abs) / 2; table convention
  double overall_tpr = 0.0;
  GroupRates rates;
};

GroupRates group_rates(const std::vector<int>& preds, const std::vector<int>& Y,
                       const std::vector<int>& Z);

FairnessMetrics metrics_from_rates(const GroupRates& rates);

// Equalized-odds disparity of hard predictions:
//   eod_sq = (tpr_g1 - tpr_g0)^2 + (fpr_g1 - fpr_g0)^2.
FairnessMetrics eod_squared(const std::vector<int>& preds, const std::vector<int>& Y,
                            const std::vector<int>& Z);

// Improvement of the fair model over the performance model on the same data:
// eod_sq(fair) - eod_sq(perf), each at its own threshold. Negative is fairer.
double fairness_improvement(const Matrix& X, const std::vector<int>& Y,
                            const std::vector<int>& Z, const ModelWeights& model_perf,
                            const ModelWeights& model_fair);

}  // namespace fairshift
