#include "fairshift/fairness.hpp"

#include <cmath>

#include "fairshift/errors.hpp"

namespace fairshift {

GroupRates group_rates(const std::vector<int>& preds, const std::vector<int>& Y,
                       const std::vector<int>& Z) {
  const std::size_t n = preds.size();
  if (Y.size() != n || Z.size() != n || n == 0)
    throw ValidationError("group_rates needs equal-length, non-empty inputs");
  GroupRates r;
  for (std::size_t i = 0; i < n; ++i) {
    if (preds[i] != 0 && preds[i] != 1)
      throw ValidationError("prediction outside {0,1} at index " + std::to_string(i));
    if (Y[i] != 0 && Y[i] != 1)
      throw ValidationError("label outside {0,1} at index " + std::to_string(i));
    if (Z[i] != 0 && Z[i] != 1)
      throw ValidationError("group outside {0,1} at index " + std::to_string(i));
    CellCounts& c = Z[i] == 1 ? r.counts_g1 : r.counts_g0;
    if (Y[i] == 1)
      preds[i] == 1 ? ++c.tp : ++c.fn;
    else
      preds[i] == 1 ? ++c.fp : ++c.tn;
  }
  auto rate = [](long num, long den, const char* cell) {
    if (den == 0) throw DegenerateCellError(cell);
    return static_cast<double>(num) / static_cast<double>(den);
  };
  r.tpr_g1 = rate(r.counts_g1.tp, r.counts_g1.tp + r.counts_g1.fn, "Y=1, Z=1");
  r.fpr_g1 = rate(r.counts_g1.fp, r.counts_g1.fp + r.counts_g1.tn, "Y=0, Z=1");
  r.tpr_g0 = rate(r.counts_g0.tp, r.counts_g0.tp + r.counts_g0.fn, "Y=1, Z=0");
  r.fpr_g0 = rate(r.counts_g0.fp, r.counts_g0.fp + r.counts_g0.tn, "Y=0, Z=0");
  return r;
}

FairnessMetrics metrics_from_rates(const GroupRates& rates) {
  FairnessMetrics m;
  m.rates = rates;
  m.tpr_diff_abs = std::abs(rates.tpr_g1 - rates.tpr_g0);
  m.fpr_diff_abs = std::abs(rates.fpr_g1 - rates.fpr_g0);
  m.tpr_diff_sq = m.tpr_diff_abs * m.tpr_diff_abs;
  m.fpr_diff_sq = m.fpr_diff_abs * m.fpr_diff_abs;
  m.eod_sq = m.tpr_diff_sq + m.fpr_diff_sq;
  m.eod_reported = (m.tpr_diff_abs + m.fpr_diff_abs) / 2.0;
  const long tp = rates.counts_g1.tp + rates.counts_g0.tp;
  const long pos = tp + rates.counts_g1.fn + rates.counts_g0.fn;
  m.overall_tpr = static_cast<double>(tp) / static_cast<double>(pos);
  return m;
}

FairnessMetrics eod_squared(const std::vector<int>& preds, const std::vector<int>& Y,
                            const std::vector<int>& Z) {
  return metrics_from_rates(group_rates(preds, Y, Z));
}

double fairness_improvement(const Matrix& X, const std::vector<int>& Y,
                            const std::vector<int>& Z, const ModelWeights& model_perf,
                            const ModelWeights& model_fair) {
  const FairnessMetrics perf = eod_squared(classify(model_perf, X), Y, Z);
  const FairnessMetrics fair = eod_squared(classify(model_fair, X), Y, Z);
  return fair.eod_sq - perf.eod_sq;
}

}  // namespace fairshift
