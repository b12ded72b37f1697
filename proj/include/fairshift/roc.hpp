#pragma once

#include <vector>

namespace fairshift {

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  double threshold = 0.0;
};

// Receiver operating characteristic at the "predict positive when p >= t" rule.
// The first point is (0, 0) at an unattainable threshold (+infinity); there is
// one point per distinct predicted probability (ties collapse), thresholds
// strictly decreasing; the last point is (1, 1) at the minimum probability.
struct RocCurve {
  std::vector<RocPoint> points;
};

// Requires both classes present and probs/labels of equal nonzero length.
RocCurve roc_curve(const std::vector<double>& probs, const std::vector<int>& labels);

// Trapezoidal area; equals the Mann-Whitney statistic with ties counted half.
double auc(const RocCurve& curve);

// Threshold of the curve point closest to the ideal (fpr, tpr) = (0, 1) in
// Euclidean distance; ties broken by higher tpr, then by lower threshold. The
// returned value is always one of the realizable candidate thresholds.
double er_threshold(const RocCurve& curve);

}  // namespace fairshift
