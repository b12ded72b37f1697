#include "fairshift/roc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fairshift/errors.hpp"

namespace fairshift {

RocCurve roc_curve(const std::vector<double>& probs, const std::vector<int>& labels) {
  if (probs.size() != labels.size() || probs.empty())
    throw ValidationError("roc_curve needs equal-length, non-empty inputs");
  long p_total = 0, n_total = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw ValidationError("label outside {0,1} at index " + std::to_string(i));
    if (!std::isfinite(probs[i]))
      throw ValidationError("non-finite probability at index " + std::to_string(i));
    labels[i] == 1 ? ++p_total : ++n_total;
  }
  if (p_total == 0 || n_total == 0)
    throw ValidationError("roc_curve requires both classes present");

  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });

  RocCurve curve;
  curve.points.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
  long tp = 0, fp = 0;
  std::size_t i = 0;
  // One point per distinct probability: at threshold t every sample with
  // p >= t is predicted positive, so ties join the same point.
  while (i < order.size()) {
    const double t = probs[order[i]];
    while (i < order.size() && probs[order[i]] == t) {
      labels[order[i]] == 1 ? ++tp : ++fp;
      ++i;
    }
    curve.points.push_back({static_cast<double>(fp) / static_cast<double>(n_total),
                            static_cast<double>(tp) / static_cast<double>(p_total), t});
  }
  return curve;
}

double auc(const RocCurve& curve) {
  if (curve.points.size() < 2) throw ValidationError("degenerate roc curve");
  double area = 0.0;
  for (std::size_t i = 1; i < curve.points.size(); ++i) {
    const RocPoint& a = curve.points[i - 1];
    const RocPoint& b = curve.points[i];
    area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
  }
  return area;
}

double er_threshold(const RocCurve& curve) {
  if (curve.points.empty()) throw ValidationError("empty roc curve");
  // Squared distance to the ideal corner (0, 1); monotone in the distance, so
  // comparisons are exact.
  auto dist2 = [](const RocPoint& p) {
    return p.fpr * p.fpr + (1.0 - p.tpr) * (1.0 - p.tpr);
  };
  const RocPoint* best = &curve.points.front();
  double best_d = dist2(*best);
  for (const RocPoint& p : curve.points) {
    const double d = dist2(p);
    const bool better =
        d < best_d || (d == best_d && (p.tpr > best->tpr ||
                                       (p.tpr == best->tpr && p.threshold < best->threshold)));
    if (better) {
      best = &p;
      best_d = d;
    }
  }
  if (!std::isfinite(best->threshold))
    throw ValidationError("no realizable threshold on the roc curve");
  return best->threshold;
}

}  // namespace fairshift
