#include "fairshift/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairshift/errors.hpp"
#include "fairshift/rng.hpp"

namespace fairshift {

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ValidationError("quantile of an empty sample");
  if (q < 0.0 || q > 1.0) throw ValidationError("quantile level outside [0,1]");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(pos);
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

FilterResult filter_by_bounds(const Dataset& d, const std::vector<double>& bounds_low,
                              const std::vector<double>& bounds_high) {
  d.validate();
  if (bounds_low.size() != d.n_features() || bounds_high.size() != d.n_features())
    throw ValidationError("bounds length does not match feature count");

  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    bool inside = true;
    for (std::size_t j = 0; j < d.n_features() && inside; ++j) {
      if (d.binary_features[j]) continue;
      const double v = d.features(i, j);
      inside = v >= bounds_low[j] && v <= bounds_high[j];
    }
    if (inside) keep.push_back(i);
  }
  if (keep.empty()) throw ValidationError("interpercentile filter removed every row");
  FilterResult result{d.select_rows(keep), d.n_rows() - keep.size()};
  return result;
}

FilterResult filter_interpercentile(const Dataset& d, double low, double high) {
  if (!(low >= 0.0 && low < high && high <= 1.0))
    throw ValidationError("invalid interpercentile band: requires 0 <= low < high <= 1");
  d.validate();
  std::vector<double> lo(d.n_features(), 0.0), hi(d.n_features(), 0.0);
  for (std::size_t j = 0; j < d.n_features(); ++j) {
    if (d.binary_features[j]) continue;
    std::vector<double> col = d.features.column(j);
    lo[j] = quantile(col, low);
    hi[j] = quantile(std::move(col), high);
  }
  return filter_by_bounds(d, lo, hi);
}

ScalerParams fit_scaler(const Dataset& d) {
  d.validate();
  const std::size_t n = d.n_rows(), m = d.n_features();
  if (n < 2) throw ValidationError("scaler needs at least two rows");
  ScalerParams params;
  params.means.assign(m, 0.0);
  params.stddevs.assign(m, 1.0);
  for (std::size_t j = 0; j < m; ++j) {
    if (d.binary_features[j]) continue;  // identity transform
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += d.features(i, j);
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double dev = d.features(i, j) - mean;
      ss += dev * dev;
    }
    const double var = ss / static_cast<double>(n - 1);  // sample variance
    if (var <= 0.0)
      throw ValidationError("zero variance in column '" + d.feature_names[j] + "'");
    params.means[j] = mean;
    params.stddevs[j] = std::sqrt(var);
  }
  return params;
}

Dataset apply_scaler(const Dataset& d, const ScalerParams& params) {
  d.validate();
  if (params.means.size() != d.n_features() || params.stddevs.size() != d.n_features())
    throw ValidationError("scaler length does not match feature count");
  for (double s : params.stddevs)
    if (!(s > 0.0)) throw ValidationError("scaler stddev must be positive");
  Dataset out = d;
  for (std::size_t j = 0; j < d.n_features(); ++j) {
    if (params.means[j] == 0.0 && params.stddevs[j] == 1.0) continue;
    for (std::size_t i = 0; i < d.n_rows(); ++i)
      out.features(i, j) = (d.features(i, j) - params.means[j]) / params.stddevs[j];
  }
  return out;
}

std::pair<Dataset, ScalerParams> standardize(const Dataset& d,
                                             const std::optional<ScalerParams>& params) {
  const ScalerParams fitted = params ? *params : fit_scaler(d);
  return {apply_scaler(d, fitted), fitted};
}

FoldAssignment stratified_kfold(const Dataset& d, int k, std::uint64_t seed) {
  d.validate();
  if (k < 2) throw ValidationError("stratified k-fold requires k >= 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < d.n_rows(); ++i)
    (d.labels[i] == 1 ? pos : neg).push_back(i);
  if (pos.size() < static_cast<std::size_t>(k))
    throw ValidationError("positive class has fewer than k members");
  if (neg.size() < static_cast<std::size_t>(k))
    throw ValidationError("negative class has fewer than k members");

  FoldAssignment assignment;
  assignment.k = k;
  assignment.fold_ids.assign(d.n_rows(), -1);
  Rng rng(derive_seed(seed, 0x5ca1ab1eull));
  // Shuffle each class, then slice it into k nearly equal contiguous chunks so
  // every fold's class mix is within one sample of the global mix.
  for (auto* cls : {&pos, &neg}) {
    rng.shuffle(*cls);
    const std::size_t n = cls->size();
    const std::size_t base = n / static_cast<std::size_t>(k);
    const std::size_t extra = n % static_cast<std::size_t>(k);
    std::size_t at = 0;
    for (int f = 0; f < k; ++f) {
      const std::size_t size = base + (static_cast<std::size_t>(f) < extra ? 1 : 0);
      for (std::size_t c = 0; c < size; ++c) assignment.fold_ids[(*cls)[at++]] = f;
    }
  }
  return assignment;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> fold_split(
    const FoldAssignment& folds, int fold) {
  if (fold < 0 || fold >= folds.k) throw ValidationError("fold index out of range");
  std::vector<std::size_t> train, test;
  for (std::size_t i = 0; i < folds.fold_ids.size(); ++i)
    (folds.fold_ids[i] == fold ? test : train).push_back(i);
  return {std::move(train), std::move(test)};
}

}  // namespace fairshift
