#pragma once

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "fairshift/dataset.hpp"

namespace fairshift {

// Linear-interpolation quantile (the order statistic at position q * (n - 1)).
// Copies and sorts its input; q must lie in [0, 1].
double quantile(std::vector<double> values, double q);

struct FilterResult {
  Dataset dataset;
  std::size_t removed = 0;
};

// Keeps rows whose continuous features all lie inside [bounds_low[j],
// bounds_high[j]] (inclusive); binary columns are exempt. Applying the same
// bounds twice removes nothing on the second pass.
FilterResult filter_by_bounds(const Dataset& d, const std::vector<double>& bounds_low,
                              const std::vector<double>& bounds_high);

// Interpercentile filter: bounds are the [low, high] quantiles of each
// continuous column, computed over the whole input population. Requires
// 0 <= low < high <= 1; an empty result is an error.
FilterResult filter_interpercentile(const Dataset& d, double low, double high);

// Column means and sample standard deviations (n - 1 divisor) of the
// continuous columns; binary columns get identity parameters. Errors on zero
// variance or fewer than two rows.
ScalerParams fit_scaler(const Dataset& d);

Dataset apply_scaler(const Dataset& d, const ScalerParams& params);

// Fits on d when params is absent, otherwise applies the given (train-side)
// parameters. Returns the transformed dataset and the parameters used.
std::pair<Dataset, ScalerParams> standardize(
    const Dataset& d, const std::optional<ScalerParams>& params = std::nullopt);

// Deterministic stratified k-fold assignment: within each label class, rows are
// shuffled and dealt into k nearly equal chunks, so each fold's positive
// proportion is within one sample of the global proportion. Requires k >= 2 and
// at least k members of each class.
FoldAssignment stratified_kfold(const Dataset& d, int k, std::uint64_t seed);

// Row indices for (train, test) of one fold.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> fold_split(
    const FoldAssignment& folds, int fold);

}  // namespace fairshift
