#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "fairshift/matrix.hpp"

namespace fairshift {

// Canonical cohort: features X, outcome labels Y (1 = positive outcome), group
// indicator Z (1 = majority group, 0 = minority group). binary_features marks
// columns exempt from interpercentile filtering and standardization.
struct Dataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<int> group;
  std::vector<std::string> feature_names;
  std::vector<bool> binary_features;

  std::size_t n_rows() const { return features.rows(); }
  std::size_t n_features() const { return features.cols(); }

  // Throws ValidationError on any invariant breach: shape mismatches, empty
  // data, non-finite features, labels or group outside {0,1}, duplicate names.
  void validate() const;

  Dataset select_rows(std::span<const std::size_t> idx) const;
};

// Per-column affine transform fitted on training rows only. Pass-through
// (binary) columns carry mean 0 / stddev 1.
struct ScalerParams {
  std::vector<double> means;
  std::vector<double> stddevs;
};

struct FoldAssignment {
  std::vector<int> fold_ids;  // one per row, in [0, k)
  int k = 0;
};

}  // namespace fairshift
