#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "fairshift/dataset.hpp"

namespace fairshift {

enum class DistFamily { normal, bernoulli, uniform };

struct FeatureSpec {
  std::string name;
  DistFamily family = DistFamily::normal;
  double param_a = 0.0;  // mean | success probability | lower bound
  double param_b = 1.0;  // stddev | (unused) | upper bound
  double theta = 0.0;    // generating coefficient in the latent label model
  // Optional group-conditional shift of the distribution parameter (mean / p /
  // both bounds) for rows in shift_group. A bernoulli feature with p = 0 and a
  // +1 shift for group 1 reproduces the group indicator as a feature column.
  int shift_group = -1;  // -1 = no shift
  double shift_delta = 0.0;
};

struct LabelNoise {
  int group = 0;
  double flip_rate = 0.0;
};

struct FeatureShift {
  std::string feature;
  int group = 0;
  double delta = 0.0;
};

struct NoDisparity {};

// Disparity mechanism applied after labels are drawn: label_noise flips labels
// in one group; feature_shift offsets one observed feature column in one group
// (labels keep reflecting the unshifted values, so that feature mediates the
// resulting group disparity).
using Disparity = std::variant<NoDisparity, LabelNoise, FeatureShift>;

struct CohortSpec {
  std::size_t n = 0;
  std::vector<FeatureSpec> features;
  double intercept = 0.0;  // latent model bias
  Disparity disparity = NoDisparity{};
  double group_fraction = 0.166;  // fraction of rows in group 0 (the minority)
  std::uint64_t seed = 0;

  void validate() const;
};

// Draws the group indicator, features, and labels from the latent logistic
// model sigmoid(theta . x + intercept), then applies the disparity mechanism.
// Deterministic given spec.seed. Bernoulli features are marked binary.
Dataset generate_synthetic(const CohortSpec& spec);

// Ready-made cohorts used by the test suites and the CLI presets. All three
// share a clinical-style feature menu with the group indicator included as the
// "race" feature column.
CohortSpec biased_cohort_spec(std::size_t n, std::uint64_t seed);    // group-0 label noise
CohortSpec fair_cohort_spec(std::size_t n, std::uint64_t seed);      // no disparity
CohortSpec mediated_cohort_spec(std::size_t n, std::uint64_t seed);  // one feature carries
                                                                     // all disparity

}  // namespace fairshift
