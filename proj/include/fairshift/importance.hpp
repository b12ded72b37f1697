#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairshift/fairness.hpp"
#include "fairshift/rng.hpp"

namespace fairshift {

// Copy of X with one column shuffled in place by Fisher-Yates draws from rng;
// the input matrix is untouched.
Matrix permute_column(const Matrix& X, std::size_t column, Rng& rng);

struct ImportanceReport {
  struct Feature {
    std::string name;
    double delta_mean = 0.0;
    double delta_std = 0.0;             // sample std of the repetition values
    std::vector<double> delta_samples;  // one per kept repetition
    std::size_t excluded = 0;           // repetitions dropped as degenerate
    int rank = 0;                       // 1 = most important
  };
  std::vector<Feature> features;
  int repetitions = 0;
  std::uint64_t master_seed = 0;
  double baseline = 0.0;  // score of the unpermuted matrix
};

// Permutation-based fairness contribution: delta_i is the mean over J
// repetitions of the fairness improvement evaluated with column i shuffled,
// using a fresh stream derived from (master_seed, i, j) per repetition so
// results are independent of execution order. The group vector Z is never
// permuted, even when the group attribute also appears as a feature column.
// Ranking is by |delta| descending. Repetitions that hit a degenerate group
// cell are excluded with a warning when they are under 5% of the total and
// raise an error otherwise.
ImportanceReport fairness_importance(const Matrix& X, const std::vector<int>& Y,
                                     const std::vector<int>& Z,
                                     const ModelWeights& model_perf,
                                     const ModelWeights& model_fair, int repetitions,
                                     std::uint64_t master_seed);

enum class PredictiveMetric { auc, acc };

// Classic permutation importance: mean drop of the metric (AUC on
// probabilities, or accuracy at the model threshold) when column i is shuffled.
// Ranking is by delta descending.
ImportanceReport predictive_importance(const Matrix& X, const std::vector<int>& Y,
                                       const ModelWeights& model, PredictiveMetric metric,
                                       int repetitions, std::uint64_t master_seed);

struct ShapReport {
  Matrix values;  // n x m attributions on the margin (log-odds) scale
  double base_value = 0.0;
  std::vector<double> mean_abs;  // per-feature mean |attribution|
  std::vector<int> rank;         // by mean_abs descending
  std::vector<std::string> feature_names;
};

// Exact attributions for a linear model: shap[i][j] = theta_j * (x_ij -
// background_mean_j); base_value + row sum reproduces the margin exactly.
ShapReport linear_shap(const ModelWeights& model, const Matrix& X,
                       const Matrix& background);

}  // namespace fairshift
