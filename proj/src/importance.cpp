#include "fairshift/importance.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <numeric>

#include "fairshift/errors.hpp"
#include "fairshift/roc.hpp"

namespace fairshift {

namespace {

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Ranks features 1..m by |key| (fairness) or key (predictive), descending;
// ties keep feature order.
void assign_ranks(ImportanceReport& report, bool by_magnitude) {
  std::vector<std::size_t> order(report.features.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ka = by_magnitude ? std::abs(report.features[a].delta_mean)
                                   : report.features[a].delta_mean;
    const double kb = by_magnitude ? std::abs(report.features[b].delta_mean)
                                   : report.features[b].delta_mean;
    return ka > kb;
  });
  for (std::size_t r = 0; r < order.size(); ++r)
    report.features[order[r]].rank = static_cast<int>(r) + 1;
}

std::vector<std::string> names_or_default(const ModelWeights& model, std::size_t m) {
  if (!model.feature_names.empty()) return model.feature_names;
  std::vector<std::string> names(m);
  for (std::size_t j = 0; j < m; ++j) names[j] = "feature_" + std::to_string(j);
  return names;
}

}  // namespace

Matrix permute_column(const Matrix& X, std::size_t column, Rng& rng) {
  if (column >= X.cols()) throw ValidationError("permute_column index out of range");
  Matrix out = X;
  const std::vector<double> original = X.column(column);
  const std::vector<std::size_t> perm = rng.permutation(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out(i, column) = original[perm[i]];
  return out;
}

ImportanceReport fairness_importance(const Matrix& X, const std::vector<int>& Y,
                                     const std::vector<int>& Z,
                                     const ModelWeights& model_perf,
                                     const ModelWeights& model_fair, int repetitions,
                                     std::uint64_t master_seed) {
  if (repetitions < 1) throw ValidationError("repetitions must be at least 1");
  ImportanceReport report;
  report.repetitions = repetitions;
  report.master_seed = master_seed;
  report.baseline = fairness_improvement(X, Y, Z, model_perf, model_fair);

  const std::vector<std::string> names = names_or_default(model_perf, X.cols());
  std::size_t excluded_total = 0;
  for (std::size_t j = 0; j < X.cols(); ++j) {
    ImportanceReport::Feature feature;
    feature.name = names[j];
    for (int rep = 0; rep < repetitions; ++rep) {
      // Stream keyed by (seed, feature, repetition): the draw is the same no
      // matter which order or thread evaluates it. Z itself is never permuted.
      Rng rng(derive_seed(master_seed, j, static_cast<std::uint64_t>(rep)));
      const Matrix permuted = permute_column(X, j, rng);
      try {
        feature.delta_samples.push_back(
            fairness_improvement(permuted, Y, Z, model_perf, model_fair));
      } catch (const DegenerateCellError&) {
        ++feature.excluded;
      }
    }
    excluded_total += feature.excluded;
    if (feature.delta_samples.empty())
      throw ValidationError("every repetition degenerate for feature " + feature.name);
    double sum = 0.0;
    for (double s : feature.delta_samples) sum += s;
    feature.delta_mean = sum / static_cast<double>(feature.delta_samples.size());
    feature.delta_std = sample_std(feature.delta_samples, feature.delta_mean);
    report.features.push_back(std::move(feature));
  }

  const std::size_t total = X.cols() * static_cast<std::size_t>(repetitions);
  if (excluded_total > 0) {
    if (static_cast<double>(excluded_total) >= 0.05 * static_cast<double>(total))
      throw ValidationError("degenerate group cells in " + std::to_string(excluded_total) +
                            " of " + std::to_string(total) + " repetitions");
    std::cerr << "warning: excluded " << excluded_total << " of " << total
              << " degenerate repetitions\n";
  }
  assign_ranks(report, /*by_magnitude=*/true);
  return report;
}

ImportanceReport predictive_importance(const Matrix& X, const std::vector<int>& Y,
                                       const ModelWeights& model, PredictiveMetric metric,
                                       int repetitions, std::uint64_t master_seed) {
  if (repetitions < 1) throw ValidationError("repetitions must be at least 1");
  auto score = [&](const Matrix& features) {
    if (metric == PredictiveMetric::auc)
      return auc(roc_curve(predict_proba(model, features), Y));
    return accuracy(classify(model, features), Y);
  };

  ImportanceReport report;
  report.repetitions = repetitions;
  report.master_seed = master_seed;
  report.baseline = score(X);

  const std::vector<std::string> names = names_or_default(model, X.cols());
  for (std::size_t j = 0; j < X.cols(); ++j) {
    ImportanceReport::Feature feature;
    feature.name = names[j];
    for (int rep = 0; rep < repetitions; ++rep) {
      Rng rng(derive_seed(master_seed, j, static_cast<std::uint64_t>(rep)));
      const Matrix permuted = permute_column(X, j, rng);
      feature.delta_samples.push_back(report.baseline - score(permuted));
    }
    double sum = 0.0;
    for (double s : feature.delta_samples) sum += s;
    feature.delta_mean = sum / static_cast<double>(feature.delta_samples.size());
    feature.delta_std = sample_std(feature.delta_samples, feature.delta_mean);
    report.features.push_back(std::move(feature));
  }
  assign_ranks(report, /*by_magnitude=*/false);
  return report;
}

ShapReport linear_shap(const ModelWeights& model, const Matrix& X,
                       const Matrix& background) {
  model.validate();
  if (model.coefficients.size() != X.cols() ||
      model.coefficients.size() != background.cols())
    throw ValidationError("shap: model and matrices disagree on feature count");
  if (background.rows() == 0) throw ValidationError("shap: empty background");
  if (X.rows() == 0) throw ValidationError("shap: empty feature matrix");
  if (!X.all_finite() || !background.all_finite())
    throw ValidationError("shap: non-finite feature values");

  const std::size_t m = X.cols();
  std::vector<double> bg_mean(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < background.rows(); ++i) sum += background(i, j);
    bg_mean[j] = sum / static_cast<double>(background.rows());
  }

  ShapReport report;
  report.feature_names = names_or_default(model, m);
  report.base_value = model.intercept;
  for (std::size_t j = 0; j < m; ++j)
    report.base_value += model.coefficients[j] * bg_mean[j];

  report.values = Matrix(X.rows(), m);
  report.mean_abs.assign(m, 0.0);
  for (std::size_t i = 0; i < X.rows(); ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double v = model.coefficients[j] * (X(i, j) - bg_mean[j]);
      report.values(i, j) = v;
      report.mean_abs[j] += std::abs(v);
    }
  for (std::size_t j = 0; j < m; ++j)
    report.mean_abs[j] /= static_cast<double>(X.rows());

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return report.mean_abs[a] > report.mean_abs[b];
  });
  report.rank.assign(m, 0);
  for (std::size_t r = 0; r < m; ++r) report.rank[order[r]] = static_cast<int>(r) + 1;
  return report;
}

}  // namespace fairshift
