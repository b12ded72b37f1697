#include "fairshift/transfer.hpp"

#include <algorithm>
#include <cmath>

#include "fairshift/descent.hpp"
#include "fairshift/errors.hpp"
#include "fairshift/roc.hpp"

namespace fairshift {

void FairTransferConfig::validate() const {
  if (!(epsilon > 0.0)) throw ValidationError("epsilon must be positive");
  if (!(surrogate_temperature > 0.0))
    throw ValidationError("surrogate_temperature must be positive");
  if (!(penalty_weight > 0.0)) throw ValidationError("penalty_weight must be positive");
  if (!(learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (max_epochs < 0) throw ValidationError("max_epochs must be non-negative");
  if (!(grad_tolerance > 0.0)) throw ValidationError("grad_tolerance must be positive");
}

ModelWeights init_fair_from(const ModelWeights& perf) {
  perf.validate();
  if (!perf.threshold)
    throw ValidationError("cannot initialize from an unthresholded model");
  return perf;  // value copy: coefficients, intercept, threshold, names
}

SoftFairLoss soft_fair_loss(const ModelWeights& w, const Matrix& X,
                            const std::vector<int>& Y, const std::vector<int>& Z,
                            double tpr_anchor, const FairTransferConfig& cfg) {
  cfg.validate();
  if (!w.threshold) throw ValidationError("soft fair loss needs the model threshold");
  const std::size_t n = X.rows();
  if (Y.size() != n || Z.size() != n || n == 0)
    throw ValidationError("soft_fair_loss needs equal-length, non-empty inputs");

  const double t = *w.threshold;
  const double tau = cfg.surrogate_temperature;
  const std::vector<double> probs = predict_proba(w, X);

  // Soft decisions and (label, group) cell means.
  std::vector<double> soft(n);
  double sum_cell[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  long count_cell[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i = 0; i < n; ++i) {
    soft[i] = sigmoid((probs[i] - t) / tau);
    sum_cell[Y[i]][Z[i]] += soft[i];
    ++count_cell[Y[i]][Z[i]];
  }
  for (int y = 0; y < 2; ++y)
    for (int z = 0; z < 2; ++z)
      if (count_cell[y][z] == 0)
        throw DegenerateCellError("Y=" + std::to_string(y) + ", Z=" + std::to_string(z));

  double mean_cell[2][2];
  for (int y = 0; y < 2; ++y)
    for (int z = 0; z < 2; ++z)
      mean_cell[y][z] = sum_cell[y][z] / static_cast<double>(count_cell[y][z]);

  const double tpr_diff = mean_cell[1][1] - mean_cell[1][0];
  const double fpr_diff = mean_cell[0][1] - mean_cell[0][0];

  const long n_pos = count_cell[1][0] + count_cell[1][1];
  const double soft_tpr = (sum_cell[1][0] + sum_cell[1][1]) / static_cast<double>(n_pos);

  SoftFairLoss out;
  out.soft_tpr = soft_tpr;

  // d(eod term)/d(cell mean); sign convention: +diff for group 1, -diff for 0.
  double dE_dmean[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  if (cfg.eod_variant == EodVariant::squared_sum) {
    out.eod_term = tpr_diff * tpr_diff + fpr_diff * fpr_diff;
    dE_dmean[1][1] = 2.0 * tpr_diff;
    dE_dmean[1][0] = -2.0 * tpr_diff;
    dE_dmean[0][1] = 2.0 * fpr_diff;
    dE_dmean[0][0] = -2.0 * fpr_diff;
  } else {
    out.eod_term = (std::abs(tpr_diff) + std::abs(fpr_diff)) / 2.0;
    auto sgn = [](double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); };
    dE_dmean[1][1] = sgn(tpr_diff) / 2.0;
    dE_dmean[1][0] = -sgn(tpr_diff) / 2.0;
    dE_dmean[0][1] = sgn(fpr_diff) / 2.0;
    dE_dmean[0][0] = -sgn(fpr_diff) / 2.0;
  }

  // Squared hinge keeping the overall soft TPR inside the anchor band.
  const double v = soft_tpr - tpr_anchor;
  const double excess = std::abs(v) - cfg.epsilon;
  double dpen_dsoft_tpr = 0.0;
  if (excess > 0.0) {
    out.omega_term = cfg.penalty_weight * excess * excess;
    dpen_dsoft_tpr = 2.0 * cfg.penalty_weight * excess * (v > 0.0 ? 1.0 : -1.0);
  }
  out.loss = out.eod_term + out.omega_term;

  // Chain rule: ds_i/dmargin_i = s(1-s)/tau * p(1-p).
  out.gradient.coefficients.assign(X.cols(), 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double a = dE_dmean[Y[i]][Z[i]] / static_cast<double>(count_cell[Y[i]][Z[i]]);
    if (Y[i] == 1) a += dpen_dsoft_tpr / static_cast<double>(n_pos);
    if (a == 0.0) continue;
    const double chain =
        a * soft[i] * (1.0 - soft[i]) / tau * probs[i] * (1.0 - probs[i]);
    const auto row = X.row(i);
    for (std::size_t j = 0; j < X.cols(); ++j)
      out.gradient.coefficients[j] += chain * row[j];
    out.gradient.intercept += chain;
  }
  return out;
}

CoefficientDelta coefficient_delta(const ModelWeights& perf, const ModelWeights& fair) {
  if (perf.coefficients.size() != fair.coefficients.size())
    throw ValidationError("models have different coefficient counts");
  if (perf.feature_names != fair.feature_names)
    throw ValidationError("models have different feature names");
  CoefficientDelta delta;
  delta.intercept_delta = fair.intercept - perf.intercept;
  for (std::size_t j = 0; j < perf.coefficients.size(); ++j) {
    const std::string name = perf.feature_names.empty()
                                 ? "feature_" + std::to_string(j)
                                 : perf.feature_names[j];
    delta.entries.push_back({name, perf.coefficients[j], fair.coefficients[j],
                             fair.coefficients[j] - perf.coefficients[j]});
  }
  std::stable_sort(delta.entries.begin(), delta.entries.end(),
                   [](const CoefficientDelta::Entry& a, const CoefficientDelta::Entry& b) {
                     return std::abs(a.delta) > std::abs(b.delta);
                   });
  return delta;
}

TransferResult train_fair_model(const Dataset& d, const ModelWeights& perf,
                                const FairTransferConfig& cfg) {
  d.validate();
  cfg.validate();
  if (!perf.feature_names.empty() && perf.feature_names != d.feature_names)
    throw ValidationError("model features do not match dataset features");

  TransferResult result;
  result.perf_metrics = eod_squared(classify(perf, d.features), d.labels, d.group);
  // Anchor frozen before any fair training: the donor model's hard overall TPR.
  result.tpr_anchor = result.perf_metrics.overall_tpr;

  ModelWeights fair = init_fair_from(perf);
  ModelWeights scratch = fair;
  auto objective = [&](const std::vector<double>& coef, double intercept, Gradient& g) {
    scratch.coefficients = coef;
    scratch.intercept = intercept;
    SoftFairLoss l =
        soft_fair_loss(scratch, d.features, d.labels, d.group, result.tpr_anchor, cfg);
    g = std::move(l.gradient);
    return l.loss;
  };
  if (cfg.max_epochs > 0) {
    const DescentInfo descent = minimize(fair.coefficients, fair.intercept, objective,
                                         cfg.learning_rate, cfg.max_epochs,
                                         cfg.grad_tolerance);
    result.epochs_run = descent.epochs_run;
    result.converged = descent.converged;
  }

  // Fresh operating point for the transferred model, selected on training data.
  const std::vector<double> probs = predict_proba(fair, d.features);
  fair.threshold = er_threshold(roc_curve(probs, d.labels));

  result.fair_metrics = eod_squared(classify(fair, d.features), d.labels, d.group);
  const auto summary = [&](const FairnessMetrics& m) {
    return cfg.eod_variant == EodVariant::squared_sum ? m.eod_sq : m.eod_reported;
  };
  const bool eod_ok = summary(result.fair_metrics) <= summary(result.perf_metrics);
  const bool tpr_ok = std::abs(result.fair_metrics.overall_tpr - result.tpr_anchor) <=
                      cfg.epsilon + kTprSlack;
  result.improving = eod_ok && tpr_ok;
  result.delta = coefficient_delta(perf, fair);
  result.fair = std::move(fair);
  return result;
}

}  // namespace fairshift
