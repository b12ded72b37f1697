#include "fairshift/logistic.hpp"

#include <algorithm>
#include <cmath>

#include "fairshift/descent.hpp"
#include "fairshift/errors.hpp"

namespace fairshift {

namespace {
constexpr double kProbClamp = 1e-12;   // floor for the loss logs
constexpr double kProbFloor = 1e-15;   // keeps predictions strictly inside (0, 1)

void check_dims(const ModelWeights& w, const Matrix& X) {
  if (w.coefficients.size() != X.cols())
    throw ValidationError("model has " + std::to_string(w.coefficients.size()) +
                          " coefficients but matrix has " + std::to_string(X.cols()) +
                          " columns");
  if (!X.all_finite()) throw ValidationError("feature matrix contains non-finite values");
}
}  // namespace

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void ModelWeights::validate() const {
  if (coefficients.empty()) throw ValidationError("model has no coefficients");
  if (!feature_names.empty() && feature_names.size() != coefficients.size())
    throw ValidationError("feature_names length does not match coefficients");
  for (double c : coefficients)
    if (!std::isfinite(c)) throw ValidationError("non-finite coefficient");
  if (!std::isfinite(intercept)) throw ValidationError("non-finite intercept");
  if (threshold && !(*threshold >= 0.0 && *threshold <= 1.0))
    throw ValidationError("threshold outside [0,1]");
}

std::vector<double> margins(const ModelWeights& w, const Matrix& X) {
  check_dims(w, X);
  std::vector<double> out(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) {
    double z = w.intercept;
    const auto row = X.row(i);
    for (std::size_t j = 0; j < X.cols(); ++j) z += w.coefficients[j] * row[j];
    out[i] = z;
  }
  return out;
}

std::vector<double> predict_proba(const ModelWeights& w, const Matrix& X) {
  std::vector<double> p = margins(w, X);
  for (double& v : p) v = std::clamp(sigmoid(v), kProbFloor, 1.0 - kProbFloor);
  return p;
}

double bce_loss(const ModelWeights& w, const Matrix& X, const std::vector<int>& Y,
                double l2_penalty) {
  if (Y.size() != X.rows()) throw ValidationError("labels length does not match rows");
  if (Y.empty()) throw ValidationError("loss needs at least one row");
  const std::vector<double> probs = predict_proba(w, X);
  double loss = 0.0;
  for (std::size_t i = 0; i < Y.size(); ++i) {
    const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
    loss -= Y[i] == 1 ? std::log(p) : std::log(1.0 - p);
  }
  loss /= static_cast<double>(Y.size());
  for (double c : w.coefficients) loss += l2_penalty * c * c;
  return loss;
}

double Gradient::inf_norm() const {
  double norm = std::abs(intercept);
  for (double c : coefficients) norm = std::max(norm, std::abs(c));
  return norm;
}

Gradient bce_gradient(const ModelWeights& w, const Matrix& X, const std::vector<int>& Y,
                      double l2_penalty) {
  if (Y.size() != X.rows()) throw ValidationError("labels length does not match rows");
  if (Y.empty()) throw ValidationError("gradient needs at least one row");
  const std::vector<double> probs = predict_proba(w, X);
  Gradient g;
  g.coefficients.assign(X.cols(), 0.0);
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double r = probs[i] - static_cast<double>(Y[i]);
    const auto row = X.row(i);
    for (std::size_t j = 0; j < X.cols(); ++j) g.coefficients[j] += r * row[j];
    g.intercept += r;
  }
  const double inv_n = 1.0 / static_cast<double>(Y.size());
  for (std::size_t j = 0; j < X.cols(); ++j)
    g.coefficients[j] = g.coefficients[j] * inv_n + 2.0 * l2_penalty * w.coefficients[j];
  g.intercept *= inv_n;
  return g;
}

ModelWeights train_performance_model(const Dataset& d, const TrainConfig& cfg,
                                     TrainInfo* info) {
  d.validate();
  bool has_pos = false, has_neg = false;
  for (int y : d.labels) (y == 1 ? has_pos : has_neg) = true;
  if (!has_pos || !has_neg)
    throw ValidationError("training labels contain a single class");
  if (!(cfg.learning_rate > 0.0)) throw ValidationError("learning_rate must be positive");
  if (cfg.max_epochs < 1) throw ValidationError("max_epochs must be at least 1");
  if (!(cfg.grad_tolerance > 0.0)) throw ValidationError("grad_tolerance must be positive");
  if (cfg.l2_penalty < 0.0) throw ValidationError("l2_penalty must be non-negative");

  ModelWeights w;
  w.coefficients.assign(d.n_features(), 0.0);
  w.intercept = 0.0;
  w.feature_names = d.feature_names;

  ModelWeights scratch = w;
  auto objective = [&](const std::vector<double>& coef, double intercept, Gradient& g) {
    scratch.coefficients = coef;
    scratch.intercept = intercept;
    g = bce_gradient(scratch, d.features, d.labels, cfg.l2_penalty);
    return bce_loss(scratch, d.features, d.labels, cfg.l2_penalty);
  };
  const DescentInfo descent = minimize(w.coefficients, w.intercept, objective,
                                       cfg.learning_rate, cfg.max_epochs,
                                       cfg.grad_tolerance);
  if (info) {
    info->epochs_run = descent.epochs_run;
    info->converged = descent.converged;
    info->initial_loss = descent.initial_loss;
    info->final_loss = descent.final_loss;
  }
  return w;
}

std::vector<int> classify(const ModelWeights& w, const Matrix& X) {
  if (!w.threshold) throw ValidationError("model threshold is unset");
  const std::vector<double> probs = predict_proba(w, X);
  std::vector<int> preds(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i)
    preds[i] = probs[i] >= *w.threshold ? 1 : 0;
  return preds;
}

double accuracy(const std::vector<int>& preds, const std::vector<int>& Y) {
  if (preds.size() != Y.size() || preds.empty())
    throw ValidationError("accuracy needs equal-length, non-empty inputs");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == Y[i];
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

}  // namespace fairshift
