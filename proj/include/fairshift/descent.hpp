#pragma once

#include <cmath>
#include <vector>

#include "fairshift/errors.hpp"
#include "fairshift/logistic.hpp"

namespace fairshift {

struct DescentInfo {
  int epochs_run = 0;
  bool converged = false;
  double initial_loss = 0.0;
  double final_loss = 0.0;
};

// Full-batch steepest descent with step halving: whenever a step would produce
// a larger (or non-finite) loss the step size is halved and the step retried,
// so the loss trace is non-increasing for any positive initial step. Objective:
// double obj(coef, intercept, Gradient& out). Deterministic; no randomness.
template <typename Objective>
DescentInfo minimize(std::vector<double>& coef, double& intercept, Objective&& obj,
                     double learning_rate, int max_epochs, double grad_tolerance) {
  DescentInfo info;
  Gradient grad;
  double loss = obj(coef, intercept, grad);
  if (!std::isfinite(loss) || !std::isfinite(grad.inf_norm())) throw DivergenceError(0);
  info.initial_loss = loss;
  info.final_loss = loss;

  double step = learning_rate;
  std::vector<double> cand_coef(coef.size());
  Gradient cand_grad;
  for (int epoch = 1; epoch <= max_epochs; ++epoch) {
    if (grad.inf_norm() < grad_tolerance) {
      info.converged = true;
      break;
    }
    bool stalled = false;
    double cand_intercept = 0.0, cand_loss = 0.0;
    while (true) {
      for (std::size_t j = 0; j < coef.size(); ++j)
        cand_coef[j] = coef[j] - step * grad.coefficients[j];
      cand_intercept = intercept - step * grad.intercept;
      cand_loss = obj(cand_coef, cand_intercept, cand_grad);
      if (std::isfinite(cand_loss) && cand_loss <= loss) break;
      step *= 0.5;
      if (step < 1e-300) {
        if (!std::isfinite(cand_loss)) throw DivergenceError(epoch);
        stalled = true;  // no decrease possible at any step size
        break;
      }
    }
    if (stalled) break;
    coef = cand_coef;
    intercept = cand_intercept;
    loss = cand_loss;
    grad = cand_grad;
    info.epochs_run = epoch;
    info.final_loss = loss;
    if (!std::isfinite(grad.inf_norm())) throw DivergenceError(epoch);
  }
  if (!info.converged) info.converged = grad.inf_norm() < grad_tolerance;
  return info;
}

}  // namespace fairshift
