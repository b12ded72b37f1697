#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include <fairshift/errors.hpp>
#include <fairshift/preprocess.hpp>
#include <fairshift/rng.hpp>
#include <fairshift/roc.hpp>
#include <fairshift/synthgen.hpp>
#include <fairshift/transfer.hpp>

#include "oracles.hpp"

using namespace fairshift;

namespace {

ModelWeights thresholded_model(std::vector<double> coef, double intercept,
                               double threshold) {
  ModelWeights m;
  m.coefficients = std::move(coef);
  m.intercept = intercept;
  m.threshold = threshold;
  m.feature_names.resize(m.coefficients.size());
  for (std::size_t j = 0; j < m.coefficients.size(); ++j)
    m.feature_names[j] = "f" + std::to_string(j);
  return m;
}

// Eight rows on one feature covering every (label, group) cell, with margins
// bounded away from the decision point.
struct SharpCase {
  Matrix X{8, 1};
  std::vector<int> Y = {1, 1, 1, 0, 1, 0, 1, 0};
  std::vector<int> Z = {1, 0, 1, 0, 1, 0, 0, 1};
  ModelWeights model = thresholded_model({1.0}, 0.0, 0.5);
  SharpCase() {
    const std::vector<double> xs = {2.0, 1.0, -1.0, -2.0, 1.5, -1.5, 0.8, -0.8};
    for (int i = 0; i < 8; ++i) X(i, 0) = xs[i];
  }
};

Dataset standardized_cohort(const CohortSpec& spec) {
  const Dataset raw = generate_synthetic(spec);
  return standardize(raw).first;
}

ModelWeights trained_donor(const Dataset& d) {
  TrainConfig cfg;
  ModelWeights m = train_performance_model(d, cfg);
  m.threshold = er_threshold(roc_curve(predict_proba(m, d.features), d.labels));
  return m;
}

}  // namespace

TEST_CASE("warm start copies the donor and stays isolated from it") {
  ModelWeights perf = thresholded_model({0.4, -1.25}, 0.3, 0.62);
  ModelWeights fair = init_fair_from(perf);
  CHECK(fair.coefficients == perf.coefficients);
  CHECK(fair.intercept == perf.intercept);
  CHECK(fair.threshold == perf.threshold);
  CHECK(fair.feature_names == perf.feature_names);

  fair.coefficients[0] = 99.0;
  fair.intercept = -5.0;
  CHECK(perf.coefficients[0] == 0.4);
  CHECK(perf.intercept == 0.3);

  ModelWeights unthresholded = perf;
  unthresholded.threshold.reset();
  CHECK_THROWS_AS(init_fair_from(unthresholded), ValidationError);
}

TEST_CASE("transfer configuration rejects out-of-range settings") {
  const FairTransferConfig good;
  good.validate();

  FairTransferConfig c = good;
  c.epsilon = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.surrogate_temperature = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.penalty_weight = -1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.learning_rate = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.max_epochs = -1;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = good;
  c.grad_tolerance = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("group-mirrored data sits at the exact zero of the surrogate") {
  // Every group-1 row has a group-0 twin with the same feature value and
  // label, so the per-group soft rates are identical sums in identical order.
  Matrix X(8, 1);
  const std::vector<double> xs = {1.7, 1.7, -0.9, -0.9, 0.4, 0.4, -2.2, -2.2};
  const std::vector<int> Y = {1, 1, 0, 0, 1, 1, 0, 0};
  const std::vector<int> Z = {1, 0, 1, 0, 1, 0, 1, 0};
  for (int i = 0; i < 8; ++i) X(i, 0) = xs[i];
  const ModelWeights w = thresholded_model({1.0}, 0.1, 0.5);

  FairTransferConfig cfg;
  const SoftFairLoss probe = soft_fair_loss(w, X, Y, Z, 0.5, cfg);
  const SoftFairLoss at_anchor = soft_fair_loss(w, X, Y, Z, probe.soft_tpr, cfg);
  CHECK(at_anchor.eod_term == 0.0);
  CHECK(at_anchor.omega_term == 0.0);
  CHECK(at_anchor.loss == 0.0);
  CHECK(at_anchor.gradient.intercept == 0.0);
  for (double g : at_anchor.gradient.coefficients) CHECK(g == 0.0);

  // The absolute-difference variant agrees at the zero.
  cfg.eod_variant = EodVariant::mean_abs;
  CHECK(soft_fair_loss(w, X, Y, Z, probe.soft_tpr, cfg).loss == 0.0);
}

TEST_CASE("band penalty follows the squared hinge exactly") {
  const SharpCase sc;
  FairTransferConfig cfg;
  cfg.epsilon = 0.05;
  cfg.penalty_weight = 7.0;

  const double tpr = soft_fair_loss(sc.model, sc.X, sc.Y, sc.Z, 0.0, cfg).soft_tpr;

  // Anchor safely inside the band: the hinge contributes exactly zero.
  const SoftFairLoss at_edge =
      soft_fair_loss(sc.model, sc.X, sc.Y, sc.Z, tpr + cfg.epsilon / 2.0, cfg);
  CHECK(at_edge.omega_term == 0.0);

  // Pushing the anchor 0.01 past the band charges weight * excess^2.
  const SoftFairLoss outside =
      soft_fair_loss(sc.model, sc.X, sc.Y, sc.Z, tpr + cfg.epsilon + 0.01, cfg);
  CHECK(outside.omega_term ==
        doctest::Approx(cfg.penalty_weight * 1e-4).epsilon(1e-6));
  CHECK(outside.loss - at_edge.loss ==
        doctest::Approx(cfg.penalty_weight * 1e-4).epsilon(1e-6));
  CHECK(outside.eod_term == at_edge.eod_term);
}

TEST_CASE("surrogate gradient matches central finite differences") {
  Rng rng(5150);
  double worst = 0.0;
  for (int trial = 0; trial < 60; ++trial) {
    const int n = 8 + static_cast<int>(rng.uniform_below(23));
    const int m = 1 + static_cast<int>(rng.uniform_below(3));
    Matrix X(n, m);
    std::vector<int> Y(n), Z(n);
    for (int i = 0; i < n; ++i) {
      Y[i] = (i < 4) ? i / 2 : (rng.bernoulli(0.5) ? 1 : 0);
      Z[i] = (i < 4) ? i % 2 : (rng.bernoulli(0.5) ? 1 : 0);
      for (int j = 0; j < m; ++j) X(i, j) = rng.normal(0.0, 1.2);
    }
    ModelWeights w = thresholded_model({}, rng.normal(0.0, 0.4), 0.45);
    w.coefficients.resize(m);
    w.feature_names.resize(m);
    for (int j = 0; j < m; ++j) {
      w.coefficients[j] = rng.normal(0.0, 0.8);
      w.feature_names[j] = "f" + std::to_string(j);
    }

    FairTransferConfig cfg;
    cfg.surrogate_temperature = 0.1;
    if (trial % 3 == 2) cfg.eod_variant = EodVariant::mean_abs;

    // Alternate between an inactive band penalty and one solidly engaged,
    // keeping the hinge kink far from the differencing stencil.
    const double tpr = soft_fair_loss(w, X, Y, Z, 0.0, cfg).soft_tpr;
    const double anchor = (trial % 2 == 0) ? tpr : tpr + 0.2;

    const SoftFairLoss sl = soft_fair_loss(w, X, Y, Z, anchor, cfg);

    const auto f = [&](const std::vector<double>& coef, double intercept) {
      ModelWeights probe = w;
      probe.coefficients = coef;
      probe.intercept = intercept;
      return soft_fair_loss(probe, X, Y, Z, anchor, cfg).loss;
    };
    const Gradient ref = oracle::fd_gradient(f, w.coefficients, w.intercept);
    worst = std::max(worst, oracle::max_rel_err(sl.gradient, ref));
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("soft sensitivity sharpens to the hard rate as tau shrinks") {
  const SharpCase sc;
  // Hard preds: x >= 0, so positives {2, -1, 1.5, 0.8, 1} catch 4 of 5.
  const std::vector<int> preds = classify(sc.model, sc.X);
  long tp = 0, pos = 0;
  for (int i = 0; i < 8; ++i) {
    if (sc.Y[i] == 1) {
      ++pos;
      tp += preds[i];
    }
  }
  const double hard_tpr = static_cast<double>(tp) / static_cast<double>(pos);
  CHECK(hard_tpr == 0.8);

  FairTransferConfig cfg;
  std::vector<double> gaps;
  for (double tau : {0.2, 0.05, 0.005}) {
    cfg.surrogate_temperature = tau;
    const SoftFairLoss sl = soft_fair_loss(sc.model, sc.X, sc.Y, sc.Z, 0.8, cfg);
    gaps.push_back(std::fabs(sl.soft_tpr - hard_tpr));
  }
  CHECK(gaps[0] > gaps[1]);
  CHECK(gaps[1] > gaps[2]);
  CHECK(gaps[2] < 1e-6);
}

TEST_CASE("surrogate is invariant to relabeling the groups") {
  const SharpCase sc;
  std::vector<int> flipped(sc.Z.size());
  for (std::size_t i = 0; i < sc.Z.size(); ++i) flipped[i] = 1 - sc.Z[i];

  for (EodVariant v : {EodVariant::squared_sum, EodVariant::mean_abs}) {
    FairTransferConfig cfg;
    cfg.eod_variant = v;
    const SoftFairLoss a = soft_fair_loss(sc.model, sc.X, sc.Y, sc.Z, 0.7, cfg);
    const SoftFairLoss b = soft_fair_loss(sc.model, sc.X, sc.Y, flipped, 0.7, cfg);
    CHECK(a.loss == b.loss);
    CHECK(a.eod_term == b.eod_term);
    CHECK(a.soft_tpr == b.soft_tpr);
  }
}

TEST_CASE("empty conditioning cells stop the surrogate") {
  const SharpCase sc;
  FairTransferConfig cfg;
  const std::vector<int> all_one(8, 1);
  CHECK_THROWS_AS(soft_fair_loss(sc.model, sc.X, sc.Y, all_one, 0.5, cfg),
                  DegenerateCellError);
}

TEST_CASE("transfer reduces disparity inside the sensitivity band") {
  const Dataset d = standardized_cohort(biased_cohort_spec(2000, 7));
  const ModelWeights perf = trained_donor(d);

  FairTransferConfig cfg;
  const TransferResult r = train_fair_model(d, perf, cfg);

  CHECK(r.improving);
  CHECK(r.fair_metrics.eod_sq < r.perf_metrics.eod_sq);
  CHECK(std::fabs(r.fair_metrics.overall_tpr - r.tpr_anchor) <=
        cfg.epsilon + kTprSlack);
  CHECK(r.tpr_anchor == r.perf_metrics.overall_tpr);
  CHECK(r.epochs_run >= 1);
  CHECK(r.fair.threshold.has_value());

  // The donor is left untouched.
  CHECK(perf.threshold.has_value());
  CHECK(r.delta.entries.size() == perf.coefficients.size());
}

TEST_CASE("zero-epoch transfer returns the donor operating point") {
  const Dataset d = standardized_cohort(biased_cohort_spec(1200, 11));
  const ModelWeights perf = trained_donor(d);

  FairTransferConfig cfg;
  cfg.max_epochs = 0;
  const TransferResult r = train_fair_model(d, perf, cfg);

  CHECK(r.fair.coefficients == perf.coefficients);
  CHECK(r.fair.intercept == perf.intercept);
  // Unchanged scores sweep out the same curve, so the re-selected threshold
  // lands exactly where the donor's did.
  CHECK(r.fair.threshold == perf.threshold);
  CHECK(r.epochs_run == 0);
  CHECK_FALSE(r.converged);
  CHECK(r.improving);
  CHECK(r.delta.intercept_delta == 0.0);
  for (const auto& e : r.delta.entries) CHECK(e.delta == 0.0);
  CHECK(r.fair_metrics.eod_sq == r.perf_metrics.eod_sq);
}

TEST_CASE("a relaxed band lets long training equalize the rates") {
  const Dataset d = standardized_cohort(biased_cohort_spec(2000, 7));
  const ModelWeights perf = trained_donor(d);

  FairTransferConfig cfg;
  cfg.epsilon = 10.0;  // band never binds
  cfg.max_epochs = 600;
  const TransferResult r = train_fair_model(d, perf, cfg);
  CHECK(r.fair_metrics.eod_sq <= 0.01);
}

TEST_CASE("absolute-difference variant drives its own summary down") {
  // The variant trades TPR band adherence for disparity more aggressively than
  // the squared form, so `improving` is not guaranteed on every cohort; what
  // is guaranteed is that the summary falls and that the flag is exactly the
  // conjunction of the summary and band conditions.
  for (const std::uint64_t seed : {7ull, 11ull, 19ull}) {
    const Dataset d = standardized_cohort(biased_cohort_spec(2000, seed));
    const ModelWeights perf = trained_donor(d);

    FairTransferConfig cfg;
    cfg.eod_variant = EodVariant::mean_abs;
    const TransferResult r = train_fair_model(d, perf, cfg);
    CHECK(r.fair_metrics.eod_reported <= r.perf_metrics.eod_reported);
    const bool band_ok =
        std::fabs(r.fair_metrics.overall_tpr - r.tpr_anchor) <=
        cfg.epsilon + kTprSlack;
    const bool summary_ok =
        r.fair_metrics.eod_reported <= r.perf_metrics.eod_reported;
    CHECK(r.improving == (band_ok && summary_ok));
    if (seed == 11) CHECK(r.improving);  // an in-band improving instance exists
  }
}

TEST_CASE("already-fair cohorts pass through without damage") {
  const Dataset d = standardized_cohort(fair_cohort_spec(2000, 23));
  const ModelWeights perf = trained_donor(d);
  const TransferResult r = train_fair_model(d, perf, FairTransferConfig{});
  CHECK(r.improving);
}

TEST_CASE("coefficient shifts are tabulated and ranked by magnitude") {
  ModelWeights perf = thresholded_model({1.0, 2.0}, 0.25, 0.5);
  perf.feature_names = {"a", "b"};
  ModelWeights fair = thresholded_model({1.0, -1.0}, 0.75, 0.4);
  fair.feature_names = {"a", "b"};

  const CoefficientDelta cd = coefficient_delta(perf, fair);
  REQUIRE(cd.entries.size() == 2);
  CHECK(cd.entries[0].name == "b");
  CHECK(cd.entries[0].theta_perf == 2.0);
  CHECK(cd.entries[0].theta_fair == -1.0);
  CHECK(cd.entries[0].delta == -3.0);
  CHECK(cd.entries[1].name == "a");
  CHECK(cd.entries[1].delta == 0.0);
  CHECK(cd.intercept_delta == 0.5);

  const CoefficientDelta none = coefficient_delta(perf, perf);
  for (const auto& e : none.entries) CHECK(e.delta == 0.0);
  CHECK(none.intercept_delta == 0.0);

  ModelWeights renamed = fair;
  renamed.feature_names = {"a", "c"};
  CHECK_THROWS_AS(coefficient_delta(perf, renamed), ValidationError);
}

TEST_CASE("transfer requires matching feature names") {
  const Dataset d = standardized_cohort(biased_cohort_spec(600, 3));
  ModelWeights perf = trained_donor(d);
  perf.feature_names[0] = "not_a_column";
  CHECK_THROWS_AS(train_fair_model(d, perf, FairTransferConfig{}),
                  ValidationError);
}
