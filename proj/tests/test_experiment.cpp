#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <fairshift/errors.hpp>
#include <fairshift/experiment.hpp>
#include <fairshift/serialize.hpp>
#include <fairshift/synthgen.hpp>

#include "oracles.hpp"

using namespace fairshift;

namespace {

ExperimentConfig quick_config(int folds, int repetitions) {
  ExperimentConfig cfg;
  cfg.folds = folds;
  cfg.repetitions = repetitions;
  return cfg;
}

std::string report_fingerprint(const ExperimentReport& report,
                               const ExperimentConfig& cfg) {
  RunManifest manifest;
  manifest.command = "test";
  manifest.master_seed = report.master_seed;
  manifest.timestamp = std::nullopt;
  return experiment_report_to_json(report, cfg, manifest).dump();
}

// Eight rows, two informative columns, every (label, group) cell twice; the
// halves swap train/test roles under a two-fold assignment.
struct HandExperiment {
  Dataset d;
  FoldAssignment folds;
  HandExperiment() {
    d.features = Matrix(8, 2);
    const double c0[] = {2.1, 1.4, -0.9, -1.7, 1.9, 0.8, -1.2, -2.3};
    const double c1[] = {0.3, -0.6, 1.1, -1.4, 0.9, -0.2, 0.5, -1.0};
    for (int i = 0; i < 8; ++i) {
      d.features(i, 0) = c0[i];
      d.features(i, 1) = c1[i];
    }
    d.labels = {1, 1, 0, 0, 1, 1, 0, 0};
    d.group = {1, 0, 1, 0, 1, 0, 1, 0};
    d.feature_names = {"signal", "context"};
    d.binary_features = {false, false};
    folds.fold_ids = {0, 0, 0, 0, 1, 1, 1, 1};
    folds.k = 2;
  }
};

struct EnvGuard {
  std::string name;
  std::optional<std::string> saved;
  explicit EnvGuard(const char* n) : name(n) {
    const char* v = std::getenv(n);
    if (v) saved = v;
  }
  ~EnvGuard() {
    if (saved)
      setenv(name.c_str(), saved->c_str(), 1);
    else
      unsetenv(name.c_str());
  }
};

}  // namespace

TEST_CASE("experiment reports replay byte-for-byte") {
  const Dataset d = generate_synthetic(biased_cohort_spec(1200, 3));
  const ExperimentConfig cfg = quick_config(5, 5);
  const ExperimentReport a = run_experiment(d, cfg, 42);
  const ExperimentReport b = run_experiment(d, cfg, 42);
  CHECK(report_fingerprint(a, cfg) == report_fingerprint(b, cfg));

  const ExperimentReport c = run_experiment(d, cfg, 43);
  CHECK(report_fingerprint(a, cfg) != report_fingerprint(c, cfg));
}

TEST_CASE("worker count never leaks into the results") {
  EnvGuard guard("FAIRSHIFT_THREADS");
  const Dataset d = generate_synthetic(biased_cohort_spec(900, 8));
  const ExperimentConfig cfg = quick_config(4, 3);

  unsetenv("FAIRSHIFT_THREADS");
  const std::string base = report_fingerprint(run_experiment(d, cfg, 7), cfg);
  setenv("FAIRSHIFT_THREADS", "1", 1);
  CHECK(report_fingerprint(run_experiment(d, cfg, 7), cfg) == base);
  setenv("FAIRSHIFT_THREADS", "4", 1);
  CHECK(report_fingerprint(run_experiment(d, cfg, 7), cfg) == base);
}

TEST_CASE("thread cap parses the environment defensively") {
  EnvGuard guard("FAIRSHIFT_THREADS");
  unsetenv("FAIRSHIFT_THREADS");
  CHECK(thread_cap() == 0);
  setenv("FAIRSHIFT_THREADS", "3", 1);
  CHECK(thread_cap() == 3);
  setenv("FAIRSHIFT_THREADS", "-2", 1);
  CHECK(thread_cap() == 0);
  setenv("FAIRSHIFT_THREADS", "garbage", 1);
  CHECK(thread_cap() == 0);
}

TEST_CASE("aggregates are the arithmetic summaries of the fold rows") {
  const Dataset d = generate_synthetic(mediated_cohort_spec(1000, 21));
  const ExperimentConfig cfg = quick_config(4, 4);
  const ExperimentReport report = run_experiment(d, cfg, 99);
  REQUIRE(report.skipped_folds.empty());
  const std::size_t k = report.folds.size();
  REQUIRE(k == 4);

  // Per-metric means and sample stds, accumulated in fold order.
  auto check_member = [&](auto member, bool fair_side) {
    double sum = 0.0;
    std::vector<double> vals;
    for (const FoldResult& fr : report.folds) {
      const MetricsRow& row = fair_side ? fr.fair : fr.perf;
      sum += row.*member;
      vals.push_back(row.*member);
    }
    const double mean = sum / static_cast<double>(k);
    double ss = 0.0;
    for (double v : vals) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(k - 1));
    const MetricsRow& mrow =
        fair_side ? report.aggregate.fair_mean : report.aggregate.perf_mean;
    const MetricsRow& srow =
        fair_side ? report.aggregate.fair_std : report.aggregate.perf_std;
    CHECK(mrow.*member == mean);
    CHECK(srow.*member == sd);
  };
  for (bool fair_side : {false, true}) {
    check_member(&MetricsRow::auc, fair_side);
    check_member(&MetricsRow::acc, fair_side);
    check_member(&MetricsRow::tpr_diff_abs, fair_side);
    check_member(&MetricsRow::fpr_diff_abs, fair_side);
    check_member(&MetricsRow::eod_sq, fair_side);
    check_member(&MetricsRow::eod_reported, fair_side);
    check_member(&MetricsRow::overall_tpr, fair_side);
  }

  double isum = 0.0;
  for (const FoldResult& fr : report.folds) isum += fr.fairness_improvement;
  CHECK(report.aggregate.improvement_mean == isum / static_cast<double>(k));

  // Feature contribution summary: mean over folds per feature, ranked by
  // magnitude with ties keeping feature order.
  const std::size_t m = d.n_features();
  REQUIRE(report.aggregate.importance.size() == m);
  std::vector<double> means(m);
  for (std::size_t j = 0; j < m; ++j) {
    double sum = 0.0;
    for (const FoldResult& fr : report.folds)
      sum += fr.importance.features[j].delta_mean;
    means[j] = sum / static_cast<double>(k);
    CHECK(report.aggregate.importance[j].name == d.feature_names[j]);
    CHECK(report.aggregate.importance[j].delta_mean == means[j]);
  }
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      if (report.aggregate.importance[a].rank < report.aggregate.importance[b].rank)
        CHECK(std::fabs(means[a]) >= std::fabs(means[b]));

  // Coefficient shifts: delta is the difference of the per-side means.
  for (const auto& entry : report.aggregate.delta.entries)
    CHECK(entry.delta == entry.theta_fair - entry.theta_perf);
}

TEST_CASE("held-out rows cannot influence the fitted fold artifacts") {
  const Dataset base = generate_synthetic(mediated_cohort_spec(400, 6));
  FoldAssignment assignment;
  assignment.k = 2;
  assignment.fold_ids.resize(base.n_rows());
  for (std::size_t i = 0; i < base.n_rows(); ++i)
    assignment.fold_ids[i] = static_cast<int>(i % 2);

  // Flip two held-out labels of fold 0 (one per class), leaving every cell of
  // both test splits occupied.
  Dataset mutated = base;
  int flipped_pos = 0, flipped_neg = 0;
  for (std::size_t i = 0; i < base.n_rows(); ++i) {
    if (assignment.fold_ids[i] != 0) continue;
    if (!flipped_pos && base.labels[i] == 1 && base.group[i] == 1) {
      mutated.labels[i] = 0;
      flipped_pos = 1;
    } else if (!flipped_neg && base.labels[i] == 0 && base.group[i] == 0) {
      mutated.labels[i] = 1;
      flipped_neg = 1;
    }
  }
  REQUIRE(flipped_pos == 1);
  REQUIRE(flipped_neg == 1);

  const ExperimentConfig cfg = quick_config(2, 2);
  const ExperimentReport before = run_experiment(base, cfg, 11, assignment);
  const ExperimentReport after = run_experiment(mutated, cfg, 11, assignment);
  REQUIRE(before.folds.size() == 2);
  REQUIRE(after.folds.size() == 2);

  // Fold 0 trains on fold-1 rows, which were untouched: every fitted artifact
  // must be bitwise identical.
  const FoldResult& fa = before.folds[0];
  const FoldResult& fb = after.folds[0];
  CHECK(fa.scaler.means == fb.scaler.means);
  CHECK(fa.scaler.stddevs == fb.scaler.stddevs);
  CHECK(fa.perf_model.coefficients == fb.perf_model.coefficients);
  CHECK(fa.perf_model.intercept == fb.perf_model.intercept);
  CHECK(fa.perf_model.threshold == fb.perf_model.threshold);
  CHECK(fa.fair_model.coefficients == fb.fair_model.coefficients);
  CHECK(fa.fair_model.intercept == fb.fair_model.intercept);
  CHECK(fa.fair_model.threshold == fb.fair_model.threshold);
  CHECK(fa.tpr_anchor == fb.tpr_anchor);

  // Fold 1 trains on the mutated rows, so its fit genuinely moved.
  CHECK(before.folds[1].perf_model.coefficients !=
        after.folds[1].perf_model.coefficients);

  // The held-out metrics of fold 0 did change (the labels it scores against
  // are different), which is what makes the artifact stability meaningful.
  // One flip can gain a correct prediction while the other loses one, so no
  // single field is guaranteed to move; some field of the row must be.
  const bool scored_moved = fa.perf.acc != fb.perf.acc ||
                            fa.perf.overall_tpr != fb.perf.overall_tpr ||
                            fa.perf.eod_sq != fb.perf.eod_sq ||
                            fa.perf.tpr_diff_abs != fb.perf.tpr_diff_abs ||
                            fa.perf.fpr_diff_abs != fb.perf.fpr_diff_abs;
  CHECK(scored_moved);
}

TEST_CASE("a test split missing a cell is skipped, two are fatal") {
  // Twelve rows in three folds; fold 0's quarter holds only group-1 rows.
  Dataset d;
  d.features = Matrix(12, 1);
  const double xs[] = {1.9, -0.3, 0.7, -1.1, 2.2, 1.0,
                       -0.8, -2.0, 1.6, 0.4, -0.5, -1.6};
  for (int i = 0; i < 12; ++i) d.features(i, 0) = xs[i];
  d.labels = {1, 1, 0, 0, 1, 1, 0, 0, 1, 1, 0, 0};
  d.group = {1, 1, 1, 1, 1, 0, 1, 0, 1, 0, 1, 0};
  d.feature_names = {"x"};
  d.binary_features = {false};

  FoldAssignment folds;
  folds.k = 3;
  folds.fold_ids = {0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2};

  const ExperimentConfig cfg = quick_config(3, 2);
  const ExperimentReport report = run_experiment(d, cfg, 1, folds);
  CHECK(report.skipped_folds == std::vector<int>{0});
  REQUIRE(report.folds.size() == 2);
  CHECK(report.folds[0].fold == 1);
  CHECK(report.folds[1].fold == 2);

  // Make fold 1's quarter single-group as well: two unscorable folds abort.
  Dataset worse = d;
  worse.group = {1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 1, 0};
  CHECK_THROWS_AS(run_experiment(worse, cfg, 1, folds), ValidationError);
}

TEST_CASE("configuration and fold assignments are validated") {
  const HandExperiment h;
  CHECK_THROWS_AS(run_experiment(h.d, quick_config(1, 2), 5), ValidationError);
  CHECK_THROWS_AS(run_experiment(h.d, quick_config(2, 0), 5), ValidationError);

  FoldAssignment wrong_k = h.folds;
  wrong_k.k = 3;
  CHECK_THROWS_AS(run_experiment(h.d, quick_config(2, 2), 5, wrong_k),
                  ValidationError);
  FoldAssignment wrong_size = h.folds;
  wrong_size.fold_ids.pop_back();
  CHECK_THROWS_AS(run_experiment(h.d, quick_config(2, 2), 5, wrong_size),
                  ValidationError);
}

TEST_CASE("one fold retraces step by step from public pieces") {
  const HandExperiment h;
  const ExperimentConfig cfg = quick_config(2, 3);
  const std::uint64_t master = 555;
  const ExperimentReport report = run_experiment(h.d, cfg, master, h.folds);
  REQUIRE(report.folds.size() == 2);

  for (int fold = 0; fold < 2; ++fold) {
    const FoldResult& fr = report.folds[fold];
    CHECK(fr.fold == fold);

    const auto [train_idx, test_idx] = fold_split(h.folds, fold);
    const Dataset train_raw = h.d.select_rows(train_idx);
    const Dataset test_raw = h.d.select_rows(test_idx);
    const auto [train, scaler] = standardize(train_raw);
    const Dataset test = apply_scaler(test_raw, scaler);

    CHECK(fr.scaler.means == scaler.means);
    CHECK(fr.scaler.stddevs == scaler.stddevs);

    ModelWeights perf = train_performance_model(train, cfg.train);
    perf.threshold = er_threshold(
        roc_curve(predict_proba(perf, train.features), train.labels));
    CHECK(fr.perf_model.coefficients == perf.coefficients);
    CHECK(fr.perf_model.intercept == perf.intercept);
    CHECK(fr.perf_model.threshold == perf.threshold);

    const TransferResult transfer = train_fair_model(train, perf, cfg.fair);
    CHECK(fr.fair_model.coefficients == transfer.fair.coefficients);
    CHECK(fr.fair_model.intercept == transfer.fair.intercept);
    CHECK(fr.fair_model.threshold == transfer.fair.threshold);
    CHECK(fr.tpr_anchor == transfer.tpr_anchor);
    CHECK(fr.transfer_epochs == transfer.epochs_run);
    CHECK(fr.transfer_improving == transfer.improving);

    // Held-out metrics, rebuilt the same way.
    const std::vector<double> probs = predict_proba(perf, test.features);
    CHECK(fr.perf.auc == auc(roc_curve(probs, test.labels)));
    CHECK(std::fabs(fr.perf.auc -
                    oracle::pairwise_auc(probs, test.labels)) <= 1e-12);
    const std::vector<int> preds = classify(perf, test.features);
    CHECK(fr.perf.acc == accuracy(preds, test.labels));
    const FairnessMetrics m = eod_squared(preds, test.labels, test.group);
    CHECK(fr.perf.eod_sq == m.eod_sq);
    CHECK(fr.perf.eod_reported == m.eod_reported);
    CHECK(fr.perf.overall_tpr == m.overall_tpr);

    CHECK(fr.fairness_improvement ==
          fairness_improvement(test.features, test.labels, test.group, perf,
                               transfer.fair));

    // Contribution scores were drawn from the (master, 2, fold) stream.
    const ImportanceReport expected = fairness_importance(
        test.features, test.labels, test.group, perf, transfer.fair,
        cfg.repetitions,
        derive_seed(master, 2, static_cast<std::uint64_t>(fold)));
    REQUIRE(fr.importance.features.size() == expected.features.size());
    CHECK(fr.importance.baseline == expected.baseline);
    for (std::size_t j = 0; j < expected.features.size(); ++j) {
      CHECK(fr.importance.features[j].delta_samples ==
            expected.features[j].delta_samples);
      CHECK(fr.importance.features[j].rank == expected.features[j].rank);
    }
  }
}
