#include "fairshift/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <iostream>
#include <thread>

#include "fairshift/errors.hpp"
#include "fairshift/roc.hpp"

namespace fairshift {

namespace {

constexpr std::uint64_t kFoldSeedTag = 1;
constexpr std::uint64_t kImportanceSeedTag = 2;

bool has_all_cells(const Dataset& d, std::span<const std::size_t> rows) {
  long count[2][2] = {{0, 0}, {0, 0}};
  for (std::size_t i : rows) ++count[d.labels[i]][d.group[i]];
  return count[0][0] > 0 && count[0][1] > 0 && count[1][0] > 0 && count[1][1] > 0;
}

MetricsRow evaluate(const ModelWeights& model, const Dataset& test) {
  MetricsRow row;
  const std::vector<double> probs = predict_proba(model, test.features);
  row.auc = auc(roc_curve(probs, test.labels));
  const std::vector<int> preds = classify(model, test.features);
  row.acc = accuracy(preds, test.labels);
  const FairnessMetrics m = eod_squared(preds, test.labels, test.group);
  row.tpr_diff_abs = m.tpr_diff_abs;
  row.fpr_diff_abs = m.fpr_diff_abs;
  row.eod_sq = m.eod_sq;
  row.eod_reported = m.eod_reported;
  row.overall_tpr = m.overall_tpr;
  return row;
}

FoldResult run_fold(const Dataset& d, const ExperimentConfig& cfg,
                    std::uint64_t master_seed, const FoldAssignment& folds, int fold) {
  const auto [train_idx, test_idx] = fold_split(folds, fold);
  const Dataset train_raw = d.select_rows(train_idx);
  const Dataset test_raw = d.select_rows(test_idx);

  // Everything fitted below this line sees training rows only.
  auto [train, scaler] = standardize(train_raw);
  const Dataset test = apply_scaler(test_raw, scaler);

  ModelWeights perf = train_performance_model(train, cfg.train);
  perf.threshold = er_threshold(roc_curve(predict_proba(perf, train.features),
                                          train.labels));
  const TransferResult transfer = train_fair_model(train, perf, cfg.fair);

  FoldResult result;
  result.fold = fold;
  result.scaler = std::move(scaler);
  result.tpr_anchor = transfer.tpr_anchor;
  result.transfer_epochs = transfer.epochs_run;
  result.transfer_converged = transfer.converged;
  result.transfer_improving = transfer.improving;
  result.delta = transfer.delta;

  result.perf = evaluate(perf, test);
  result.fair = evaluate(transfer.fair, test);
  result.fairness_improvement =
      fairness_improvement(test.features, test.labels, test.group, perf, transfer.fair);
  result.importance = fairness_importance(
      test.features, test.labels, test.group, perf, transfer.fair, cfg.repetitions,
      derive_seed(master_seed, kImportanceSeedTag, static_cast<std::uint64_t>(fold)));

  result.perf_model = std::move(perf);
  result.fair_model = transfer.fair;
  return result;
}

struct Accumulator {
  double sum = 0.0;
  std::vector<double> values;
  void add(double v) {
    sum += v;
    values.push_back(v);
  }
  double mean() const { return sum / static_cast<double>(values.size()); }
  double std() const {
    if (values.size() < 2) return 0.0;
    const double m = mean();
    double ss = 0.0;
    for (double v : values) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
};

void aggregate_metrics(const std::vector<const MetricsRow*>& rows, MetricsRow* mean,
                       MetricsRow* std) {
  auto collect = [&](auto member) {
    Accumulator acc;
    for (const MetricsRow* r : rows) acc.add(r->*member);
    return acc;
  };
  const auto members = {&MetricsRow::auc, &MetricsRow::acc, &MetricsRow::tpr_diff_abs,
                        &MetricsRow::fpr_diff_abs, &MetricsRow::eod_sq,
                        &MetricsRow::eod_reported, &MetricsRow::overall_tpr};
  for (auto member : members) {
    const Accumulator acc = collect(member);
    mean->*member = acc.mean();
    std->*member = acc.std();
  }
}

}  // namespace

int thread_cap() {
  const char* env = std::getenv("FAIRSHIFT_THREADS");
  if (!env) return 0;
  const int v = std::atoi(env);
  return v > 0 ? v : 0;
}

ExperimentReport run_experiment(const Dataset& d, const ExperimentConfig& cfg,
                                std::uint64_t master_seed,
                                const std::optional<FoldAssignment>& fold_override) {
  d.validate();
  if (cfg.folds < 2) throw ValidationError("experiment needs at least 2 folds");
  if (cfg.repetitions < 1) throw ValidationError("repetitions must be at least 1");

  const FoldAssignment folds =
      fold_override ? *fold_override
                    : stratified_kfold(d, cfg.folds, derive_seed(master_seed, kFoldSeedTag));
  if (folds.k != cfg.folds || folds.fold_ids.size() != d.n_rows())
    throw ValidationError("fold assignment does not match the dataset");

  ExperimentReport report;
  report.requested_folds = cfg.folds;
  report.repetitions = cfg.repetitions;
  report.master_seed = master_seed;

  // A fold whose held-out split misses a (label, group) cell cannot be scored.
  std::vector<int> active;
  for (int f = 0; f < cfg.folds; ++f) {
    const auto [train_idx, test_idx] = fold_split(folds, f);
    if (has_all_cells(d, test_idx)) {
      active.push_back(f);
    } else {
      report.skipped_folds.push_back(f);
    }
  }
  if (report.skipped_folds.size() > 1)
    throw ValidationError(std::to_string(report.skipped_folds.size()) +
                          " folds have empty (label, group) cells");
  for (int f : report.skipped_folds)
    std::cerr << "warning: skipping fold " << f
              << " (held-out split misses a label/group cell)\n";

  // Folds are independent; results land in their own slots, so the report is
  // identical no matter how many workers run.
  std::vector<FoldResult> results(active.size());
  std::vector<std::exception_ptr> errors(active.size());
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  int workers = thread_cap();
  if (workers == 0) workers = hw > 0 ? hw : 1;
  workers = std::min<int>(workers, static_cast<int>(active.size()));

  std::atomic<std::size_t> next{0};
  auto body = [&]() {
    while (true) {
      const std::size_t slot = next.fetch_add(1);
      if (slot >= active.size()) return;
      try {
        results[slot] = run_fold(d, cfg, master_seed, folds, active[slot]);
      } catch (...) {
        errors[slot] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < workers; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  report.folds = std::move(results);

  // Aggregates over the scored folds.
  Aggregate& agg = report.aggregate;
  std::vector<const MetricsRow*> perf_rows, fair_rows;
  Accumulator improvement;
  for (const FoldResult& fr : report.folds) {
    perf_rows.push_back(&fr.perf);
    fair_rows.push_back(&fr.fair);
    improvement.add(fr.fairness_improvement);
  }
  aggregate_metrics(perf_rows, &agg.perf_mean, &agg.perf_std);
  aggregate_metrics(fair_rows, &agg.fair_mean, &agg.fair_std);
  agg.improvement_mean = improvement.mean();
  agg.improvement_std = improvement.std();

  const std::size_t m = d.n_features();
  for (std::size_t j = 0; j < m; ++j) {
    Accumulator acc;
    for (const FoldResult& fr : report.folds) acc.add(fr.importance.features[j].delta_mean);
    agg.importance.push_back({d.feature_names[j], acc.mean(), acc.std(), 0});
  }
  {
    std::vector<std::size_t> order(m);
    for (std::size_t j = 0; j < m; ++j) order[j] = j;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return std::abs(agg.importance[a].delta_mean) > std::abs(agg.importance[b].delta_mean);
    });
    for (std::size_t r = 0; r < m; ++r)
      agg.importance[order[r]].rank = static_cast<int>(r) + 1;
  }

  // Coefficient deltas averaged over folds, in feature order, then re-sorted.
  {
    Accumulator intercept;
    std::vector<Accumulator> perf_acc(m), fair_acc(m);
    for (const FoldResult& fr : report.folds) {
      intercept.add(fr.delta.intercept_delta);
      for (const auto& entry : fr.delta.entries) {
        const auto it = std::find(d.feature_names.begin(), d.feature_names.end(),
                                  entry.name);
        const std::size_t j = static_cast<std::size_t>(it - d.feature_names.begin());
        perf_acc[j].add(entry.theta_perf);
        fair_acc[j].add(entry.theta_fair);
      }
    }
    agg.delta.intercept_delta = intercept.mean();
    for (std::size_t j = 0; j < m; ++j) {
      const double p = perf_acc[j].mean(), f = fair_acc[j].mean();
      agg.delta.entries.push_back({d.feature_names[j], p, f, f - p});
    }
    std::stable_sort(agg.delta.entries.begin(), agg.delta.entries.end(),
                     [](const CoefficientDelta::Entry& a, const CoefficientDelta::Entry& b) {
                       return std::abs(a.delta) > std::abs(b.delta);
                     });
  }
  return report;
}

}  // namespace fairshift
