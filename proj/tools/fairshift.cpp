// fairshift: train a performance-optimized tabular classifier, transfer it into
// an equalized-odds-optimized twin under a TPR band, and attribute the fairness
// gain to individual features by permutation.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fairshift/errors.hpp"
#include "fairshift/experiment.hpp"
#include "fairshift/importance.hpp"
#include "fairshift/roc.hpp"
#include "fairshift/serialize.hpp"
#include "fairshift/synthgen.hpp"

namespace fs = fairshift;
namespace stdfs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNonImproving = 3;

struct CommonArgs {
  std::string data_path;
  std::string schema_path;
  std::string config_path;
  std::uint64_t seed = 0;
};

fs::RunManifest make_manifest(const std::string& command, const CommonArgs& args,
                              const fs::json& effective_config,
                              const std::vector<std::string>& extra_inputs = {}) {
  fs::RunManifest manifest;
  manifest.command = command;
  manifest.master_seed = args.seed;
  manifest.config_hash = !args.config_path.empty()
                             ? fs::hash_file(args.config_path)
                             : fs::hash_bytes(effective_config.dump());
  if (!args.data_path.empty())
    manifest.input_hashes.emplace_back(args.data_path, fs::hash_file(args.data_path));
  if (!args.schema_path.empty())
    manifest.input_hashes.emplace_back(args.schema_path, fs::hash_file(args.schema_path));
  for (const auto& path : extra_inputs)
    manifest.input_hashes.emplace_back(path, fs::hash_file(path));
  return manifest;
}

fs::LoadResult load_data(const CommonArgs& args, const fs::ColumnSchema& schema) {
  fs::LoadResult loaded = fs::load_csv(args.data_path, schema);
  std::cout << "loaded " << loaded.dataset.n_rows() << " rows ("
            << loaded.dropped_missing << " dropped for missing values, "
            << loaded.rejected_race << " rejected for indefinite group)\n";
  return loaded;
}

int cmd_prepare(const CommonArgs& args, const std::string& out_path, double low,
                double high, bool no_filter) {
  const fs::ColumnSchema schema = fs::load_schema(args.schema_path);
  fs::LoadResult loaded = load_data(args, schema);
  fs::Dataset clean = std::move(loaded.dataset);
  if (!no_filter) {
    fs::FilterResult filtered = fs::filter_interpercentile(clean, low, high);
    std::cout << "interpercentile filter [" << low << ", " << high << "] removed "
              << filtered.removed << " rows\n";
    clean = std::move(filtered.dataset);
  }
  const fs::RunManifest manifest = make_manifest("prepare", args, fs::json::object());
  fs::write_cohort_csv(out_path, clean, schema, loaded.column_order,
                       manifest.comment_line());
  std::cout << "wrote " << clean.n_rows() << " rows to " << out_path << "\n";
  return kExitOk;
}

int cmd_synth(const CommonArgs& args, const std::string& preset,
              const std::string& spec_path, std::size_t n_override,
              const std::string& out_path, std::string schema_out) {
  fs::CohortSpec spec;
  if (!spec_path.empty()) {
    spec = fs::cohort_spec_from_json(fs::load_json(spec_path));
  } else if (preset == "biased") {
    spec = fs::biased_cohort_spec(10000, 0);
  } else if (preset == "fair") {
    spec = fs::fair_cohort_spec(10000, 0);
  } else if (preset == "mediated") {
    spec = fs::mediated_cohort_spec(6000, 0);
  } else {
    throw fs::ValidationError("unknown preset: " + preset);
  }
  if (n_override > 0) spec.n = n_override;
  spec.seed = args.seed;

  const fs::Dataset cohort = fs::generate_synthetic(spec);

  fs::ColumnSchema schema;
  schema.label = "outcome";
  schema.group = "group";
  schema.features = cohort.feature_names;
  for (std::size_t j = 0; j < cohort.feature_names.size(); ++j)
    if (cohort.binary_features[j]) schema.binary.push_back(cohort.feature_names[j]);

  std::vector<std::string> order = cohort.feature_names;
  order.push_back(schema.label);
  order.push_back(schema.group);

  CommonArgs manifest_args = args;
  manifest_args.config_path = spec_path;
  const fs::RunManifest manifest =
      make_manifest("synth", manifest_args, fs::cohort_spec_to_json(spec));
  fs::write_cohort_csv(out_path, cohort, schema, order, manifest.comment_line());

  if (schema_out.empty()) {
    stdfs::path p(out_path);
    p.replace_extension(".schema.json");
    schema_out = p.string();
  }
  fs::json schema_json = fs::schema_to_json(schema);
  schema_json["manifest"] = manifest.to_json();
  fs::write_text_file(schema_out, schema_json.dump(2) + "\n");

  long positives = 0, minority = 0;
  for (int y : cohort.labels) positives += y;
  for (int z : cohort.group) minority += z == 0;
  std::cout << "wrote " << cohort.n_rows() << " rows to " << out_path << " ("
            << positives << " positive, " << minority << " in group 0); schema in "
            << schema_out << "\n";
  return kExitOk;
}

int cmd_train(const CommonArgs& args, const std::string& out_path) {
  const fs::ColumnSchema schema = fs::load_schema(args.schema_path);
  fs::TrainConfig cfg;
  fs::json cfg_json = fs::json::object();
  if (!args.config_path.empty()) {
    cfg_json = fs::load_json(args.config_path);
    cfg = fs::train_config_from_json(cfg_json);
  }
  cfg.seed = args.seed;

  const fs::LoadResult loaded = load_data(args, schema);
  auto [train, scaler] = fs::standardize(loaded.dataset);

  fs::TrainInfo info;
  fs::ModelWeights model = fs::train_performance_model(train, cfg, &info);
  const fs::RocCurve curve =
      fs::roc_curve(fs::predict_proba(model, train.features), train.labels);
  model.threshold = fs::er_threshold(curve);

  fs::ModelArtifact artifact;
  artifact.weights = std::move(model);
  artifact.scaler = std::move(scaler);
  artifact.seed = args.seed;
  const fs::RunManifest manifest =
      make_manifest("train", args, fs::train_config_to_json(cfg));
  artifact.config_hash = manifest.config_hash;
  fs::write_text_file(out_path, fs::model_to_json(artifact, manifest).dump(2) + "\n");

  const auto preds = fs::classify(artifact.weights, train.features);
  std::cout << "trained in " << info.epochs_run << " epochs (converged="
            << (info.converged ? "yes" : "no") << ", loss " << info.initial_loss
            << " -> " << info.final_loss << ")\n"
            << "training auc " << fs::auc(curve) << ", acc "
            << fs::accuracy(preds, train.labels) << ", threshold "
            << *artifact.weights.threshold << "\n"
            << "wrote " << out_path << "\n";
  return kExitOk;
}

int cmd_transfer(const CommonArgs& args, const std::string& model_path,
                 const std::string& out_path, const std::string& deltas_path) {
  const fs::ColumnSchema schema = fs::load_schema(args.schema_path);
  fs::FairTransferConfig cfg;
  fs::json cfg_json = fs::json::object();
  if (!args.config_path.empty()) {
    cfg_json = fs::load_json(args.config_path);
    cfg = fs::fair_config_from_json(cfg_json);
  }
  cfg.seed = args.seed;

  const fs::ModelArtifact donor = fs::load_model(model_path);
  const fs::LoadResult loaded = load_data(args, schema);
  const fs::Dataset data = fs::apply_scaler(loaded.dataset, donor.scaler);

  const fs::TransferResult result = fs::train_fair_model(data, donor.weights, cfg);

  fs::ModelArtifact artifact;
  artifact.weights = result.fair;
  artifact.scaler = donor.scaler;
  artifact.seed = args.seed;
  artifact.transfer = fs::TransferBlock{cfg.epsilon,
                                        cfg.surrogate_temperature,
                                        cfg.penalty_weight,
                                        result.tpr_anchor,
                                        result.epochs_run,
                                        result.converged,
                                        result.improving};
  const fs::RunManifest manifest = make_manifest(
      "transfer", args, fs::fair_config_to_json(cfg), {model_path});
  artifact.config_hash = manifest.config_hash;
  fs::write_text_file(out_path, fs::model_to_json(artifact, manifest).dump(2) + "\n");

  if (!deltas_path.empty()) {
    std::ostringstream out;
    out << "# " << manifest.comment_line() << "\n";
    out << "feature,theta_perf,theta_fair,delta\n";
    for (const auto& e : result.delta.entries)
      out << e.name << ',' << fs::format_double(e.theta_perf) << ','
          << fs::format_double(e.theta_fair) << ',' << fs::format_double(e.delta)
          << "\n";
    out << "(intercept),,," << fs::format_double(result.delta.intercept_delta) << "\n";
    fs::write_text_file(deltas_path, out.str());
  }

  std::cout << "transfer ran " << result.epochs_run << " epochs (converged="
            << (result.converged ? "yes" : "no") << ")\n"
            << "training eod_sq " << result.perf_metrics.eod_sq << " -> "
            << result.fair_metrics.eod_sq << ", overall tpr "
            << result.perf_metrics.overall_tpr << " -> "
            << result.fair_metrics.overall_tpr << " (anchor band "
            << result.tpr_anchor << " +/- " << cfg.epsilon << ")\n"
            << "wrote " << out_path << "\n";
  if (!result.improving) {
    std::cerr << "non-improving transfer: disparity or TPR band check failed\n";
    return kExitNonImproving;
  }
  return kExitOk;
}

int cmd_audit(const CommonArgs& args, const std::string& model_path,
              const std::string& out_path, const std::string& roc_path) {
  const fs::ColumnSchema schema = fs::load_schema(args.schema_path);
  const fs::ModelArtifact artifact = fs::load_model(model_path);
  const fs::LoadResult loaded = load_data(args, schema);
  const fs::Dataset data = fs::apply_scaler(loaded.dataset, artifact.scaler);

  const fs::RocCurve curve =
      fs::roc_curve(fs::predict_proba(artifact.weights, data.features), data.labels);
  const std::vector<int> preds = fs::classify(artifact.weights, data.features);
  const fs::FairnessMetrics metrics = fs::eod_squared(preds, data.labels, data.group);

  const fs::RunManifest manifest =
      make_manifest("audit", args, fs::json::object(), {model_path});

  fs::json j;
  j["schema_version"] = fs::kSchemaVersion;
  j["manifest"] = manifest.to_json();
  j["auc"] = fs::auc(curve);
  j["acc"] = fs::accuracy(preds, data.labels);
  j["threshold"] = *artifact.weights.threshold;
  j["tpr_diff_abs"] = metrics.tpr_diff_abs;
  j["fpr_diff_abs"] = metrics.fpr_diff_abs;
  j["eod_sq"] = metrics.eod_sq;
  j["eod_reported"] = metrics.eod_reported;
  j["overall_tpr"] = metrics.overall_tpr;
  auto cell = [](const fs::CellCounts& c) {
    return fs::json{{"tp", c.tp}, {"fn", c.fn}, {"fp", c.fp}, {"tn", c.tn}};
  };
  j["rates"] = fs::json{{"tpr_g1", metrics.rates.tpr_g1},
                        {"fpr_g1", metrics.rates.fpr_g1},
                        {"tpr_g0", metrics.rates.tpr_g0},
                        {"fpr_g0", metrics.rates.fpr_g0},
                        {"counts_g1", cell(metrics.rates.counts_g1)},
                        {"counts_g0", cell(metrics.rates.counts_g0)}};
  fs::write_text_file(out_path, j.dump(2) + "\n");
  if (!roc_path.empty()) fs::write_roc_csv(roc_path, curve, manifest);

  std::cout << "auc " << j["auc"].get<double>() << ", acc " << j["acc"].get<double>()
            << ", eod_sq " << metrics.eod_sq << ", eod_reported "
            << metrics.eod_reported << "\n"
            << "wrote " << out_path << "\n";
  return kExitOk;
}

int cmd_importance(const CommonArgs& args, const std::string& mode,
                   const std::string& model_path, const std::string& model_fair_path,
                   const std::string& metric_name, int repetitions,
                   const std::string& out_path, const std::string& csv_path) {
  const fs::ColumnSchema schema = fs::load_schema(args.schema_path);
  const fs::LoadResult loaded = load_data(args, schema);

  std::vector<std::string> extra_inputs;
  fs::json j;
  j["schema_version"] = fs::kSchemaVersion;
  j["mode"] = mode;

  std::optional<fs::ImportanceReport> report;
  if (mode == "fairness") {
    if (model_path.empty() || model_fair_path.empty())
      throw fs::ValidationError("fairness mode needs --model-perf and --model-fair");
    extra_inputs = {model_path, model_fair_path};
    const fs::ModelArtifact perf = fs::load_model(model_path);
    const fs::ModelArtifact fair = fs::load_model(model_fair_path);
    const fs::Dataset data = fs::apply_scaler(loaded.dataset, perf.scaler);
    report = fs::fairness_importance(data.features, data.labels, data.group,
                                     perf.weights, fair.weights, repetitions, args.seed);
  } else if (mode == "predictive") {
    if (model_path.empty()) throw fs::ValidationError("predictive mode needs --model-perf");
    extra_inputs = {model_path};
    const fs::ModelArtifact artifact = fs::load_model(model_path);
    const fs::Dataset data = fs::apply_scaler(loaded.dataset, artifact.scaler);
    const fs::PredictiveMetric metric = metric_name == "acc"
                                            ? fs::PredictiveMetric::acc
                                            : fs::PredictiveMetric::auc;
    if (metric_name != "acc" && metric_name != "auc")
      throw fs::ValidationError("unknown metric: " + metric_name);
    report = fs::predictive_importance(data.features, data.labels, artifact.weights,
                                       metric, repetitions, args.seed);
  } else if (mode == "shap") {
    if (model_path.empty()) throw fs::ValidationError("shap mode needs --model-perf");
    extra_inputs = {model_path};
    const fs::ModelArtifact artifact = fs::load_model(model_path);
    const fs::Dataset data = fs::apply_scaler(loaded.dataset, artifact.scaler);
    const fs::ShapReport shap =
        fs::linear_shap(artifact.weights, data.features, data.features);
    j["base_value"] = shap.base_value;
    fs::json rows = fs::json::array();
    for (std::size_t f = 0; f < shap.feature_names.size(); ++f)
      rows.push_back(fs::json{{"name", shap.feature_names[f]},
                              {"mean_abs", shap.mean_abs[f]},
                              {"rank", shap.rank[f]}});
    j["features"] = rows;
  } else {
    throw fs::ValidationError("unknown mode: " + mode);
  }

  const fs::RunManifest manifest =
      make_manifest("importance", args, fs::json::object(), extra_inputs);
  j["manifest"] = manifest.to_json();
  if (report) j["report"] = fs::importance_to_json(*report);
  fs::write_text_file(out_path, j.dump(2) + "\n");
  if (!csv_path.empty() && report)
    fs::write_importance_report_csv(csv_path, *report, manifest);

  if (report) {
    const fs::ImportanceReport::Feature* top = nullptr;
    for (const auto& f : report->features)
      if (f.rank == 1) top = &f;
    std::cout << "baseline " << report->baseline << "; top feature: " << top->name
              << " (delta_mean " << top->delta_mean << ")\n";
  }
  std::cout << "wrote " << out_path << "\n";
  return kExitOk;
}

int cmd_experiment(const CommonArgs& args, const std::string& out_dir, int folds_flag,
                   int repetitions_flag) {
  const fs::ColumnSchema schema = fs::load_schema(args.schema_path);
  fs::ExperimentConfig cfg;
  if (!args.config_path.empty())
    cfg = fs::experiment_config_from_json(fs::load_json(args.config_path));
  if (folds_flag > 0) cfg.folds = folds_flag;
  if (repetitions_flag > 0) cfg.repetitions = repetitions_flag;
  cfg.train.seed = args.seed;
  cfg.fair.seed = args.seed;

  const fs::LoadResult loaded = load_data(args, schema);
  const fs::ExperimentReport report = fs::run_experiment(loaded.dataset, cfg, args.seed);

  const fs::RunManifest manifest =
      make_manifest("experiment", args, fs::experiment_config_to_json(cfg));
  stdfs::create_directories(out_dir);
  const stdfs::path dir(out_dir);
  fs::write_text_file(dir / "report.json",
                      fs::experiment_report_to_json(report, cfg, manifest).dump(2) + "\n");
  fs::write_metrics_csv(dir / "metrics.csv", report, manifest);
  fs::write_importance_csv(dir / "importance.csv", report, manifest);
  fs::write_coefficients_csv(dir / "coefficients.csv", report, manifest);

  const fs::Aggregate& agg = report.aggregate;
  std::cout << "folds scored: " << report.folds.size() << " of " << cfg.folds << "\n"
            << "perf: auc " << agg.perf_mean.auc << " +/- " << agg.perf_std.auc
            << ", eod_sq " << agg.perf_mean.eod_sq << "\n"
            << "fair: auc " << agg.fair_mean.auc << " +/- " << agg.fair_std.auc
            << ", eod_sq " << agg.fair_mean.eod_sq << "\n"
            << "fairness improvement " << agg.improvement_mean << " +/- "
            << agg.improvement_std << "\n";
  const fs::ImportanceSummaryRow* top = nullptr;
  for (const auto& row : agg.importance)
    if (row.rank == 1) top = &row;
  if (top) std::cout << "top fairness contributor: " << top->name << "\n";
  std::cout << "wrote report to " << out_dir << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairness-aware tabular classification toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("fairshift ") + fs::kToolVersion);

  CommonArgs args;

  auto add_common = [&](CLI::App* sub, bool with_config) {
    sub->add_option("--data", args.data_path, "cohort CSV")->required();
    sub->add_option("--schema", args.schema_path, "column schema JSON")->required();
    if (with_config) sub->add_option("--config", args.config_path, "config JSON");
    sub->add_option("--seed", args.seed, "master seed (drives all randomness)");
  };

  // prepare
  auto* prepare = app.add_subcommand(
      "prepare", "load a raw cohort, binarize the group, filter outliers");
  std::string prepare_out;
  double low = 0.02, high = 0.98;
  bool no_filter = false;
  add_common(prepare, false);
  prepare->add_option("--out", prepare_out, "cleaned cohort CSV")->required();
  prepare->add_option("--low", low, "lower quantile (default 0.02)");
  prepare->add_option("--high", high, "upper quantile (default 0.98)");
  prepare->add_flag("--no-filter", no_filter, "skip the interpercentile filter");

  // synth
  auto* synth = app.add_subcommand("synth", "generate a synthetic cohort");
  std::string synth_preset = "biased", synth_spec, synth_out, synth_schema_out;
  std::size_t synth_n = 0;
  synth->add_option("--preset", synth_preset, "biased | fair | mediated");
  synth->add_option("--spec", synth_spec, "cohort spec JSON (overrides --preset)");
  synth->add_option("--n", synth_n, "cohort size override");
  synth->add_option("--seed", args.seed, "master seed");
  synth->add_option("--out", synth_out, "cohort CSV")->required();
  synth->add_option("--schema-out", synth_schema_out,
                    "schema JSON path (default: <out>.schema.json)");

  // train
  auto* train = app.add_subcommand("train", "fit the performance model");
  std::string train_out;
  add_common(train, true);
  train->add_option("--out", train_out, "model JSON")->required();

  // transfer
  auto* transfer = app.add_subcommand(
      "transfer", "transfer a trained model into its fairness-optimized twin");
  std::string transfer_model, transfer_out, transfer_deltas;
  add_common(transfer, true);
  transfer->add_option("--model", transfer_model, "donor model JSON")->required();
  transfer->add_option("--out", transfer_out, "fair model JSON")->required();
  transfer->add_option("--deltas", transfer_deltas, "coefficient delta CSV");

  // audit
  auto* audit = app.add_subcommand("audit", "score a model on a cohort");
  std::string audit_model, audit_out, audit_roc;
  add_common(audit, false);
  audit->add_option("--model", audit_model, "model JSON")->required();
  audit->add_option("--out", audit_out, "metrics JSON")->required();
  audit->add_option("--roc", audit_roc, "ROC curve CSV");

  // importance
  auto* importance = app.add_subcommand(
      "importance", "per-feature contribution reports (fairness, predictive, shap)");
  std::string imp_mode = "fairness", imp_model, imp_model_fair, imp_metric = "auc";
  std::string imp_out, imp_csv;
  int imp_reps = 100;
  add_common(importance, false);
  importance->add_option("--mode", imp_mode, "fairness | predictive | shap");
  importance->add_option("--model-perf", imp_model, "performance model JSON");
  importance->add_option("--model-fair", imp_model_fair, "fair model JSON");
  importance->add_option("--metric", imp_metric, "predictive metric: auc | acc");
  importance->add_option("--repetitions", imp_reps, "permutations per feature");
  importance->add_option("--out", imp_out, "report JSON")->required();
  importance->add_option("--csv", imp_csv, "summary CSV");

  // experiment
  auto* experiment = app.add_subcommand(
      "experiment", "cross-validated end-to-end run with reports");
  std::string exp_dir;
  int exp_folds = 0, exp_reps = 0;
  add_common(experiment, true);
  experiment->add_option("--out-dir", exp_dir, "report directory")->required();
  experiment->add_option("--folds", exp_folds, "fold count override");
  experiment->add_option("--repetitions", exp_reps, "permutations per feature override");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (prepare->parsed()) return cmd_prepare(args, prepare_out, low, high, no_filter);
    if (synth->parsed())
      return cmd_synth(args, synth_preset, synth_spec, synth_n, synth_out,
                       synth_schema_out);
    if (train->parsed()) return cmd_train(args, train_out);
    if (transfer->parsed())
      return cmd_transfer(args, transfer_model, transfer_out, transfer_deltas);
    if (audit->parsed()) return cmd_audit(args, audit_model, audit_out, audit_roc);
    if (importance->parsed())
      return cmd_importance(args, imp_mode, imp_model, imp_model_fair, imp_metric,
                            imp_reps, imp_out, imp_csv);
    if (experiment->parsed()) return cmd_experiment(args, exp_dir, exp_folds, exp_reps);
  } catch (const fs::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
