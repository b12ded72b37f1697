#include "fairshift/serialize.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <sstream>

#include "fairshift/errors.hpp"

namespace fairshift {

std::string hash_bytes(std::string_view bytes) {
  // FNV-1a 64-bit.
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[24];
  std::snprintf(buf, sizeof buf, "fnv1a:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string hash_file(const std::filesystem::path& path) {
  return hash_bytes(read_text_file(path));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out << content;
}

json load_json(const std::filesystem::path& path) {
  try {
    return json::parse(read_text_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---- manifest ----

std::optional<std::string> RunManifest::source_date_epoch_timestamp() {
  const char* env = std::getenv("SOURCE_DATE_EPOCH");
  if (!env || !*env) return std::nullopt;
  const std::time_t t = static_cast<std::time_t>(std::strtoll(env, nullptr, 10));
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

json RunManifest::to_json() const {
  json j;
  j["command"] = command;
  j["tool_version"] = tool_version;
  j["master_seed"] = master_seed;
  j["config_hash"] = config_hash;
  json inputs = json::object();
  for (const auto& [path, hash] : input_hashes) inputs[path] = hash;
  j["inputs"] = inputs;
  if (timestamp) j["timestamp"] = *timestamp;
  return j;
}

std::string RunManifest::comment_line() const {
  std::string line = "fairshift " + std::string(tool_version) + " " + command +
                     " seed=" + std::to_string(master_seed);
  if (!config_hash.empty()) line += " config=" + config_hash;
  for (const auto& [path, hash] : input_hashes) line += " " + path + "=" + hash;
  if (timestamp) line += " timestamp=" + *timestamp;
  return line;
}

// ---- column schema ----

ColumnSchema schema_from_json(const json& j) {
  ColumnSchema schema;
  try {
    schema.label = j.at("label").get<std::string>();
    schema.group = j.at("group").get<std::string>();
    schema.features = j.at("features").get<std::vector<std::string>>();
    if (j.contains("binary")) schema.binary = j["binary"].get<std::vector<std::string>>();
    if (j.contains("white_aliases"))
      schema.white_aliases = j["white_aliases"].get<std::vector<std::string>>();
    if (j.contains("unknown_race"))
      schema.unknown_race = j["unknown_race"].get<std::vector<std::string>>();
    if (j.contains("delimiter")) {
      const std::string d = j["delimiter"].get<std::string>();
      if (d.size() != 1) throw ValidationError("delimiter must be a single character");
      schema.delimiter = d[0];
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid schema config: ") + e.what());
  }
  return schema;
}

ColumnSchema load_schema(const std::filesystem::path& path) {
  return schema_from_json(load_json(path));
}

json schema_to_json(const ColumnSchema& schema) {
  json j;
  j["label"] = schema.label;
  j["group"] = schema.group;
  j["features"] = schema.features;
  j["binary"] = schema.binary;
  j["white_aliases"] = schema.white_aliases;
  j["unknown_race"] = schema.unknown_race;
  j["delimiter"] = std::string(1, schema.delimiter);
  return j;
}

// ---- configs ----

TrainConfig train_config_from_json(const json& j) {
  TrainConfig cfg;
  try {
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("max_epochs")) cfg.max_epochs = j["max_epochs"].get<int>();
    if (j.contains("grad_tolerance")) cfg.grad_tolerance = j["grad_tolerance"].get<double>();
    if (j.contains("l2_penalty")) cfg.l2_penalty = j["l2_penalty"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid train config: ") + e.what());
  }
  return cfg;
}

json train_config_to_json(const TrainConfig& cfg) {
  json j;
  j["learning_rate"] = cfg.learning_rate;
  j["max_epochs"] = cfg.max_epochs;
  j["grad_tolerance"] = cfg.grad_tolerance;
  j["l2_penalty"] = cfg.l2_penalty;
  j["seed"] = cfg.seed;
  return j;
}

FairTransferConfig fair_config_from_json(const json& j) {
  FairTransferConfig cfg;
  try {
    if (j.contains("epsilon")) cfg.epsilon = j["epsilon"].get<double>();
    if (j.contains("surrogate_temperature"))
      cfg.surrogate_temperature = j["surrogate_temperature"].get<double>();
    if (j.contains("penalty_weight")) cfg.penalty_weight = j["penalty_weight"].get<double>();
    if (j.contains("learning_rate")) cfg.learning_rate = j["learning_rate"].get<double>();
    if (j.contains("max_epochs")) cfg.max_epochs = j["max_epochs"].get<int>();
    if (j.contains("grad_tolerance")) cfg.grad_tolerance = j["grad_tolerance"].get<double>();
    if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("eod_variant")) {
      const std::string v = j["eod_variant"].get<std::string>();
      if (v == "squared_sum")
        cfg.eod_variant = EodVariant::squared_sum;
      else if (v == "mean_abs")
        cfg.eod_variant = EodVariant::mean_abs;
      else
        throw ValidationError("unknown eod_variant: " + v);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid fair config: ") + e.what());
  }
  return cfg;
}

json fair_config_to_json(const FairTransferConfig& cfg) {
  json j;
  j["epsilon"] = cfg.epsilon;
  j["surrogate_temperature"] = cfg.surrogate_temperature;
  j["penalty_weight"] = cfg.penalty_weight;
  j["learning_rate"] = cfg.learning_rate;
  j["max_epochs"] = cfg.max_epochs;
  j["grad_tolerance"] = cfg.grad_tolerance;
  j["seed"] = cfg.seed;
  j["eod_variant"] =
      cfg.eod_variant == EodVariant::squared_sum ? "squared_sum" : "mean_abs";
  return j;
}

ExperimentConfig experiment_config_from_json(const json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("train")) cfg.train = train_config_from_json(j["train"]);
    if (j.contains("fair")) cfg.fair = fair_config_from_json(j["fair"]);
    if (j.contains("folds")) cfg.folds = j["folds"].get<int>();
    if (j.contains("repetitions")) cfg.repetitions = j["repetitions"].get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid experiment config: ") + e.what());
  }
  return cfg;
}

json experiment_config_to_json(const ExperimentConfig& cfg) {
  json j;
  j["train"] = train_config_to_json(cfg.train);
  j["fair"] = fair_config_to_json(cfg.fair);
  j["folds"] = cfg.folds;
  j["repetitions"] = cfg.repetitions;
  return j;
}

// ---- cohort specs ----

namespace {
DistFamily family_from_string(const std::string& s) {
  if (s == "normal") return DistFamily::normal;
  if (s == "bernoulli") return DistFamily::bernoulli;
  if (s == "uniform") return DistFamily::uniform;
  throw ValidationError("unknown distribution family: " + s);
}

std::string family_to_string(DistFamily f) {
  switch (f) {
    case DistFamily::normal: return "normal";
    case DistFamily::bernoulli: return "bernoulli";
    case DistFamily::uniform: return "uniform";
  }
  return "normal";
}
}  // namespace

CohortSpec cohort_spec_from_json(const json& j) {
  CohortSpec spec;
  try {
    spec.n = j.at("n").get<std::size_t>();
    if (j.contains("seed")) spec.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("group_fraction")) spec.group_fraction = j["group_fraction"].get<double>();
    if (j.contains("intercept")) spec.intercept = j["intercept"].get<double>();
    for (const json& f : j.at("features")) {
      FeatureSpec fs;
      fs.name = f.at("name").get<std::string>();
      if (f.contains("family")) fs.family = family_from_string(f["family"].get<std::string>());
      if (f.contains("params")) {
        const auto params = f["params"].get<std::vector<double>>();
        if (!params.empty()) fs.param_a = params[0];
        if (params.size() > 1) fs.param_b = params[1];
      }
      if (f.contains("theta")) fs.theta = f["theta"].get<double>();
      if (f.contains("shift")) {
        fs.shift_group = f["shift"].at("group").get<int>();
        fs.shift_delta = f["shift"].at("delta").get<double>();
      }
      spec.features.push_back(std::move(fs));
    }
    if (j.contains("disparity")) {
      const json& dis = j["disparity"];
      const std::string kind = dis.at("kind").get<std::string>();
      if (kind == "none") {
        spec.disparity = NoDisparity{};
      } else if (kind == "label_noise") {
        spec.disparity =
            LabelNoise{dis.at("group").get<int>(), dis.at("flip_rate").get<double>()};
      } else if (kind == "feature_shift") {
        spec.disparity =
            FeatureShift{dis.at("feature").get<std::string>(), dis.at("group").get<int>(),
                         dis.at("delta").get<double>()};
      } else {
        throw ValidationError("unknown disparity kind: " + kind);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid cohort spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

json cohort_spec_to_json(const CohortSpec& spec) {
  json j;
  j["n"] = spec.n;
  j["seed"] = spec.seed;
  j["group_fraction"] = spec.group_fraction;
  j["intercept"] = spec.intercept;
  json features = json::array();
  for (const FeatureSpec& f : spec.features) {
    json fj;
    fj["name"] = f.name;
    fj["family"] = family_to_string(f.family);
    fj["params"] = std::vector<double>{f.param_a, f.param_b};
    fj["theta"] = f.theta;
    if (f.shift_group != -1)
      fj["shift"] = json{{"group", f.shift_group}, {"delta", f.shift_delta}};
    features.push_back(fj);
  }
  j["features"] = features;
  json dis;
  if (const auto* noise = std::get_if<LabelNoise>(&spec.disparity)) {
    dis["kind"] = "label_noise";
    dis["group"] = noise->group;
    dis["flip_rate"] = noise->flip_rate;
  } else if (const auto* shift = std::get_if<FeatureShift>(&spec.disparity)) {
    dis["kind"] = "feature_shift";
    dis["feature"] = shift->feature;
    dis["group"] = shift->group;
    dis["delta"] = shift->delta;
  } else {
    dis["kind"] = "none";
  }
  j["disparity"] = dis;
  return j;
}

// ---- model artifacts ----

json model_to_json(const ModelArtifact& artifact, const RunManifest& manifest) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["feature_names"] = artifact.weights.feature_names;
  j["coefficients"] = artifact.weights.coefficients;
  j["intercept"] = artifact.weights.intercept;
  if (artifact.weights.threshold)
    j["threshold"] = *artifact.weights.threshold;
  else
    j["threshold"] = nullptr;
  j["scaler"] = json{{"means", artifact.scaler.means}, {"stddevs", artifact.scaler.stddevs}};
  j["meta"] = json{{"seed", artifact.seed}, {"config_hash", artifact.config_hash}};
  if (artifact.transfer) {
    const TransferBlock& t = *artifact.transfer;
    j["transfer"] = json{{"epsilon", t.epsilon},       {"tau", t.tau},
                         {"lambda", t.lambda},         {"tpr_anchor", t.tpr_anchor},
                         {"epochs_run", t.epochs_run}, {"converged", t.converged},
                         {"improving", t.improving}};
  }
  j["manifest"] = manifest.to_json();
  return j;
}

ModelArtifact model_from_json(const json& j) {
  ModelArtifact artifact;
  try {
    artifact.weights.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    artifact.weights.coefficients = j.at("coefficients").get<std::vector<double>>();
    artifact.weights.intercept = j.at("intercept").get<double>();
    if (j.contains("threshold") && !j["threshold"].is_null())
      artifact.weights.threshold = j["threshold"].get<double>();
    artifact.scaler.means = j.at("scaler").at("means").get<std::vector<double>>();
    artifact.scaler.stddevs = j.at("scaler").at("stddevs").get<std::vector<double>>();
    if (j.contains("meta")) {
      artifact.seed = j["meta"].value("seed", std::uint64_t{0});
      artifact.config_hash = j["meta"].value("config_hash", std::string{});
    }
    if (j.contains("transfer")) {
      TransferBlock t;
      const json& tj = j["transfer"];
      t.epsilon = tj.at("epsilon").get<double>();
      t.tau = tj.at("tau").get<double>();
      t.lambda = tj.at("lambda").get<double>();
      t.tpr_anchor = tj.at("tpr_anchor").get<double>();
      t.epochs_run = tj.at("epochs_run").get<int>();
      t.converged = tj.at("converged").get<bool>();
      t.improving = tj.value("improving", true);
      artifact.transfer = t;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("invalid model artifact: ") + e.what());
  }
  artifact.weights.validate();
  if (artifact.scaler.means.size() != artifact.weights.coefficients.size() ||
      artifact.scaler.stddevs.size() != artifact.weights.coefficients.size())
    throw ValidationError("model scaler does not match coefficient count");
  return artifact;
}

ModelArtifact load_model(const std::filesystem::path& path) {
  return model_from_json(load_json(path));
}

// ---- reports ----

json importance_to_json(const ImportanceReport& report) {
  json j;
  j["repetitions"] = report.repetitions;
  j["master_seed"] = report.master_seed;
  j["baseline"] = report.baseline;
  json features = json::array();
  for (const auto& f : report.features) {
    json fj;
    fj["name"] = f.name;
    fj["delta_mean"] = f.delta_mean;
    fj["delta_std"] = f.delta_std;
    fj["rank"] = f.rank;
    fj["excluded"] = f.excluded;
    fj["delta_samples"] = f.delta_samples;
    features.push_back(fj);
  }
  j["features"] = features;
  return j;
}

json delta_to_json(const CoefficientDelta& delta) {
  json j;
  j["intercept_delta"] = delta.intercept_delta;
  json entries = json::array();
  for (const auto& e : delta.entries) {
    entries.push_back(json{{"name", e.name},
                           {"theta_perf", e.theta_perf},
                           {"theta_fair", e.theta_fair},
                           {"delta", e.delta}});
  }
  j["entries"] = entries;
  return j;
}

json metrics_row_to_json(const MetricsRow& row) {
  json j;
  j["auc"] = row.auc;
  j["acc"] = row.acc;
  j["tpr_diff_abs"] = row.tpr_diff_abs;
  j["fpr_diff_abs"] = row.fpr_diff_abs;
  j["eod_sq"] = row.eod_sq;
  j["eod_reported"] = row.eod_reported;
  j["overall_tpr"] = row.overall_tpr;
  return j;
}

namespace {
json scaler_to_json(const ScalerParams& scaler) {
  return json{{"means", scaler.means}, {"stddevs", scaler.stddevs}};
}

json weights_to_json(const ModelWeights& w) {
  json j;
  j["feature_names"] = w.feature_names;
  j["coefficients"] = w.coefficients;
  j["intercept"] = w.intercept;
  if (w.threshold)
    j["threshold"] = *w.threshold;
  else
    j["threshold"] = nullptr;
  return j;
}
}  // namespace

json experiment_report_to_json(const ExperimentReport& report, const ExperimentConfig& cfg,
                               const RunManifest& manifest) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["manifest"] = manifest.to_json();
  j["config"] = experiment_config_to_json(cfg);
  j["master_seed"] = report.master_seed;
  j["skipped_folds"] = report.skipped_folds;

  json folds = json::array();
  for (const FoldResult& fr : report.folds) {
    json fj;
    fj["fold"] = fr.fold;
    fj["scaler"] = scaler_to_json(fr.scaler);
    fj["tpr_anchor"] = fr.tpr_anchor;
    fj["perf"] = metrics_row_to_json(fr.perf);
    fj["fair"] = metrics_row_to_json(fr.fair);
    fj["perf"]["threshold"] = fr.perf_model.threshold ? json(*fr.perf_model.threshold)
                                                      : json(nullptr);
    fj["fair"]["threshold"] = fr.fair_model.threshold ? json(*fr.fair_model.threshold)
                                                      : json(nullptr);
    fj["fairness_improvement"] = fr.fairness_improvement;
    fj["transfer"] = json{{"epochs_run", fr.transfer_epochs},
                          {"converged", fr.transfer_converged},
                          {"improving", fr.transfer_improving}};
    fj["importance"] = importance_to_json(fr.importance);
    fj["coefficient_delta"] = delta_to_json(fr.delta);
    fj["models"] =
        json{{"perf", weights_to_json(fr.perf_model)}, {"fair", weights_to_json(fr.fair_model)}};
    folds.push_back(fj);
  }
  j["folds"] = folds;

  json agg;
  agg["perf"] = json{{"mean", metrics_row_to_json(report.aggregate.perf_mean)},
                     {"std", metrics_row_to_json(report.aggregate.perf_std)}};
  agg["fair"] = json{{"mean", metrics_row_to_json(report.aggregate.fair_mean)},
                     {"std", metrics_row_to_json(report.aggregate.fair_std)}};
  agg["fairness_improvement"] = json{{"mean", report.aggregate.improvement_mean},
                                     {"std", report.aggregate.improvement_std}};
  json imp = json::array();
  for (const auto& row : report.aggregate.importance)
    imp.push_back(json{{"name", row.name},
                       {"delta_mean", row.delta_mean},
                       {"delta_std", row.delta_std},
                       {"rank", row.rank}});
  agg["importance"] = imp;
  agg["coefficient_delta"] = delta_to_json(report.aggregate.delta);
  j["aggregate"] = agg;
  return j;
}

// ---- csv extracts ----

void write_metrics_csv(const std::filesystem::path& path, const ExperimentReport& report,
                       const RunManifest& manifest) {
  std::ostringstream out;
  out << "# " << manifest.comment_line() << "\n";
  out << "fold,model,auc,acc,tpr_diff,fpr_diff,eod_sq,eod_reported,overall_tpr\n";
  auto emit = [&](const std::string& fold, const char* model, const MetricsRow& row) {
    out << fold << ',' << model << ',' << format_double(row.auc) << ','
        << format_double(row.acc) << ',' << format_double(row.tpr_diff_abs) << ','
        << format_double(row.fpr_diff_abs) << ',' << format_double(row.eod_sq) << ','
        << format_double(row.eod_reported) << ',' << format_double(row.overall_tpr)
        << "\n";
  };
  for (const FoldResult& fr : report.folds) {
    emit(std::to_string(fr.fold), "perf", fr.perf);
    emit(std::to_string(fr.fold), "fair", fr.fair);
  }
  emit("mean", "perf", report.aggregate.perf_mean);
  emit("std", "perf", report.aggregate.perf_std);
  emit("mean", "fair", report.aggregate.fair_mean);
  emit("std", "fair", report.aggregate.fair_std);
  write_text_file(path, out.str());
}

void write_importance_csv(const std::filesystem::path& path,
                          const ExperimentReport& report, const RunManifest& manifest) {
  std::ostringstream out;
  out << "# " << manifest.comment_line() << "\n";
  out << "feature,delta_mean,delta_std,rank\n";
  for (const auto& row : report.aggregate.importance)
    out << row.name << ',' << format_double(row.delta_mean) << ','
        << format_double(row.delta_std) << ',' << row.rank << "\n";
  write_text_file(path, out.str());
}

void write_coefficients_csv(const std::filesystem::path& path,
                            const ExperimentReport& report, const RunManifest& manifest) {
  std::ostringstream out;
  out << "# " << manifest.comment_line() << "\n";
  out << "feature,theta_perf,theta_fair,delta\n";
  for (const auto& e : report.aggregate.delta.entries)
    out << e.name << ',' << format_double(e.theta_perf) << ','
        << format_double(e.theta_fair) << ',' << format_double(e.delta) << "\n";
  out << "(intercept)," << "," << ","
      << format_double(report.aggregate.delta.intercept_delta) << "\n";
  write_text_file(path, out.str());
}

void write_importance_report_csv(const std::filesystem::path& path,
                                 const ImportanceReport& report,
                                 const RunManifest& manifest) {
  std::ostringstream out;
  out << "# " << manifest.comment_line() << "\n";
  out << "feature,delta_mean,delta_std,rank\n";
  for (const auto& f : report.features)
    out << f.name << ',' << format_double(f.delta_mean) << ','
        << format_double(f.delta_std) << ',' << f.rank << "\n";
  write_text_file(path, out.str());
}

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve,
                   const RunManifest& manifest) {
  std::ostringstream out;
  out << "# " << manifest.comment_line() << "\n";
  out << "fpr,tpr,threshold\n";
  for (const RocPoint& p : curve.points)
    out << format_double(p.fpr) << ',' << format_double(p.tpr) << ','
        << format_double(p.threshold) << "\n";
  write_text_file(path, out.str());
}

}  // namespace fairshift
