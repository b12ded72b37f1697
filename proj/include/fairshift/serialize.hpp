#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fairshift/csv.hpp"
#include "fairshift/experiment.hpp"
#include "fairshift/roc.hpp"
#include "fairshift/synthgen.hpp"

namespace fairshift {

using json = nlohmann::ordered_json;

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

// FNV-1a 64-bit content hash, hex-encoded. Used to stamp configs and input
// files into artifacts, not for security.
std::string hash_bytes(std::string_view bytes);
std::string hash_file(const std::filesystem::path& path);

// Provenance block embedded in every artifact. The timestamp is only populated
// from the SOURCE_DATE_EPOCH environment variable (reproducible-build
// convention); with it unset, artifacts are byte-identical across re-runs.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::vector<std::pair<std::string, std::string>> input_hashes;  // (path, hash)
  std::uint64_t master_seed = 0;
  std::string tool_version = kToolVersion;
  std::optional<std::string> timestamp = source_date_epoch_timestamp();

  static std::optional<std::string> source_date_epoch_timestamp();
  json to_json() const;
  // Single-line form for CSV comment headers.
  std::string comment_line() const;
};

// ---- column schema ----
ColumnSchema schema_from_json(const json& j);
ColumnSchema load_schema(const std::filesystem::path& path);
json schema_to_json(const ColumnSchema& schema);

// ---- configs (absent keys keep defaults) ----
TrainConfig train_config_from_json(const json& j);
FairTransferConfig fair_config_from_json(const json& j);
ExperimentConfig experiment_config_from_json(const json& j);
json train_config_to_json(const TrainConfig& cfg);
json fair_config_to_json(const FairTransferConfig& cfg);
json experiment_config_to_json(const ExperimentConfig& cfg);

// ---- cohort specs ----
CohortSpec cohort_spec_from_json(const json& j);
json cohort_spec_to_json(const CohortSpec& spec);

// ---- model artifacts ----
struct TransferBlock {
  double epsilon = 0.0;
  double tau = 0.0;
  double lambda = 0.0;
  double tpr_anchor = 0.0;
  int epochs_run = 0;
  bool converged = false;
  bool improving = false;
};

// A trained model bundled with the scaler it was fitted behind, so raw cohorts
// can be audited without refitting anything.
struct ModelArtifact {
  ModelWeights weights;
  ScalerParams scaler;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::optional<TransferBlock> transfer;  // fair models only
};

json model_to_json(const ModelArtifact& artifact, const RunManifest& manifest);
ModelArtifact model_from_json(const json& j);
ModelArtifact load_model(const std::filesystem::path& path);

// ---- reports ----
json importance_to_json(const ImportanceReport& report);
json delta_to_json(const CoefficientDelta& delta);
json metrics_row_to_json(const MetricsRow& row);
json experiment_report_to_json(const ExperimentReport& report, const ExperimentConfig& cfg,
                               const RunManifest& manifest);

// CSV extracts of an experiment report. Values are printed with %.17g so they
// round-trip exactly.
void write_metrics_csv(const std::filesystem::path& path, const ExperimentReport& report,
                       const RunManifest& manifest);
void write_importance_csv(const std::filesystem::path& path,
                          const ExperimentReport& report, const RunManifest& manifest);
void write_coefficients_csv(const std::filesystem::path& path,
                            const ExperimentReport& report, const RunManifest& manifest);

void write_importance_report_csv(const std::filesystem::path& path,
                                 const ImportanceReport& report,
                                 const RunManifest& manifest);

void write_roc_csv(const std::filesystem::path& path, const RocCurve& curve,
                   const RunManifest& manifest);

std::string format_double(double v);  // %.17g

void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);
json load_json(const std::filesystem::path& path);

}  // namespace fairshift
