#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairshift/dataset.hpp"

namespace fairshift {

// Column-role map for flat cohort CSVs, loaded from a JSON config:
//   {"label": "...", "group": "...", "features": [...], "binary": [...],
//    "white_aliases": [...], "unknown_race": [...], "delimiter": ","}
// binary must be a subset of features; white_aliases / unknown_race drive the
// binarization of a free-text race column into the group indicator.
struct ColumnSchema {
  std::string label;
  std::string group;
  std::vector<std::string> features;
  std::vector<std::string> binary;
  std::vector<std::string> white_aliases = default_white_aliases();
  std::vector<std::string> unknown_race = default_unknown_race();
  char delimiter = ',';

  static std::vector<std::string> default_white_aliases();
  static std::vector<std::string> default_unknown_race();
};

struct LoadResult {
  Dataset dataset;
  std::size_t dropped_missing = 0;  // rows with an empty cell in a mapped column
  std::size_t rejected_race = 0;    // rows whose race value is in the unknown set
  std::vector<std::string> column_order;  // mapped columns, in input header order
};

// Maps a raw race string to the group indicator: 1 if it matches a white alias,
// 0 for any other definite value, nullopt (row rejected upstream) when it is in
// the unknown set. Matching is case-insensitive and whitespace-trimmed.
std::optional<int> binarize_race(std::string_view raw,
                                 std::span<const std::string> white_aliases,
                                 std::span<const std::string> unknown_race);

// Loads a cohort CSV. Rows with a missing value in any mapped column are
// dropped and counted; a race value from the unknown set rejects the row.
// Errors (ValidationError): missing file, schema column absent from the header,
// non-numeric cell in a numeric column, label outside {0,1}, empty result.
LoadResult load_csv(const std::filesystem::path& path, const ColumnSchema& schema);

// Writes the dataset back out with the given column order (feature columns plus
// the label and, if not itself a feature, the group column). Lines starting
// with '#' are treated as comments by load_csv, so `manifest_comment` may carry
// a provenance line.
void write_cohort_csv(const std::filesystem::path& path, const Dataset& d,
                      const ColumnSchema& schema,
                      std::span<const std::string> column_order,
                      const std::string& manifest_comment = "");

}  // namespace fairshift
