#include "fairshift/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "fairshift/errors.hpp"

namespace fairshift {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// One CSV record; handles double-quoted fields with "" escapes. Embedded
// newlines inside quotes are not supported (records are line-based).
std::vector<std::string> split_record(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"' && field.empty()) {
      quoted = true;
    } else if (c == delim) {
      fields.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(field);
  return fields;
}

bool parse_number(const std::string& text, double* out) {
  const std::string t = trim(text);
  if (t.empty()) return false;
  const char* begin = t.data();
  const char* end = begin + t.size();
  auto [ptr, ec] = std::from_chars(begin, end, *out);
  return ec == std::errc() && ptr == end;
}

}  // namespace

std::vector<std::string> ColumnSchema::default_white_aliases() {
  return {"white", "caucasian", "white - russian", "white - brazilian",
          "white - other european", "white - eastern european"};
}

std::vector<std::string> ColumnSchema::default_unknown_race() {
  return {"unknown", "unknown/not specified", "unable to obtain",
          "patient declined to answer"};
}

std::optional<int> binarize_race(std::string_view raw,
                                 std::span<const std::string> white_aliases,
                                 std::span<const std::string> unknown_race) {
  const std::string value = lower(trim(raw));
  for (const auto& u : unknown_race)
    if (value == lower(trim(u))) return std::nullopt;
  for (const auto& w : white_aliases)
    if (value == lower(trim(w))) return 1;
  return 0;
}

LoadResult load_csv(const std::filesystem::path& path, const ColumnSchema& schema) {
  if (schema.label.empty()) throw ValidationError("schema has no label column");
  if (schema.group.empty()) throw ValidationError("schema has no group column");
  if (schema.features.empty()) throw ValidationError("schema has no feature columns");
  for (const auto& b : schema.binary)
    if (std::find(schema.features.begin(), schema.features.end(), b) ==
        schema.features.end())
      throw ValidationError("binary column not listed as a feature: " + b);

  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open file: " + path.string());

  std::string line;
  // Header: skip comment lines and a UTF-8 BOM.
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (line.empty() || line[0] == '#') continue;
    have_header = true;
    break;
  }
  if (!have_header) throw ValidationError("no header row in " + path.string());

  const std::vector<std::string> header = split_record(line, schema.delimiter);
  std::unordered_map<std::string, std::size_t> col_index;
  for (std::size_t i = 0; i < header.size(); ++i) col_index[trim(header[i])] = i;

  auto require = [&](const std::string& name) {
    auto it = col_index.find(name);
    if (it == col_index.end())
      throw ValidationError("schema column not found in header: " + name);
    return it->second;
  };

  const std::size_t label_col = require(schema.label);
  const std::size_t group_col = require(schema.group);
  std::vector<std::size_t> feature_cols;
  feature_cols.reserve(schema.features.size());
  for (const auto& f : schema.features) feature_cols.push_back(require(f));

  LoadResult result;
  Dataset& d = result.dataset;
  d.feature_names = schema.features;
  d.binary_features.assign(schema.features.size(), false);
  for (std::size_t j = 0; j < schema.features.size(); ++j)
    d.binary_features[j] =
        std::find(schema.binary.begin(), schema.binary.end(), schema.features[j]) !=
        schema.binary.end();

  // Mapped columns in input header order, for canonical re-emission.
  {
    std::vector<std::pair<std::size_t, std::string>> mapped;
    mapped.emplace_back(label_col, schema.label);
    if (schema.group != schema.label) mapped.emplace_back(group_col, schema.group);
    for (std::size_t j = 0; j < schema.features.size(); ++j)
      if (schema.features[j] != schema.label && schema.features[j] != schema.group)
        mapped.emplace_back(feature_cols[j], schema.features[j]);
    std::sort(mapped.begin(), mapped.end());
    for (auto& [idx, name] : mapped) result.column_order.push_back(name);
  }

  std::vector<double> flat;  // row-major feature buffer
  std::vector<int> labels, groups;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const std::vector<std::string> fields = split_record(line, schema.delimiter);
    if (fields.size() != header.size())
      throw ValidationError("row " + std::to_string(line_no) + " has " +
                            std::to_string(fields.size()) + " fields, expected " +
                            std::to_string(header.size()));

    auto cell = [&](std::size_t col) { return trim(fields[col]); };

    // Missing value in any mapped column drops the row.
    bool missing = cell(label_col).empty() || cell(group_col).empty();
    for (std::size_t col : feature_cols) missing = missing || cell(col).empty();
    if (missing) {
      ++result.dropped_missing;
      continue;
    }

    // Group: numeric 0/1 directly, otherwise binarize the raw string.
    int z;
    {
      const std::string raw = cell(group_col);
      double numeric;
      if (parse_number(raw, &numeric)) {
        if (numeric != 0.0 && numeric != 1.0)
          throw ValidationError("group value outside {0,1} at row " +
                                std::to_string(line_no) + ": " + raw);
        z = static_cast<int>(numeric);
      } else {
        const auto coded = binarize_race(raw, schema.white_aliases, schema.unknown_race);
        if (!coded) {
          ++result.rejected_race;
          continue;
        }
        z = *coded;
      }
    }

    double label_value;
    {
      const std::string raw = cell(label_col);
      if (!parse_number(raw, &label_value))
        throw ValidationError("non-numeric label at row " + std::to_string(line_no) +
                              ": " + raw);
      if (label_value != 0.0 && label_value != 1.0)
        throw ValidationError("label outside {0,1} at row " + std::to_string(line_no) +
                              ": " + raw);
    }

    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      // The group column may double as a feature; it is already binarized.
      if (schema.features[j] == schema.group) {
        flat.push_back(static_cast<double>(z));
        continue;
      }
      const std::string raw = cell(feature_cols[j]);
      double v;
      if (!parse_number(raw, &v))
        throw ValidationError("non-numeric value in column '" + schema.features[j] +
                              "' at row " + std::to_string(line_no) + ": " + raw);
      if (!std::isfinite(v))
        throw ValidationError("non-finite value in column '" + schema.features[j] +
                              "' at row " + std::to_string(line_no));
      flat.push_back(v);
    }
    labels.push_back(static_cast<int>(label_value));
    groups.push_back(z);
  }

  const std::size_t n = labels.size();
  if (n == 0) throw ValidationError("no usable rows in " + path.string());
  d.features = Matrix(n, schema.features.size());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < schema.features.size(); ++j)
      d.features(i, j) = flat[i * schema.features.size() + j];
  d.labels = std::move(labels);
  d.group = std::move(groups);
  d.validate();
  return result;
}

void write_cohort_csv(const std::filesystem::path& path, const Dataset& d,
                      const ColumnSchema& schema,
                      std::span<const std::string> column_order,
                      const std::string& manifest_comment) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  if (!manifest_comment.empty()) out << "# " << manifest_comment << "\n";

  std::unordered_map<std::string, std::size_t> feature_index;
  for (std::size_t j = 0; j < d.feature_names.size(); ++j)
    feature_index[d.feature_names[j]] = j;

  for (std::size_t c = 0; c < column_order.size(); ++c) {
    if (c) out << schema.delimiter;
    out << column_order[c];
  }
  out << "\n";

  char buf[64];
  for (std::size_t i = 0; i < d.n_rows(); ++i) {
    for (std::size_t c = 0; c < column_order.size(); ++c) {
      if (c) out << schema.delimiter;
      const std::string& name = column_order[c];
      if (name == schema.label) {
        out << d.labels[i];
      } else if (auto it = feature_index.find(name); it != feature_index.end()) {
        std::snprintf(buf, sizeof buf, "%.17g", d.features(i, it->second));
        out << buf;
      } else if (name == schema.group) {
        out << d.group[i];
      } else {
        throw ValidationError("column not present in dataset: " + name);
      }
    }
    out << "\n";
  }
}

}  // namespace fairshift
