#include "fairshift/dataset.hpp"

#include <unordered_set>

#include "fairshift/errors.hpp"

namespace fairshift {

void Dataset::validate() const {
  const std::size_t n = features.rows();
  const std::size_t m = features.cols();
  if (n == 0) throw ValidationError("dataset has no rows");
  if (m == 0) throw ValidationError("dataset has no feature columns");
  if (labels.size() != n)
    throw ValidationError("labels length " + std::to_string(labels.size()) +
                          " does not match row count " + std::to_string(n));
  if (group.size() != n)
    throw ValidationError("group length " + std::to_string(group.size()) +
                          " does not match row count " + std::to_string(n));
  if (feature_names.size() != m)
    throw ValidationError("feature_names length " + std::to_string(feature_names.size()) +
                          " does not match column count " + std::to_string(m));
  if (binary_features.size() != m)
    throw ValidationError("binary_features length does not match column count");
  if (!features.all_finite()) throw ValidationError("feature matrix contains non-finite values");
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] != 0 && labels[i] != 1)
      throw ValidationError("label outside {0,1} at row " + std::to_string(i));
    if (group[i] != 0 && group[i] != 1)
      throw ValidationError("group outside {0,1} at row " + std::to_string(i));
  }
  std::unordered_set<std::string> seen;
  for (const auto& name : feature_names) {
    if (name.empty()) throw ValidationError("empty feature name");
    if (!seen.insert(name).second)
      throw ValidationError("duplicate feature name: " + name);
  }
}

Dataset Dataset::select_rows(std::span<const std::size_t> idx) const {
  Dataset out;
  out.feature_names = feature_names;
  out.binary_features = binary_features;
  out.features = Matrix(idx.size(), features.cols());
  out.labels.resize(idx.size());
  out.group.resize(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    const std::size_t src = idx[r];
    for (std::size_t j = 0; j < features.cols(); ++j)
      out.features(r, j) = features(src, j);
    out.labels[r] = labels[src];
    out.group[r] = group[src];
  }
  return out;
}

}  // namespace fairshift
