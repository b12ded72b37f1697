#pragma once

#include <stdexcept>
#include <string>

namespace fairshift {

// Data or configuration violates a documented contract. The CLI maps these to
// exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// A group-conditional rate has an empty conditioning cell, e.g. no Y=1 rows in
// group 0, so the corresponding rate is undefined.
class DegenerateCellError : public ValidationError {
 public:
  explicit DegenerateCellError(const std::string& cell)
      : ValidationError("degenerate conditioning cell: " + cell), cell_(cell) {}
  const std::string& cell() const { return cell_; }

 private:
  std::string cell_;
};

// Optimization produced a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(int epoch)
      : std::runtime_error("training diverged at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

}  // namespace fairshift
