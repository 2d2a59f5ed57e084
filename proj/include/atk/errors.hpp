#pragma once

#include <stdexcept>
#include <string>

namespace atk {

// Base class for everything thrown by this library.
struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad configuration or out-of-range arguments (k outside [1,n], C <= 0, ...).
struct parameter_error : error {
  using error::error;
};

// Malformed or inconsistent input data.
struct data_error : error {
  using error::error;
};

// Text that failed to parse; message carries the 1-based line number.
struct parse_error : data_error {
  using data_error::data_error;
  parse_error(const std::string& path, std::size_t line, const std::string& what)
      : data_error(path + ":" + std::to_string(line) + ": " + what) {}
};

// Classification target outside {-1,+1}.
struct label_error : data_error {
  using data_error::data_error;
};

// Mismatched vector/matrix dimensions.
struct shape_error : data_error {
  using data_error::data_error;
};

// Value outside the mathematical domain of an operation (negative loss,
// degenerate target range, ...).
struct domain_error : data_error {
  using data_error::data_error;
};

// Metric undefined on the given inputs (e.g. G-mean with one class absent).
struct metric_error : data_error {
  using data_error::data_error;
};

// Iteration budget exhausted or the iterate became non-finite.
struct convergence_error : error {
  using error::error;
};

}  // namespace atk
