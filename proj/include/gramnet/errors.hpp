#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace gramnet {

/// Two statistics objects cannot be combined (feature dimension or fold count differs).
class IncompatibleError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Not enough rows for the requested operation (centering needs n >= 2).
class InsufficientDataError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Every column was dropped as degenerate; there is nothing to fit.
class EmptyModelError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Automatic grid generation is impossible (all correlations vanish, lambda_max = 0).
class DegenerateGridError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A sample carries a NaN/Inf entry. `field` is the offending feature index, -1 for the response.
class NonFiniteError : public std::invalid_argument {
  public:
    NonFiniteError(const std::string& what, int field_index)
        : std::invalid_argument(what), field(field_index) {}
    int field;
};

/// Data pass failed: unreadable shard, bad schema, or rejection rate above the cap.
class IngestError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// The solver produced non-finite values.
class SolverFault : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Prediction input does not match the model schema; lists the missing columns.
class SchemaError : public std::runtime_error {
  public:
    SchemaError(const std::string& what, std::vector<std::string> missing_columns)
        : std::runtime_error(what), missing(std::move(missing_columns)) {}
    std::vector<std::string> missing;
};

} // namespace gramnet
