#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqtext {

// Dimension disagreement between operands.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Invalid configuration or an impossible model/data combination.
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Precondition broken by the caller (bad label, empty batch, ...).
struct ContractError : std::logic_error {
  using std::logic_error::logic_error;
};

// Malformed input data; carries the 1-based line/row where it happened.
struct ParseError : std::runtime_error {
  ParseError(const std::string& where, std::size_t line, const std::string& what)
      : std::runtime_error(where + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Data-level failures: unreadable files, empty datasets, vocabulary mismatch.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Checkpoint failed length or checksum validation.
struct IntegrityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite loss or gradient during training.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace seqtext
