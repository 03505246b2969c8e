#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace discern {

enum class ErrorCode {
  // dataset
  MissingColumn,
  UnparsableValue,
  UnknownCategory,
  EmptyFile,
  TargetNotFound,
  ClassTooSmall,
  InvalidSchema,
  // model
  SingleClassTraining,
  EmptyTestSet,
  BadModelFile,
  // relevance
  DegenerateRegression,
  EmptyBackground,
  ClassAbsent,
  // neighbours / counterfactual
  NoUnlikeNeighbour,
  NoFlip,
  AlreadyDesiredClass,
  // metrics / text
  LengthMismatch,
  BadTemplate,
  // external model adapter
  LookupMiss,
  ProtocolViolation,
  // general
  InvalidArgument,
  BadConfig,
  Io,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the engine. Row and column are set for load errors
// that point at a location in the input file (row is 1-based, header = 0).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);
  Error(ErrorCode code, const std::string& message, std::size_t row, std::string column);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> row() const noexcept { return row_; }
  const std::string& column() const noexcept { return column_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> row_;
  std::string column_;
};

}  // namespace discern
