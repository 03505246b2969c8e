#include "discern/error.hpp"

#include <utility>

namespace discern {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::UnparsableValue: return "UnparsableValue";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
    case ErrorCode::EmptyFile: return "EmptyFile";
    case ErrorCode::TargetNotFound: return "TargetNotFound";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::InvalidSchema: return "InvalidSchema";
    case ErrorCode::SingleClassTraining: return "SingleClassTraining";
    case ErrorCode::EmptyTestSet: return "EmptyTestSet";
    case ErrorCode::BadModelFile: return "BadModelFile";
    case ErrorCode::DegenerateRegression: return "DegenerateRegression";
    case ErrorCode::EmptyBackground: return "EmptyBackground";
    case ErrorCode::ClassAbsent: return "ClassAbsent";
    case ErrorCode::NoUnlikeNeighbour: return "NoUnlikeNeighbour";
    case ErrorCode::NoFlip: return "NoFlip";
    case ErrorCode::AlreadyDesiredClass: return "AlreadyDesiredClass";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadTemplate: return "BadTemplate";
    case ErrorCode::LookupMiss: return "LookupMiss";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::BadConfig: return "BadConfig";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

Error::Error(ErrorCode code, const std::string& message, std::size_t row, std::string column)
    : std::runtime_error(std::string(to_string(code)) + ": " + message + " (row " +
                         std::to_string(row) + ", column '" + column + "')"),
      code_(code),
      row_(row),
      column_(std::move(column)) {}

}  // namespace discern
