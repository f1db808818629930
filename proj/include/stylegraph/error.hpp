#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stylegraph {

/// Error categories shared by the C++ core and the C API status codes.
enum class ErrorCode {
  kParse = 1,
  kOrdering,
  kEmptyInput,
  kDomain,
  kLookup,
  kCapacity,
  kRange,
  kSingular,
  kType,
  kIncompleteInput,
  kDegenerateDataset,
  kCalibration,
  kPlacement,
  kIo,
  kConfig,
};

const char* error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Malformed CSV/JSON input. `line` is 1-based, 0 when not applicable.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& message)
      : Error(ErrorCode::kParse, line ? "line " + std::to_string(line) + ": " + message : message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

#define STYLEGRAPH_DEFINE_ERROR(Name, Code)                                        \
  class Name : public Error {                                                      \
   public:                                                                         \
    explicit Name(const std::string& message) : Error(ErrorCode::Code, message) {} \
  };

STYLEGRAPH_DEFINE_ERROR(OrderingError, kOrdering)
STYLEGRAPH_DEFINE_ERROR(EmptyInputError, kEmptyInput)
STYLEGRAPH_DEFINE_ERROR(DomainError, kDomain)
STYLEGRAPH_DEFINE_ERROR(LookupError, kLookup)
STYLEGRAPH_DEFINE_ERROR(CapacityError, kCapacity)
STYLEGRAPH_DEFINE_ERROR(RangeError, kRange)
STYLEGRAPH_DEFINE_ERROR(SingularError, kSingular)
STYLEGRAPH_DEFINE_ERROR(TypeError, kType)
STYLEGRAPH_DEFINE_ERROR(IncompleteInputError, kIncompleteInput)
STYLEGRAPH_DEFINE_ERROR(DegenerateDatasetError, kDegenerateDataset)
STYLEGRAPH_DEFINE_ERROR(PlacementError, kPlacement)
STYLEGRAPH_DEFINE_ERROR(IoError, kIo)
STYLEGRAPH_DEFINE_ERROR(ConfigError, kConfig)

#undef STYLEGRAPH_DEFINE_ERROR

}  // namespace stylegraph
