#include "stylegraph/error.hpp"

namespace stylegraph {

const char* error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kOrdering: return "ordering";
    case ErrorCode::kEmptyInput: return "empty_input";
    case ErrorCode::kDomain: return "domain";
    case ErrorCode::kLookup: return "lookup";
    case ErrorCode::kCapacity: return "capacity";
    case ErrorCode::kRange: return "range";
    case ErrorCode::kSingular: return "singular";
    case ErrorCode::kType: return "type";
    case ErrorCode::kIncompleteInput: return "incomplete_input";
    case ErrorCode::kDegenerateDataset: return "degenerate_dataset";
    case ErrorCode::kCalibration: return "calibration";
    case ErrorCode::kPlacement: return "placement";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

}  // namespace stylegraph
