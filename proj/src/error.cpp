#include "uniformity/error.hpp"

#include <algorithm>

namespace uniformity {

std::string_view error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNegativeMass: return "NegativeMass";
    case ErrorCode::kMassNotOne: return "MassNotOne";
    case ErrorCode::kDuplicateLabel: return "DuplicateLabel";
    case ErrorCode::kInvalidSMax: return "InvalidSMax";
    case ErrorCode::kHypothesisOutOfRange: return "HypothesisOutOfRange";
    case ErrorCode::kBadFamilyParams: return "BadFamilyParams";
    case ErrorCode::kParse: return "ParseError";
    case ErrorCode::kStreamExhausted: return "StreamExhausted";
    case ErrorCode::kCapacityExceeded: return "CapacityExceeded";
    case ErrorCode::kBudgetExceeded: return "BudgetExceeded";
    case ErrorCode::kEpsOutOfRange: return "EpsOutOfRange";
    case ErrorCode::kTailDiverges: return "TailDiverges";
    case ErrorCode::kNoPassingK: return "NoPassingK";
    case ErrorCode::kDegenerateFit: return "DegenerateFit";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

std::string to_string_u128(unsigned __int128 value) {
  if (value == 0) return "0";
  std::string digits;
  while (value != 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(value % 10)));
    value /= 10;
  }
  std::reverse(digits.begin(), digits.end());
  return digits;
}

}  // namespace uniformity
