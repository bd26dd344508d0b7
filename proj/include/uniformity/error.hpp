#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace uniformity {

enum class ErrorCode {
  kNegativeMass,
  kMassNotOne,
  kDuplicateLabel,
  kInvalidSMax,
  kHypothesisOutOfRange,
  kBadFamilyParams,
  kParse,
  kStreamExhausted,
  kCapacityExceeded,
  kBudgetExceeded,
  kEpsOutOfRange,
  kTailDiverges,
  kNoPassingK,
  kDegenerateFit,
  kInvalidArgument,
};

std::string_view error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Partial state of an adaptive procedure that ran out of samples.
struct SamplingDiagnostics {
  std::string stage;             // "estimate-l2", "stage1" or "stage2"
  std::uint64_t samples = 0;     // pulls made in the failing stage
  std::uint64_t total_samples = 0;
  unsigned __int128 s2 = 0;
  unsigned __int128 t3 = 0;
  std::uint64_t target = 0;      // collision target of the failing stage
};

// BudgetExceeded or StreamExhausted raised by an adaptive sampler.
class SamplingError : public Error {
 public:
  SamplingError(ErrorCode code, const std::string& what,
                SamplingDiagnostics diagnostics)
      : Error(code, what), diagnostics_(std::move(diagnostics)) {}

  const SamplingDiagnostics& diagnostics() const noexcept {
    return diagnostics_;
  }

 private:
  SamplingDiagnostics diagnostics_;
};

// Decimal rendering of a 128-bit counter.
std::string to_string_u128(unsigned __int128 value);

}  // namespace uniformity
