#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "uniformity/core.hpp"

namespace uniformity {

// Threshold on the moment discrepancy sum.
inline constexpr double kDiscrepancyThreshold = 1.0 / 24.0;
// Target for the certified tail of the truncated discrepancy sum.
inline constexpr double kTailTarget = 1e-6;

// k-based moments m(j) = k^j ||p||_j^j for 2 <= j <= j_max.
struct MomentProfile {
  std::uint64_t k = 0;
  int j_max = 0;
  std::vector<double> moments;  // indexed by j; entries 0 and 1 unused
  double linf = 0.0;
  double l3 = 0.0;              // ||p||_3
  // sum_{j > j_max} (k ||p||_3)^j, present only when k ||p||_3 < 1.
  std::optional<double> tail_bound;

  double moment(int j) const { return moments.at(j); }
};

MomentProfile k_moments(const Distribution& p, std::uint64_t k, int j_max);

struct Discrepancy {
  double partial = 0.0;  // sum over 2 <= j <= j_max
  double tail = 0.0;     // certified bound on the omitted terms, both inputs
  int j_max = 0;         // truncation actually used

  double total() const noexcept { return partial + tail; }
};

// sum_j |m_yes(j) - m_no(j)| / sqrt(1 + max(m_yes(j), m_no(j))), truncated
// at the first j_max (at least the requested one) whose combined geometric
// tail is below kTailTarget. Throws Error(kTailDiverges) when
// k ||.||_3 >= 1 for either input.
Discrepancy wishful_discrepancy(const Distribution& yes, const Distribution& no,
                                std::uint64_t k, int j_max = 3);

struct MatchedUniform {
  Distribution yes;
  double ideal_support = 0.0;     // 1 / ||q||_2^2
  std::uint64_t support = 0;      // round(ideal), at least 1
  double rounding_error = 0.0;    // |support - ideal| / ideal
};

// Uniform distribution on round(1 / ||q||_2^2) fresh labels.
MatchedUniform build_matched_uniform(const Distribution& q);

struct IndistinguishabilityReport {
  std::uint64_t k = 0;
  bool linf_ok = false;           // both sup-norms <= 1 / (500 k)
  double discrepancy = 0.0;       // partial sum; +inf when the tail diverges
  double tail = 0.0;
  bool discrepancy_ok = false;    // discrepancy + tail < 1/24
  bool passes = false;
};

// Both conditions at one k; a diverging tail fails closed.
IndistinguishabilityReport evaluate_indistinguishability(
    const Distribution& yes, const Distribution& no, std::uint64_t k,
    int j_max = 3);

struct IndistinguishabilitySearch {
  IndistinguishabilityReport best;
  std::vector<IndistinguishabilityReport> evaluated;  // ascending k
  bool monotone = true;  // no passing k above a failing one
  double rounding_error = 0.0;
  std::uint64_t matched_support = 0;
};

// Largest k <= k_cap at which q and its matched uniform distribution meet
// both conditions. Scans a doubling grid, then bisects between the largest
// passing grid point and its successor. Throws Error(kNoPassingK) if no
// evaluated k passes.
IndistinguishabilitySearch max_indistinguishable_k(const Distribution& q,
                                                   std::uint64_t k_cap,
                                                   int j_max = 3);

}  // namespace uniformity
