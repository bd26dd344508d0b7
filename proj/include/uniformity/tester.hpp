#pragma once

#include <cstdint>
#include <optional>
#include <string_view>

#include "uniformity/collision.hpp"
#include "uniformity/estimator.hpp"
#include "uniformity/sampling.hpp"

namespace uniformity {

struct TesterConfig {
  EstimatorConfig estimator;
  // Replaces ceil(eps^-18) as the 3-way collision threshold.
  std::optional<std::uint64_t> k3_override;
  // Stage 2 starts from an empty tracker; false reuses the stage-1 sample.
  bool fresh_stage2 = true;
  // Cap on pulls across both stages.
  std::optional<std::uint64_t> sample_budget;
};

enum class Decision { kAccept, kReject };

std::string_view decision_name(Decision d);

struct Verdict {
  Decision decision = Decision::kAccept;
  double n_estimate = 0.0;        // N = 1 / gamma, kept real
  double delta_used = 0.0;        // eps^3 / 5832
  std::uint64_t k1_used = 0;      // stage-1 pair-collision target
  std::uint64_t k3_used = 0;
  std::uint64_t m_budget = 0;     // M
  std::uint64_t stage1_samples = 0;
  std::uint64_t stage2_samples = 0;
  Count128 t3_final = 0;

  std::uint64_t total_samples() const noexcept {
    return stage1_samples + stage2_samples;
  }
};

// eps^3 / 5832: the accuracy stage 1 asks of the l2 estimate.
double stage1_delta(double eps) noexcept;
// ceil(eps^-18), saturating.
std::uint64_t default_k3(double eps);

// floor(cbrt(3 (1 - 4 delta) k3) * N^(2/3)).
std::uint64_t stage2_budget(double n_estimate, double delta, std::uint64_t k3);
// Same with delta = eps^3 / 5832.
std::uint64_t expected_stage2_budget(double n_estimate, double eps,
                                     std::uint64_t k3);

// Two-stage adaptive test for membership in the class of distributions
// uniform on some subset of the domain.
//
// Stage 1 estimates ||p||_2^2 to within (1 +- delta) and sets N = 1 / gamma.
// Stage 2 draws up to M samples, stopping early and rejecting as soon as
// more than k3 three-way collisions are seen; reaching M accepts.
Verdict test_uniformity(SampleOracle& oracle, double eps,
                        const TesterConfig& config);

}  // namespace uniformity
