#pragma once

#include <cstdint>
#include <optional>

#include "uniformity/collision.hpp"
#include "uniformity/core.hpp"
#include "uniformity/sampling.hpp"

namespace uniformity {

inline constexpr double kDefaultCollisionConstant = 6500.0;
inline constexpr std::uint64_t kDefaultSampleBudget = 1'000'000'000;

struct EstimatorConfig {
  double c_constant = kDefaultCollisionConstant;
  std::optional<std::uint64_t> k_override;
  std::optional<std::uint64_t> sample_budget;

  std::uint64_t budget() const noexcept {
    return sample_budget.value_or(kDefaultSampleBudget);
  }
};

struct L2Estimate {
  double gamma = 0.0;            // k / C(m, 2)
  std::uint64_t m = 0;           // samples consumed
  std::uint64_t k = 0;           // collision target
  Count128 s2_final = 0;         // may exceed k when the last sample jumps
};

// ceil(c / eps^4), saturating at UINT64_MAX.
std::uint64_t collision_target(double c_constant, double eps);

// Samples until the running pair-collision count reaches k and returns
// k / C(m, 2). At the default constant, the estimate lies within a (1 +- eps)
// factor of ||p||_2^2 with probability at least 3/4.
//
// The stage-independent entry point takes any eps > 0; estimate_l2_squared
// enforces 0 < eps <= 1/2.
L2Estimate estimate_l2_squared(SampleOracle& oracle, double eps,
                               const EstimatorConfig& config);
// When `tracker_out` is given it receives the final collision state.
L2Estimate run_l2_estimator(SampleOracle& oracle, double eps,
                            const EstimatorConfig& config,
                            const char* stage = "estimate-l2",
                            CollisionTracker* tracker_out = nullptr);

struct L2Adversary {
  Distribution q;
  int construction = 0;        // 1: eps >= ||p||_2^2, 2: otherwise
  double gamma = 0.0;
  double moved_mass = 0.0;     // gamma * ||p||_2 == dTV(p, q)
  std::uint64_t fresh_labels = 0;
  double target_l2_sq = 0.0;   // (1 + 3 eps) or (1 - 3 eps) times ||p||_2^2
};

// A distribution q at TV distance gamma * ||p||_2 from p whose squared l2
// norm is off by a factor (1 +- 3 eps), built by moving mass to fresh
// labels. Requires 0 < eps < 1/3.
L2Adversary build_l2_adversary(const Distribution& p, double eps);

}  // namespace uniformity
