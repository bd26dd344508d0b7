#include "uniformity/tester.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "uniformity/error.hpp"

namespace uniformity {

std::string_view decision_name(Decision d) {
  return d == Decision::kAccept ? "accept" : "reject";
}

double stage1_delta(double eps) noexcept { return eps * eps * eps / 5832.0; }

std::uint64_t default_k3(double eps) {
  const double k = std::ceil(std::pow(eps, -18.0));
  if (!(k < 0x1.0p64)) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(k);
}

std::uint64_t stage2_budget(double n_estimate, double delta, std::uint64_t k3) {
  if (!(n_estimate > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "n_estimate must be positive");
  }
  const double scale = 3.0 * (1.0 - 4.0 * delta) * static_cast<double>(k3);
  if (scale <= 0.0) return 0;
  const double m = std::cbrt(scale * n_estimate * n_estimate);
  // Absorb the last-bit error of cbrt on exact cubes before flooring.
  const double floored = std::floor(m * (1.0 + 1e-12));
  if (!(floored < 0x1.0p63)) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(floored);
}

std::uint64_t expected_stage2_budget(double n_estimate, double eps,
                                     std::uint64_t k3) {
  return stage2_budget(n_estimate, stage1_delta(eps), k3);
}

Verdict test_uniformity(SampleOracle& oracle, double eps,
                        const TesterConfig& config) {
  if (!(eps > 0.0 && eps <= 0.5)) {
    throw Error(ErrorCode::kEpsOutOfRange, "eps must lie in (0, 1/2]");
  }
  if ((config.k3_override && *config.k3_override == 0) ||
      (config.sample_budget && *config.sample_budget == 0)) {
    throw Error(ErrorCode::kInvalidArgument, "overrides must be positive");
  }
  const std::uint64_t budget =
      config.sample_budget.value_or(kDefaultSampleBudget);

  Verdict v;
  v.delta_used = stage1_delta(eps);
  v.k3_used = config.k3_override.value_or(default_k3(eps));

  EstimatorConfig stage1 = config.estimator;
  stage1.sample_budget = std::min(stage1.budget(), budget);
  CollisionTracker tracker;
  const std::uint64_t drawn_before = oracle.drawn();
  const L2Estimate estimate = run_l2_estimator(
      oracle, v.delta_used, stage1, "stage1",
      config.fresh_stage2 ? nullptr : &tracker);
  v.k1_used = estimate.k;
  v.stage1_samples = estimate.m;
  v.n_estimate = 1.0 / estimate.gamma;
  v.m_budget = stage2_budget(v.n_estimate, v.delta_used, v.k3_used);

  const auto fail = [&](ErrorCode code, const std::string& why) {
    SamplingDiagnostics diag;
    diag.stage = "stage2";
    diag.samples = v.stage2_samples;
    diag.total_samples = oracle.drawn() - drawn_before;
    diag.s2 = tracker.s2();
    diag.t3 = tracker.t3();
    diag.target = v.k3_used;
    return SamplingError(code, why, diag);
  };

  while (tracker.t3() <= v.k3_used && tracker.m() < v.m_budget) {
    if (v.stage1_samples + v.stage2_samples >= budget) {
      throw fail(ErrorCode::kBudgetExceeded,
                 "stage2: sample budget of " + std::to_string(budget) +
                     " exhausted");
    }
    const auto label = oracle.try_pull();
    if (!label) {
      throw fail(ErrorCode::kStreamExhausted,
                 "stage2: sample stream ended after " +
                     std::to_string(v.stage2_samples) + " samples");
    }
    tracker.observe(*label);
    ++v.stage2_samples;
  }
  v.t3_final = tracker.t3();
  v.decision = v.t3_final > v.k3_used ? Decision::kReject : Decision::kAccept;
  return v;
}

}  // namespace uniformity
