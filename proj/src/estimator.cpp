#include "uniformity/estimator.hpp"

#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include "uniformity/error.hpp"

namespace uniformity {

std::uint64_t collision_target(double c_constant, double eps) {
  const double k = std::ceil(c_constant / (eps * eps * eps * eps));
  if (!(k < 0x1.0p64)) return std::numeric_limits<std::uint64_t>::max();
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(k));
}

L2Estimate run_l2_estimator(SampleOracle& oracle, double eps,
                            const EstimatorConfig& config, const char* stage,
                            CollisionTracker* tracker_out) {
  if (!(config.c_constant > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "c_constant must be positive");
  }
  if ((config.k_override && *config.k_override == 0) ||
      (config.sample_budget && *config.sample_budget == 0)) {
    throw Error(ErrorCode::kInvalidArgument, "overrides must be positive");
  }
  if (!config.k_override && !(eps > 0.0)) {
    throw Error(ErrorCode::kEpsOutOfRange, "eps must be positive");
  }
  const std::uint64_t k =
      config.k_override.value_or(collision_target(config.c_constant, eps));
  const std::uint64_t budget = config.budget();

  CollisionTracker tracker;
  const auto fail = [&](ErrorCode code, const std::string& why) {
    SamplingDiagnostics diag;
    diag.stage = stage;
    diag.samples = tracker.m();
    diag.total_samples = oracle.drawn();
    diag.s2 = tracker.s2();
    diag.t3 = tracker.t3();
    diag.target = k;
    return SamplingError(code, why, diag);
  };

  // S_m <= C(m, 2), so an unreachable target is known before sampling.
  if (choose2(budget) < k) {
    throw fail(ErrorCode::kBudgetExceeded,
               std::string(stage) + ": collision target " + std::to_string(k) +
                   " is unreachable within " + std::to_string(budget) +
                   " samples");
  }
  while (tracker.s2() < k) {
    if (tracker.m() >= budget) {
      throw fail(ErrorCode::kBudgetExceeded,
                 std::string(stage) + ": sample budget of " +
                     std::to_string(budget) + " exhausted");
    }
    const auto label = oracle.try_pull();
    if (!label) {
      throw fail(ErrorCode::kStreamExhausted,
                 std::string(stage) + ": sample stream ended after " +
                     std::to_string(tracker.m()) + " samples");
    }
    tracker.observe(*label);
  }

  L2Estimate out;
  out.k = k;
  out.m = tracker.m();
  out.s2_final = tracker.s2();
  out.gamma = static_cast<double>(k) / static_cast<double>(choose2(out.m));
  if (tracker_out != nullptr) *tracker_out = std::move(tracker);
  return out;
}

L2Estimate estimate_l2_squared(SampleOracle& oracle, double eps,
                               const EstimatorConfig& config) {
  if (!(eps > 0.0 && eps <= 0.5)) {
    throw Error(ErrorCode::kEpsOutOfRange, "eps must lie in (0, 1/2]");
  }
  return run_l2_estimator(oracle, eps, config);
}

L2Adversary build_l2_adversary(const Distribution& p, double eps) {
  if (!(eps > 0.0 && eps < 1.0 / 3.0)) {
    throw Error(ErrorCode::kEpsOutOfRange, "eps must lie in (0, 1/3)");
  }
  const double l2_sq = norms(p, 3).l2_sq;
  const double l2 = std::sqrt(l2_sq);

  std::unordered_set<std::string_view> taken;
  for (const auto& e : p.entries()) taken.insert(e.label);
  std::size_t next_fresh = 0;
  const auto fresh_label = [&]() {
    for (;;) {
      std::string candidate = "~adv" + std::to_string(next_fresh++);
      if (taken.count(candidate) == 0) return candidate;
    }
  };

  L2Adversary out;
  std::vector<Entry> raw;
  raw.reserve(p.size() + 1);
  if (eps >= l2_sq) {
    out.construction = 1;
    out.gamma = (l2 + std::sqrt(3.0 * eps + (1.0 + 3.0 * eps) * l2_sq)) /
                (1.0 + l2_sq);
    out.moved_mass = out.gamma * l2;
    out.fresh_labels = 1;
    out.target_l2_sq = (1.0 + 3.0 * eps) * l2_sq;
    for (const auto& e : p.entries()) {
      raw.push_back({e.label, (1.0 - out.moved_mass) * e.prob});
    }
    raw.push_back({fresh_label(), out.moved_mass});
  } else {
    out.construction = 2;
    out.gamma = 3.0 * eps / l2;
    out.moved_mass = 3.0 * eps;
    out.fresh_labels = static_cast<std::uint64_t>(
        std::ceil(3.0 * eps / ((1.0 - 3.0 * eps) * l2_sq)));
    out.target_l2_sq = (1.0 - 3.0 * eps) * l2_sq;
    for (const auto& e : p.entries()) {
      raw.push_back({e.label, (1.0 - out.moved_mass) * e.prob});
    }
    const double share =
        out.moved_mass / static_cast<double>(out.fresh_labels);
    for (std::uint64_t i = 0; i < out.fresh_labels; ++i) {
      raw.push_back({fresh_label(), share});
    }
  }
  out.q = validate(std::move(raw));
  return out;
}

}  // namespace uniformity
