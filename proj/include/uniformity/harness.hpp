#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uniformity/collision.hpp"
#include "uniformity/core.hpp"
#include "uniformity/sampling.hpp"
#include "uniformity/tester.hpp"

namespace uniformity {

enum class Procedure { kTest, kEstimateL2 };

// One Monte Carlo experiment. Trial i draws from a synthetic oracle seeded
// with seed_base ^ i.
struct Scenario {
  std::optional<FamilySpec> family;
  std::optional<std::string> dist_path;
  Procedure procedure = Procedure::kTest;
  double eps = 0.5;
  // For estimate-l2 only `config.estimator` is used.
  TesterConfig config;
  std::uint64_t trials = 1;
  std::uint64_t seed_base = 0;
  bool seed_set = false;  // the scenario named a seed explicitly
  unsigned threads = 0;  // 0: hardware concurrency
};

// `key = value` lines, '#' comments. Keys: family, dist, procedure, eps, c,
// k, k3, budget, reuse_stage1, trials, seed, threads.
Scenario parse_scenario(std::istream& in);
Scenario read_scenario_file(const std::string& path);

Distribution resolve_target(const Scenario& s);

struct TrialRow {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  bool failed = false;
  std::string status;       // accept/reject, "ok", or the error name
  bool accepted = false;    // verdict accept, or estimate within (1 +- eps)
  std::uint64_t stage1_samples = 0;  // m for estimate-l2
  std::uint64_t stage2_samples = 0;
  Count128 t3 = 0;
  Count128 s2 = 0;
  std::uint64_t k = 0;
  double n_estimate = 0.0;
  double gamma = 0.0;

  std::uint64_t total_samples() const noexcept {
    return stage1_samples + stage2_samples;
  }
};

struct TrialStats {
  std::uint64_t trials = 0;
  std::uint64_t accepts = 0;
  double accept_rate = 0.0;
  double rate_stderr = 0.0;
  // Nearest-rank quantiles of total samples over trials that completed.
  std::uint64_t p10 = 0;
  std::uint64_t p50 = 0;
  std::uint64_t p90 = 0;
  std::uint64_t failures = 0;
  std::vector<TrialRow> per_trial;  // trial order
};

// Runs the trials in parallel; the result does not depend on the thread
// count. Per-trial BudgetExceeded/StreamExhausted are counted, not thrown.
TrialStats run_trials(const Scenario& s);

std::string trials_csv(const Scenario& s, const TrialStats& stats);
std::string summary_json(const Scenario& s, const TrialStats& stats);

struct ScalingFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

// Least squares of log(y) against log(x).
ScalingFit fit_loglog(std::span<const double> x, std::span<const double> y);

struct ScalingPoint {
  std::uint64_t n = 0;
  TrialStats stats;
};

struct ScalingResult {
  ScalingFit fit;
  std::vector<ScalingPoint> points;
};

// Re-runs `base` with the family resized to each n and fits the median
// total sample count against n on log-log axes.
ScalingResult scaling_fit(std::span<const std::uint64_t> n_values,
                          const Scenario& base);

// ---------------------------------------------------------------------------
// Exact-lemma sweep over random small distributions.

struct LemmaViolation {
  std::string check;  // "holder", "gap_equivalence", "norms_to_distance"
  std::uint64_t instance = 0;
  std::uint64_t seed = 0;
  std::string detail;
};

struct LemmaSweepReport {
  std::uint64_t instances = 0;
  std::uint64_t holder_checks = 0;
  std::uint64_t gap_checks = 0;
  std::uint64_t uniform_instances = 0;      // gap and distance both zero
  std::uint64_t lemma_hypotheses_met = 0;   // norms-to-distance bound applied
  std::vector<LemmaViolation> violations;
};

// The random distribution used for instance `seed` of a sweep.
std::vector<double> lemma_instance(std::uint64_t seed, std::size_t max_points);

// Checks, on `count` random distributions of at most max_points (<= 64)
// labels: the power-mean chain ||p||_2^{2(j-1)} <= ||p||_j^j, gap == 0 iff
// distance to the uniform class == 0, and the norms-to-distance bound
// whenever its hypotheses hold. Instance i uses seed ^ i.
LemmaSweepReport lemma_sweep(std::uint64_t count, std::size_t max_points,
                             std::uint64_t seed);

// ---------------------------------------------------------------------------

struct CollisionTrial {
  std::uint64_t trial = 0;
  std::uint64_t seed = 0;
  Count128 s2 = 0;
  Count128 t3 = 0;
};

// m draws per trial from p, recording the final S_m and T_m.
std::vector<CollisionTrial> run_collision_trials(const Distribution& p,
                                                 std::uint64_t m,
                                                 std::uint64_t trials,
                                                 std::uint64_t seed_base,
                                                 unsigned threads = 0);
std::string collision_trials_csv(std::span<const CollisionTrial> rows);

// Runs body(i) for i in [0, count) on up to `threads` workers.
template <typename Body>
void parallel_for(std::uint64_t count, unsigned threads, Body&& body);

}  // namespace uniformity

#include "uniformity/detail/parallel.hpp"
