#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "uniformity/error.hpp"
#include "uniformity/harness.hpp"

namespace uniformity {
namespace {

Scenario scenario(const std::string& text) {
  std::istringstream in(text);
  return parse_scenario(in);
}

TEST(Scenario, ParsesKeys) {
  const auto s = scenario(
      "# comment\n"
      "family = uniform:n=100\n"
      "procedure = test\n"
      "eps = 0.5\n"
      "c = 100\n"
      "k3 = 200\n"
      "budget = 100000\n"
      "reuse_stage1 = true\n"
      "trials = 12\n"
      "seed = 99\n"
      "threads = 2\n");
  ASSERT_TRUE(s.family.has_value());
  EXPECT_EQ(format_family(*s.family), "uniform:n=100");
  EXPECT_EQ(s.procedure, Procedure::kTest);
  EXPECT_EQ(s.eps, 0.5);
  EXPECT_EQ(s.config.estimator.k_override, 100u);
  EXPECT_EQ(s.config.k3_override, 200u);
  EXPECT_EQ(s.config.sample_budget, 100000u);
  EXPECT_FALSE(s.config.fresh_stage2);
  EXPECT_EQ(s.trials, 12u);
  EXPECT_EQ(s.seed_base, 99u);
  EXPECT_TRUE(s.seed_set);
  EXPECT_EQ(s.threads, 2u);
}

TEST(Scenario, EstimatorConstant) {
  const auto s = scenario("family = uniform:n=10\nprocedure = estimate-l2\nc = 50\n");
  EXPECT_EQ(s.config.estimator.c_constant, 50.0);
  EXPECT_FALSE(s.config.estimator.k_override.has_value());
  EXPECT_FALSE(s.seed_set);
}

TEST(Scenario, RejectsMalformed) {
  for (const char* bad :
       {"family = uniform:n=10\nbogus = 1\n", "eps = 0.5\n",
        "family = uniform:n=10\ndist = x.csv\n", "family = uniform:n=10\ntrials = 0\n",
        "family = uniform:n=10\neps = abc\n", "family = uniform:n=10\nnoequals\n",
        "family = uniform:n=10\nprocedure = other\n"}) {
    EXPECT_THROW(scenario(bad), Error) << bad;
  }
}

Scenario uniform_test(std::uint64_t trials, unsigned threads) {
  auto s = scenario("family = uniform:n=100\neps = 0.5\nc = 100\nk3 = 200\n");
  s.trials = trials;
  s.seed_base = 4242;
  s.threads = threads;
  return s;
}

TEST(RunTrials, DeterministicAcrossThreadCounts) {
  const auto a = uniform_test(40, 1);
  const auto b = uniform_test(40, 4);
  const auto sa = run_trials(a);
  const auto sb = run_trials(b);
  EXPECT_EQ(trials_csv(a, sa), trials_csv(b, sb));
  EXPECT_EQ(trials_csv(a, sa), trials_csv(a, run_trials(a)));
  EXPECT_EQ(summary_json(a, sa), summary_json(a, run_trials(a)));
}

TEST(RunTrials, AggregatesConsistently) {
  const auto s = uniform_test(60, 0);
  const auto stats = run_trials(s);
  EXPECT_EQ(stats.per_trial.size(), 60u);
  std::uint64_t accepts = 0;
  for (std::size_t i = 0; i < stats.per_trial.size(); ++i) {
    EXPECT_EQ(stats.per_trial[i].trial, i);
    EXPECT_EQ(stats.per_trial[i].seed, 4242u ^ i);
    accepts += stats.per_trial[i].accepted;
  }
  EXPECT_EQ(stats.accepts, accepts);
  EXPECT_DOUBLE_EQ(stats.accept_rate * 60, static_cast<double>(accepts));
  EXPECT_GE(stats.accept_rate, 0.0);
  EXPECT_LE(stats.accept_rate, 1.0);
  EXPECT_LE(stats.p10, stats.p50);
  EXPECT_LE(stats.p50, stats.p90);
  EXPECT_GE(stats.accept_rate, 0.7);
}

TEST(RunTrials, TrialMatchesStandaloneRun) {
  const auto s = uniform_test(5, 2);
  const auto stats = run_trials(s);
  for (const auto& row : stats.per_trial) {
    auto oracle = make_synthetic(realize(*s.family), row.seed);
    const auto v = test_uniformity(*oracle, s.eps, s.config);
    EXPECT_EQ(v.stage1_samples, row.stage1_samples);
    EXPECT_EQ(v.stage2_samples, row.stage2_samples);
    EXPECT_EQ(v.t3_final, row.t3);
  }
}

TEST(RunTrials, PointMassEstimates) {
  auto s = scenario("family = pointmassmix:n=1,head=1\nprocedure = estimate-l2\n"
                    "eps = 0.25\nk = 10\ntrials = 8\nseed = 1\n");
  const auto stats = run_trials(s);
  for (const auto& row : stats.per_trial) {
    EXPECT_EQ(row.stage1_samples, 5u);
    EXPECT_EQ(row.gamma, 1.0);
  }
  EXPECT_EQ(stats.accept_rate, 1.0);
  EXPECT_EQ(stats.p50, 5u);
  EXPECT_NE(trials_csv(s, stats).find("trial,seed,status,m,k,s2_final,gamma,in_band"),
            std::string::npos);
}

TEST(RunTrials, FailuresAreCounted) {
  auto s = uniform_test(10, 2);
  s.config.sample_budget = 50;
  const auto stats = run_trials(s);
  EXPECT_EQ(stats.failures, 10u);
  EXPECT_EQ(stats.accepts, 0u);
  for (const auto& row : stats.per_trial) {
    EXPECT_TRUE(row.failed);
    EXPECT_EQ(row.status, "BudgetExceeded");
  }
}

TEST(RunTrials, CsvHeader) {
  const auto s = uniform_test(2, 1);
  const auto csv = trials_csv(s, run_trials(s));
  EXPECT_EQ(csv.substr(0, csv.find('\n')),
            "trial,seed,decision,stage1_samples,stage2_samples,t3,n_estimate");
}

TEST(Fit, ExactPowerLaw) {
  const std::vector<double> x{100, 1000, 10000, 31622};
  std::vector<double> y;
  for (double v : x) y.push_back(3.5 * std::pow(v, 2.0 / 3.0));
  const auto fit = fit_loglog(x, y);
  EXPECT_NEAR(fit.slope, 2.0 / 3.0, 1e-9);
  EXPECT_NEAR(fit.intercept, std::log(3.5), 1e-9);
  EXPECT_NEAR(fit.r2, 1.0, 1e-12);

  const std::vector<double> flat{7, 7, 7, 7};
  EXPECT_NEAR(fit_loglog(x, flat).slope, 0.0, 1e-9);
}

TEST(Fit, Degenerate) {
  const std::vector<double> x{10, 10, 10};
  const std::vector<double> y{1, 2, 3};
  try {
    fit_loglog(x, y);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDegenerateFit);
  }
  const std::vector<std::uint64_t> two{100, 1000};
  EXPECT_THROW(scaling_fit(two, uniform_test(5, 1)), Error);
}

TEST(Fit, ScalingOnUniform) {
  auto base = uniform_test(20, 0);
  const std::vector<std::uint64_t> ns{100, 1000, 10000};
  const auto result = scaling_fit(ns, base);
  ASSERT_EQ(result.points.size(), 3u);
  EXPECT_EQ(result.points[1].n, 1000u);
  EXPECT_GT(result.fit.slope, 0.4);
  EXPECT_LT(result.fit.slope, 0.9);
}

TEST(LemmaSweep, NoViolations) {
  const auto report = lemma_sweep(1000, 64, 7);
  EXPECT_EQ(report.instances, 1000u);
  EXPECT_EQ(report.holder_checks, 14000u);
  EXPECT_GT(report.uniform_instances, 0u);
  EXPECT_GT(report.lemma_hypotheses_met, 0u);
  for (const auto& v : report.violations) {
    ADD_FAILURE() << v.check << " instance " << v.instance << ": " << v.detail;
  }
}

TEST(LemmaSweep, InstancesAreReproducible) {
  EXPECT_EQ(lemma_instance(123, 64), lemma_instance(123, 64));
  EXPECT_LE(lemma_instance(5, 10).size(), 10u);
  EXPECT_THROW(lemma_sweep(1, 65, 0), Error);
}

TEST(LemmaSweep, CraftedCases) {
  // Uniform inputs sit in the equality regime of every check.
  for (std::uint64_t n : {1u, 2u, 17u, 64u}) {
    const auto p = realize(UniformFamily{n});
    const auto s = norms(p, 8);
    for (int j = 2; j <= 8; ++j) {
      EXPECT_NEAR(std::pow(s.l2_sq, j - 1), s.power_sum(j), 1e-15);
    }
    EXPECT_NEAR(uniformity_gap(p), 0.0, 1e-12);
    EXPECT_NEAR(tv_to_uniform_class(p).distance, 0.0, 1e-12);
  }
  // A mild bilevel whose norms satisfy the hypotheses with eps, delta < 0.04.
  const auto p = realize(BilevelFamily{1000, 0.5, 0.1});
  const auto s = norms(p);
  const double n = std::round(1 / s.l2_sq);
  const double eps = std::max(std::abs(n * s.l2_sq - 1), 1e-15);
  const double delta = std::max(n * n * s.l3_cubed - 1, 1e-15);
  ASSERT_LT(eps, 0.04);
  ASSERT_LT(delta, 0.04);
  EXPECT_LE(tv_to_uniform_class(p).distance, norms_to_distance_bound(eps, delta));
}

TEST(CollisionTrials, DeterministicAndExact) {
  const auto p = realize(UniformFamily{50});
  const auto a = run_collision_trials(p, 500, 30, 77, 1);
  const auto b = run_collision_trials(p, 500, 30, 77, 3);
  EXPECT_EQ(collision_trials_csv(a), collision_trials_csv(b));
  for (const auto& row : a) EXPECT_EQ(row.seed, 77u ^ row.trial);
  auto oracle = make_synthetic(p, a[3].seed);
  CollisionTracker t;
  for (int i = 0; i < 500; ++i) t.observe(oracle->pull());
  EXPECT_EQ(t.s2(), a[3].s2);
  EXPECT_EQ(t.t3(), a[3].t3);
}

}  // namespace
}  // namespace uniformity
