#include "uniformity/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>

#include "json.hpp"
#include "uniformity/error.hpp"
#include "uniformity/estimator.hpp"

namespace uniformity {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double parse_real(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty()) {
    throw Error(ErrorCode::kParse, "scenario: bad number for " + key);
  }
  return x;
}

std::uint64_t parse_count(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  unsigned long long x = 0;
  try {
    x = std::stoull(value, &used, 0);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || value.empty() || value.front() == '-') {
    throw Error(ErrorCode::kParse, "scenario: bad integer for " + key);
  }
  return x;
}

std::uint64_t nearest_rank(const std::vector<std::uint64_t>& sorted,
                           double q) {
  if (sorted.empty()) return 0;
  const auto rank = static_cast<std::size_t>(
      std::ceil(q * static_cast<double>(sorted.size())));
  return sorted[std::clamp<std::size_t>(rank, 1, sorted.size()) - 1];
}

}  // namespace

Scenario parse_scenario(std::istream& in) {
  Scenario s;
  std::optional<double> c;
  std::optional<std::uint64_t> k;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kParse,
                  "scenario line " + std::to_string(line_no) +
                      ": expected key = value");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key == "family") {
      s.family = parse_family(value);
    } else if (key == "dist") {
      s.dist_path = value;
    } else if (key == "procedure") {
      if (value == "test") {
        s.procedure = Procedure::kTest;
      } else if (value == "estimate-l2") {
        s.procedure = Procedure::kEstimateL2;
      } else {
        throw Error(ErrorCode::kParse, "scenario: unknown procedure " + value);
      }
    } else if (key == "eps") {
      s.eps = parse_real(key, value);
    } else if (key == "c") {
      c = parse_real(key, value);
    } else if (key == "k") {
      k = parse_count(key, value);
    } else if (key == "k3") {
      s.config.k3_override = parse_count(key, value);
    } else if (key == "budget") {
      s.config.sample_budget = parse_count(key, value);
      s.config.estimator.sample_budget = s.config.sample_budget;
    } else if (key == "reuse_stage1") {
      s.config.fresh_stage2 = !(value == "true" || value == "1");
    } else if (key == "trials") {
      s.trials = parse_count(key, value);
    } else if (key == "seed") {
      s.seed_base = parse_count(key, value);
      s.seed_set = true;
    } else if (key == "threads") {
      s.threads = static_cast<unsigned>(parse_count(key, value));
    } else {
      throw Error(ErrorCode::kParse, "scenario: unknown key " + key);
    }
  }
  if (s.family.has_value() == s.dist_path.has_value()) {
    throw Error(ErrorCode::kParse,
                "scenario: exactly one of family or dist is required");
  }
  if (s.trials < 1) throw Error(ErrorCode::kParse, "scenario: trials >= 1");
  // The tester's stage-1 target at C / delta^4 is astronomically large, so
  // for `test` the constant is the stage-1 collision target itself.
  if (s.procedure == Procedure::kTest) {
    if (k) {
      s.config.estimator.k_override = k;
    } else if (c) {
      s.config.estimator.k_override =
          static_cast<std::uint64_t>(std::ceil(*c));
    }
  } else {
    if (c) s.config.estimator.c_constant = *c;
    if (k) s.config.estimator.k_override = k;
  }
  return s;
}

Scenario read_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, "cannot open " + path);
  return parse_scenario(in);
}

Distribution resolve_target(const Scenario& s) {
  if (s.family) return realize(*s.family);
  if (s.dist_path) return read_distribution_file(*s.dist_path);
  throw Error(ErrorCode::kInvalidArgument, "scenario has no target");
}

TrialStats run_trials(const Scenario& s) {
  if (s.trials < 1) {
    throw Error(ErrorCode::kInvalidArgument, "trials must be at least 1");
  }
  if (!(s.eps > 0.0 && s.eps <= 0.5)) {
    throw Error(ErrorCode::kEpsOutOfRange, "eps must lie in (0, 1/2]");
  }
  const SyntheticOracle prototype(resolve_target(s), 0);
  const double true_l2_sq = norms(prototype.distribution(), 3).l2_sq;

  std::vector<TrialRow> rows(s.trials);
  parallel_for(s.trials, s.threads, [&](std::uint64_t i) {
    TrialRow& row = rows[i];
    row.trial = i;
    row.seed = s.seed_base ^ i;
    SyntheticOracle oracle(prototype, row.seed);
    try {
      if (s.procedure == Procedure::kTest) {
        const Verdict v = test_uniformity(oracle, s.eps, s.config);
        row.status = std::string(decision_name(v.decision));
        row.accepted = v.decision == Decision::kAccept;
        row.stage1_samples = v.stage1_samples;
        row.stage2_samples = v.stage2_samples;
        row.t3 = v.t3_final;
        row.k = v.k3_used;
        row.n_estimate = v.n_estimate;
      } else {
        const L2Estimate e = estimate_l2_squared(oracle, s.eps, s.config.estimator);
        row.status = "ok";
        row.accepted = e.gamma >= (1.0 - s.eps) * true_l2_sq &&
                       e.gamma <= (1.0 + s.eps) * true_l2_sq;
        row.stage1_samples = e.m;
        row.s2 = e.s2_final;
        row.k = e.k;
        row.gamma = e.gamma;
        row.n_estimate = 1.0 / e.gamma;
      }
    } catch (const SamplingError& e) {
      row.failed = true;
      row.status = std::string(error_name(e.code()));
      row.stage1_samples = e.diagnostics().total_samples;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kCapacityExceeded) throw;
      row.failed = true;
      row.status = std::string(error_name(e.code()));
    }
  });

  TrialStats stats;
  stats.trials = s.trials;
  std::vector<std::uint64_t> totals;
  for (const auto& row : rows) {
    if (row.failed) {
      ++stats.failures;
      continue;
    }
    if (row.accepted) ++stats.accepts;
    totals.push_back(row.total_samples());
  }
  std::sort(totals.begin(), totals.end());
  const double n = static_cast<double>(stats.trials);
  stats.accept_rate = static_cast<double>(stats.accepts) / n;
  stats.rate_stderr =
      std::sqrt(stats.accept_rate * (1.0 - stats.accept_rate) / n);
  stats.p10 = nearest_rank(totals, 0.10);
  stats.p50 = nearest_rank(totals, 0.50);
  stats.p90 = nearest_rank(totals, 0.90);
  stats.per_trial = std::move(rows);
  return stats;
}

std::string trials_csv(const Scenario& s, const TrialStats& stats) {
  std::ostringstream out;
  if (s.procedure == Procedure::kTest) {
    out << "trial,seed,decision,stage1_samples,stage2_samples,t3,n_estimate\n";
    for (const auto& r : stats.per_trial) {
      out << r.trial << ',' << r.seed << ',' << r.status << ','
          << r.stage1_samples << ',' << r.stage2_samples << ','
          << to_string_u128(r.t3) << ',' << fmt_double(r.n_estimate) << '\n';
    }
  } else {
    out << "trial,seed,status,m,k,s2_final,gamma,in_band\n";
    for (const auto& r : stats.per_trial) {
      out << r.trial << ',' << r.seed << ',' << r.status << ','
          << r.stage1_samples << ',' << r.k << ',' << to_string_u128(r.s2)
          << ',' << fmt_double(r.gamma) << ',' << (r.accepted ? 1 : 0)
          << '\n';
    }
  }
  return out.str();
}

std::string summary_json(const Scenario& s, const TrialStats& stats) {
  nlohmann::ordered_json j;
  nlohmann::ordered_json scenario;
  if (s.family) scenario["family"] = format_family(*s.family);
  if (s.dist_path) scenario["dist"] = *s.dist_path;
  scenario["procedure"] =
      s.procedure == Procedure::kTest ? "test" : "estimate-l2";
  scenario["eps"] = s.eps;
  scenario["c_constant"] = s.config.estimator.c_constant;
  if (s.config.estimator.k_override) {
    scenario["k_override"] = *s.config.estimator.k_override;
  }
  if (s.config.k3_override) scenario["k3_override"] = *s.config.k3_override;
  scenario["fresh_stage2"] = s.config.fresh_stage2;
  scenario["trials"] = s.trials;
  scenario["seed_base"] = s.seed_base;
  j["scenario"] = scenario;
  j["accept_rate"] = stats.accept_rate;
  j["rate_stderr"] = stats.rate_stderr;
  j["accepts"] = stats.accepts;
  j["sample_quantiles"] = {
      {"p10", stats.p10}, {"p50", stats.p50}, {"p90", stats.p90}};
  j["failures"] = stats.failures;
  return j.dump(2) + "\n";
}

ScalingFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw Error(ErrorCode::kDegenerateFit, "need at least two points");
  }
  const std::size_t n = x.size();
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw Error(ErrorCode::kDegenerateFit, "log-log fit needs positive data");
    }
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
  const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) {
    throw Error(ErrorCode::kDegenerateFit, "zero variance in x");
  }
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return fit;
}

ScalingResult scaling_fit(std::span<const std::uint64_t> n_values,
                          const Scenario& base) {
  if (n_values.size() < 3) {
    throw Error(ErrorCode::kInvalidArgument, "scaling fit needs >= 3 sizes");
  }
  if (!base.family) {
    throw Error(ErrorCode::kInvalidArgument,
                "scaling fit needs a family target");
  }
  ScalingResult out;
  std::vector<double> xs, ys;
  for (std::uint64_t n : n_values) {
    Scenario s = base;
    s.family = with_size(*base.family, n);
    out.points.push_back({n, run_trials(s)});
    xs.push_back(static_cast<double>(n));
    ys.push_back(static_cast<double>(out.points.back().stats.p50));
  }
  out.fit = fit_loglog(xs, ys);
  return out;
}

std::vector<double> lemma_instance(std::uint64_t seed, std::size_t max_points) {
  Xoshiro256 rng(seed);
  const std::size_t n = 1 + rng.next_below(max_points);
  const auto shape = rng.next_below(5);
  std::vector<double> w(n, 0.0);
  const std::size_t support = 1 + rng.next_below(n);
  switch (shape) {
    case 0:  // exponential weights
      for (auto& x : w) x = -std::log1p(-rng.next_double());
      break;
    case 1:  // uniform on a subset, rest zero
      for (std::size_t i = 0; i < support; ++i) w[i] = 1.0;
      break;
    case 2: {  // multiplicative perturbation of a uniform subset
      const double eta = std::pow(10.0, -3.0 + 2.5 * rng.next_double());
      for (std::size_t i = 0; i < support; ++i) {
        w[i] = 1.0 + eta * (2.0 * rng.next_double() - 1.0);
      }
      break;
    }
    case 3: {  // two levels
      const double hi = 1.0 + 9.0 * rng.next_double();
      const std::size_t heavy = 1 + rng.next_below(support);
      for (std::size_t i = 0; i < support; ++i) w[i] = i < heavy ? hi : 1.0;
      break;
    }
    default:  // heavy tail
      for (auto& x : w) {
        const double u = rng.next_double();
        x = u * u * u * u;
      }
      break;
  }
  // Shuffle so zeros and levels land anywhere.
  for (std::size_t i = n; i > 1; --i) {
    std::swap(w[i - 1], w[rng.next_below(i)]);
  }
  CompensatedSum total;
  for (double x : w) total.add(x);
  if (total.value() == 0.0) {
    w[0] = 1.0;
    return w;
  }
  for (auto& x : w) x /= total.value();
  return w;
}

LemmaSweepReport lemma_sweep(std::uint64_t count, std::size_t max_points,
                             std::uint64_t seed) {
  if (max_points < 1 || max_points > 64) {
    throw Error(ErrorCode::kInvalidArgument, "max_points must lie in [1, 64]");
  }
  constexpr double kTol = 1e-12;
  LemmaSweepReport report;
  report.instances = count;
  const auto violation = [&](const char* check, std::uint64_t i,
                             std::uint64_t s, std::string detail) {
    report.violations.push_back({check, i, s, std::move(detail)});
  };

  for (std::uint64_t i = 0; i < count; ++i) {
    const std::uint64_t s = seed ^ i;
    const auto probs = lemma_instance(s, max_points);
    const Distribution p = from_probs(probs);
    const NormSummary ns = norms(p, 8);

    for (int j = 2; j <= 8; ++j) {
      ++report.holder_checks;
      const double lhs = std::pow(ns.l2_sq, j - 1);
      if (lhs > ns.power_sum(j) + kTol) {
        violation("holder", i, s,
                  "j=" + std::to_string(j) + " lhs=" + fmt_double(lhs) +
                      " rhs=" + fmt_double(ns.power_sum(j)));
      }
    }
    // Same chain for an unnormalized non-negative vector.
    Xoshiro256 scale_rng(s ^ 0x5eedULL);
    const double scale = std::pow(10.0, -2.0 + 4.0 * scale_rng.next_double());
    std::vector<double> x(probs);
    for (auto& v : x) v *= scale * (0.5 + scale_rng.next_double());
    const double l1 = power_sum(x, 1);
    const double l2_sq = power_sum(x, 2);
    for (int j = 2; j <= 8; ++j) {
      ++report.holder_checks;
      const double lhs = std::pow(l2_sq, j - 1);
      const double rhs = std::pow(l1, j - 2) * power_sum(x, j);
      if (lhs > rhs + kTol * std::max(1.0, rhs)) {
        violation("holder", i, s,
                  "vector j=" + std::to_string(j) + " lhs=" + fmt_double(lhs) +
                      " rhs=" + fmt_double(rhs));
      }
    }

    ++report.gap_checks;
    const double gap = ns.l3_cubed - ns.l2_sq * ns.l2_sq;
    const double distance = tv_to_uniform_class(p).distance;
    const bool gap_zero = std::abs(gap) <= kTol;
    const bool distance_zero = distance <= kTol;
    if (gap < -kTol) {
      violation("gap_equivalence", i, s, "negative gap " + fmt_double(gap));
    }
    if (gap_zero != distance_zero) {
      violation("gap_equivalence", i, s,
                "gap=" + fmt_double(gap) + " distance=" + fmt_double(distance));
    }
    if (gap_zero && distance_zero) ++report.uniform_instances;

    // Try the integers bracketing 1 / ||p||_2^2 as the support-size proxy N.
    const double ideal = 1.0 / ns.l2_sq;
    bool applied = false;
    for (double n_candidate : {std::floor(ideal), std::ceil(ideal)}) {
      if (n_candidate < 1.0) continue;
      const double eps =
          std::max(std::abs(n_candidate * ns.l2_sq - 1.0), 1e-15);
      const double delta = std::max(
          n_candidate * n_candidate * ns.l3_cubed - 1.0, 1e-15);
      if (eps >= 0.04 || delta >= 0.04) continue;
      applied = true;
      const double bound = norms_to_distance_bound(eps, delta);
      if (distance > bound + kTol) {
        violation("norms_to_distance", i, s,
                  "N=" + fmt_double(n_candidate) + " distance=" +
                      fmt_double(distance) + " bound=" + fmt_double(bound));
      }
    }
    if (applied) ++report.lemma_hypotheses_met;
  }
  return report;
}

std::vector<CollisionTrial> run_collision_trials(const Distribution& p,
                                                 std::uint64_t m,
                                                 std::uint64_t trials,
                                                 std::uint64_t seed_base,
                                                 unsigned threads) {
  const SyntheticOracle prototype(p, 0);
  std::vector<CollisionTrial> rows(trials);
  parallel_for(trials, threads, [&](std::uint64_t i) {
    SyntheticOracle oracle(prototype, seed_base ^ i);
    CollisionTracker tracker;
    for (std::uint64_t j = 0; j < m; ++j) tracker.observe(oracle.pull());
    rows[i] = {i, seed_base ^ i, tracker.s2(), tracker.t3()};
  });
  return rows;
}

std::string collision_trials_csv(std::span<const CollisionTrial> rows) {
  std::ostringstream out;
  out << "trial,seed,s2,t3\n";
  for (const auto& r : rows) {
    out << r.trial << ',' << r.seed << ',' << to_string_u128(r.s2) << ','
        << to_string_u128(r.t3) << '\n';
  }
  return out.str();
}

}  // namespace uniformity
