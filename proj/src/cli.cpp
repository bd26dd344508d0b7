#include "uniformity/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "uniformity/error.hpp"
#include "uniformity/estimator.hpp"
#include "uniformity/harness.hpp"
#include "uniformity/lowerbound.hpp"
#include "uniformity/sampling.hpp"
#include "uniformity/tester.hpp"

namespace uniformity::cli {

namespace {

using Json = nlohmann::ordered_json;

// Raised for flag values that parse but fall outside their valid range.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Json count_json(Count128 value) {
  if (value <= std::numeric_limits<std::uint64_t>::max()) {
    return static_cast<std::uint64_t>(value);
  }
  return to_string_u128(value);
}

std::string fmt(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

struct SourceFlags {
  std::string family;
  std::string dist;
  std::string samples;
  bool use_stdin = false;

  void add(CLI::App* cmd, bool streams) {
    auto* group = cmd->add_option_group("source");
    group->add_option("--family", family, "Synthetic family, e.g. uniform:n=100");
    group->add_option("--dist", dist, "Distribution file (label,prob lines)");
    if (streams) {
      group->add_flag("--stdin", use_stdin, "Read sample tokens from stdin");
      group->add_option("--samples", samples, "Read sample tokens from a file");
    }
    group->require_option(1);
  }
  bool streaming() const { return use_stdin || !samples.empty(); }
};

struct SeedFlag {
  std::optional<std::uint64_t> value;

  void add(CLI::App* cmd) {
    cmd->add_option("--seed", value, "RNG seed (generated and printed if absent)");
  }
  std::uint64_t resolve(std::ostream& err) {
    if (!value) {
      std::random_device rd;
      value = (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
      err << "seed: " << *value << '\n';
    }
    return *value;
  }
};

void check_eps(double eps) {
  if (!(eps > 0.0 && eps <= 0.5)) {
    throw UsageError("--eps: must lie in (0, 0.5], got " + fmt(eps));
  }
}

// Holds whichever oracle the source flags select.
struct Source {
  std::unique_ptr<SampleOracle> oracle;
  std::ifstream file;
};

Source open_source(SourceFlags& flags, SeedFlag& seed, std::istream& in,
                   std::ostream& err) {
  Source src;
  if (flags.use_stdin) {
    src.oracle = make_stream(in);
  } else if (!flags.samples.empty()) {
    src.file.open(flags.samples);
    if (!src.file) {
      throw Error(ErrorCode::kParse, "cannot open " + flags.samples);
    }
    src.oracle = make_stream(src.file);
  } else {
    const Distribution p = flags.family.empty()
                               ? read_distribution_file(flags.dist)
                               : realize(parse_family(flags.family));
    src.oracle = make_synthetic(p, seed.resolve(err));
  }
  return src;
}

Distribution load_target(const SourceFlags& flags) {
  return flags.family.empty() ? read_distribution_file(flags.dist)
                              : realize(parse_family(flags.family));
}

void print_sampling_failure(const SamplingError& e, std::ostream& err) {
  const auto& d = e.diagnostics();
  const char* kind = e.code() == ErrorCode::kStreamExhausted
                         ? "InsufficientSamples"
                         : "BudgetExceeded";
  err << kind << ": " << e.what() << '\n'
      << "  stage=" << d.stage << " samples=" << d.samples
      << " total_samples=" << d.total_samples
      << " s2=" << to_string_u128(d.s2) << " t3=" << to_string_u128(d.t3)
      << " target=" << d.target << '\n';
}

// --- test -------------------------------------------------------------------

struct TestCmd {
  SourceFlags source;
  SeedFlag seed;
  double eps = 0.0;
  std::optional<std::uint64_t> k3;
  std::optional<double> c;
  std::optional<std::uint64_t> k;
  std::optional<std::uint64_t> budget;
  bool reuse = false;
  bool json = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("test", "Test uniformity on an unknown support");
    source.add(cmd, true);
    seed.add(cmd);
    cmd->add_option("--eps", eps, "Distance parameter in (0, 0.5]")->required();
    cmd->add_option("--k3", k3, "Three-way collision threshold");
    cmd->add_option("--c", c, "Stage-1 pair-collision target");
    cmd->add_option("--k", k, "Stage-1 pair-collision target (integer)");
    cmd->add_option("--budget", budget, "Cap on total samples");
    cmd->add_flag("--reuse-stage1", reuse, "Seed stage 2 with the stage-1 sample");
    cmd->add_flag("--json", json, "Emit the verdict as JSON");
  }

  int run(std::istream& in, std::ostream& out, std::ostream& err) {
    check_eps(eps);
    if (c && !(*c >= 1.0)) throw UsageError("--c: must be >= 1, got " + fmt(*c));
    if (k3 && *k3 < 1) throw UsageError("--k3: must be >= 1");
    TesterConfig config;
    config.k3_override = k3;
    config.fresh_stage2 = !reuse;
    if (k) {
      config.estimator.k_override = k;
    } else if (c) {
      config.estimator.k_override = static_cast<std::uint64_t>(std::ceil(*c));
    }
    config.sample_budget = budget;
    config.estimator.sample_budget = budget;
    if (source.streaming() && !budget) {
      // A stream bounds itself; let exhaustion rather than the default cap
      // end the run.
      config.sample_budget = std::numeric_limits<std::uint64_t>::max();
      config.estimator.sample_budget = config.sample_budget;
    }
    Source src = open_source(source, seed, in, err);
    const Verdict v = test_uniformity(*src.oracle, eps, config);
    if (json) {
      Json j;
      j["decision"] = std::string(decision_name(v.decision));
      j["n_estimate"] = v.n_estimate;
      j["delta_used"] = v.delta_used;
      j["k1_used"] = v.k1_used;
      j["k3_used"] = v.k3_used;
      j["m_budget"] = v.m_budget;
      j["stage1_samples"] = v.stage1_samples;
      j["stage2_samples"] = v.stage2_samples;
      j["t3_final"] = count_json(v.t3_final);
      out << j.dump(2) << '\n';
    } else {
      out << decision_name(v.decision) << ": N=" << fmt(v.n_estimate)
          << " M=" << v.m_budget << " t3=" << to_string_u128(v.t3_final)
          << "/" << v.k3_used << " samples=" << v.stage1_samples << "+"
          << v.stage2_samples << '\n';
    }
    return v.decision == Decision::kAccept ? kExitAccept : kExitReject;
  }
};

// --- estimate-l2 ------------------------------------------------------------

struct EstimateCmd {
  SourceFlags source;
  SeedFlag seed;
  double eps = 0.0;
  std::optional<double> c;
  std::optional<std::uint64_t> k;
  std::optional<std::uint64_t> budget;
  bool json = false;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("estimate-l2", "Estimate ||p||_2^2 from collisions");
    source.add(cmd, true);
    seed.add(cmd);
    cmd->add_option("--eps", eps, "Relative accuracy in (0, 0.5]")->required();
    cmd->add_option("--c", c, "Collision constant (target is ceil(c / eps^4))");
    cmd->add_option("--k", k, "Collision target, overriding --c");
    cmd->add_option("--budget", budget, "Cap on samples");
    cmd->add_flag("--json", json, "Emit the estimate as JSON");
  }

  int run(std::istream& in, std::ostream& out, std::ostream& err) {
    check_eps(eps);
    if (c && !(*c > 0.0)) throw UsageError("--c: must be > 0, got " + fmt(*c));
    if (k && *k < 1) throw UsageError("--k: must be >= 1");
    EstimatorConfig config;
    if (c) config.c_constant = *c;
    config.k_override = k;
    config.sample_budget = budget;
    if (source.streaming() && !budget) {
      config.sample_budget = std::numeric_limits<std::uint64_t>::max();
    }
    Source src = open_source(source, seed, in, err);
    const L2Estimate e = estimate_l2_squared(*src.oracle, eps, config);
    if (json) {
      Json j;
      j["gamma"] = e.gamma;
      j["m"] = e.m;
      j["k"] = e.k;
      j["s2_final"] = count_json(e.s2_final);
      out << j.dump(2) << '\n';
    } else {
      out << "gamma=" << fmt(e.gamma) << " m=" << e.m << " k=" << e.k
          << " s2=" << to_string_u128(e.s2_final) << '\n';
    }
    return kExitAccept;
  }
};

// --- lowerbound -------------------------------------------------------------

struct LowerBoundCmd {
  SourceFlags source;
  std::uint64_t kcap = 0;
  int jmax = 3;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand(
        "lowerbound", "Largest k at which q and its matched uniform look alike");
    source.add(cmd, false);
    cmd->add_option("--kcap", kcap, "Largest k to examine")->required();
    cmd->add_option("--jmax", jmax, "Minimum moment truncation (>= 3)");
  }

  int run(std::ostream& out, std::ostream& err) {
    if (kcap < 1) throw UsageError("--kcap: must be >= 1");
    if (jmax < 3) throw UsageError("--jmax: must be >= 3, got " + std::to_string(jmax));
    const Distribution q = load_target(source);
    const auto search = max_indistinguishable_k(q, kcap, jmax);
    out << "k,linf_ok,discrepancy,tail,passes\n";
    for (const auto& r : search.evaluated) {
      char line[160];
      std::snprintf(line, sizeof(line), "%llu,%d,%.17g,%.17g,%d\n",
                    static_cast<unsigned long long>(r.k), r.linf_ok ? 1 : 0,
                    r.discrepancy, r.tail, r.passes ? 1 : 0);
      out << line;
    }
    err << "k*=" << search.best.k
        << " k*.l3=" << fmt(search.best.k * std::cbrt(norms(q, 3).l3_cubed))
        << " matched_support=" << search.matched_support
        << " rounding_error=" << fmt(search.rounding_error)
        << (search.monotone ? "" : " (pass/fail not monotone in k)") << '\n';
    return kExitAccept;
  }
};

// --- gen-dist ---------------------------------------------------------------

struct GenDistCmd {
  std::string family;
  std::string path;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("gen-dist", "Write a family to a distribution file");
    cmd->add_option("--family", family, "Family spec")->required();
    cmd->add_option("--out", path, "Output file")->required();
  }

  int run() {
    write_distribution_file(path, realize(parse_family(family)));
    return kExitAccept;
  }
};

// --- experiment -------------------------------------------------------------

struct ExperimentCmd {
  std::string scenario_path;
  std::string csv_path;
  SeedFlag seed;
  std::optional<unsigned> threads;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("experiment", "Run a Monte Carlo scenario");
    cmd->add_option("--scenario", scenario_path, "Scenario file")->required();
    cmd->add_option("--out-csv", csv_path, "Per-trial CSV output")->required();
    seed.add(cmd);
    cmd->add_option("--threads", threads, "Worker threads (0: all cores)");
  }

  int run(std::ostream& out, std::ostream& err) {
    Scenario s = read_scenario_file(scenario_path);
    if (seed.value || !s.seed_set) s.seed_base = seed.resolve(err);
    if (threads) s.threads = *threads;
    const TrialStats stats = run_trials(s);
    std::ofstream csv(csv_path);
    if (!csv) throw Error(ErrorCode::kParse, "cannot write " + csv_path);
    csv << trials_csv(s, stats);
    out << summary_json(s, stats);
    return kExitAccept;
  }
};

// --- lemma-check ------------------------------------------------------------

struct LemmaCmd {
  std::uint64_t count = 1000;
  std::size_t max_points = 64;
  SeedFlag seed;

  void add(CLI::App& app) {
    auto* cmd = app.add_subcommand("lemma-check",
                                   "Check the structural inequalities on random instances");
    cmd->add_option("--count", count, "Number of random distributions");
    cmd->add_option("--max-points", max_points, "Largest support, in [1, 64]");
    seed.add(cmd);
  }

  int run(std::ostream& out, std::ostream& err) {
    if (max_points < 1 || max_points > 64) {
      throw UsageError("--max-points: must lie in [1, 64], got " +
                       std::to_string(max_points));
    }
    const auto report = lemma_sweep(count, max_points, seed.resolve(err));
    Json j;
    j["instances"] = report.instances;
    j["holder_checks"] = report.holder_checks;
    j["gap_checks"] = report.gap_checks;
    j["uniform_instances"] = report.uniform_instances;
    j["lemma_hypotheses_met"] = report.lemma_hypotheses_met;
    Json violations = Json::array();
    for (const auto& v : report.violations) {
      violations.push_back({{"check", v.check},
                            {"instance", v.instance},
                            {"seed", v.seed},
                            {"detail", v.detail}});
    }
    j["violations"] = violations;
    out << j.dump(2) << '\n';
    return report.violations.empty() ? kExitAccept : kExitReject;
  }
};

bool is_usage_code(ErrorCode code) {
  return code == ErrorCode::kEpsOutOfRange ||
         code == ErrorCode::kBadFamilyParams ||
         code == ErrorCode::kInvalidArgument;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::istream& in,
             std::ostream& out, std::ostream& err) {
  CLI::App app{"Generalized uniformity testing", "uniformity"};
  app.require_subcommand(1);
  TestCmd test;
  EstimateCmd estimate;
  LowerBoundCmd lowerbound;
  GenDistCmd gen_dist;
  ExperimentCmd experiment;
  LemmaCmd lemma;
  test.add(app);
  estimate.add(app);
  lowerbound.add(app);
  gen_dist.add(app);
  experiment.add(app);
  lemma.add(app);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return kExitUsage;
  }

  try {
    if (app.got_subcommand("test")) return test.run(in, out, err);
    if (app.got_subcommand("estimate-l2")) return estimate.run(in, out, err);
    if (app.got_subcommand("lowerbound")) return lowerbound.run(out, err);
    if (app.got_subcommand("gen-dist")) return gen_dist.run();
    if (app.got_subcommand("experiment")) return experiment.run(out, err);
    if (app.got_subcommand("lemma-check")) return lemma.run(out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const SamplingError& e) {
    print_sampling_failure(e, err);
    return kExitRuntime;
  } catch (const Error& e) {
    err << error_name(e.code()) << ": " << e.what() << '\n';
    return is_usage_code(e.code()) ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace uniformity::cli
