#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "oracles.hpp"
#include "uniformity/core.hpp"
#include "uniformity/error.hpp"
#include "uniformity/sampling.hpp"

namespace uniformity {
namespace {

ErrorCode code_of(const auto& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::kInvalidArgument;
}

Distribution probs(std::initializer_list<double> xs) {
  return from_probs(std::vector<double>(xs));
}

TEST(Validate, AcceptsAndPreservesOrder) {
  const auto p = validate({{"b", 0.5}, {"a", 0.5}});
  ASSERT_EQ(p.size(), 2u);
  EXPECT_EQ(p[0].label, "b");
  EXPECT_EQ(p[1].label, "a");
}

TEST(Validate, RejectsBadInput) {
  EXPECT_EQ(code_of([] { validate({{"a", 0.5}, {"a", 0.5}}); }),
            ErrorCode::kDuplicateLabel);
  EXPECT_EQ(code_of([] { validate({{"a", 0.3}, {"b", 0.3}}); }),
            ErrorCode::kMassNotOne);
  EXPECT_EQ(code_of([] { validate({{"a", 1.5}, {"b", -0.5}}); }),
            ErrorCode::kNegativeMass);
  EXPECT_EQ(code_of([] { validate({{"a", NAN}}); }), ErrorCode::kNegativeMass);
}

TEST(Validate, RenormalizesWithinInputTolerance) {
  const auto p = validate({{"a", 0.5 + 4e-7}, {"b", 0.5}});
  EXPECT_NEAR(norms(p).l1, 1.0, 1e-12);
  EXPECT_EQ(code_of([] { validate({{"a", 0.5 + 2e-6}, {"b", 0.5}}); }),
            ErrorCode::kMassNotOne);
}

TEST(Validate, AllowsZeroMass) {
  const auto p = validate({{"a", 1.0}, {"z", 0.0}});
  EXPECT_EQ(p.positive_support(), 1u);
}

TEST(Norms, UniformFour) {
  const auto s = norms(realize(UniformFamily{4}));
  EXPECT_DOUBLE_EQ(s.l2_sq, 0.25);
  EXPECT_DOUBLE_EQ(s.l3_cubed, 0.0625);
  EXPECT_DOUBLE_EQ(s.linf, 0.25);
}

TEST(Norms, PointMass) {
  const auto s = norms(probs({1.0}));
  EXPECT_EQ(s.l2_sq, 1.0);
  EXPECT_EQ(s.l3_cubed, 1.0);
  EXPECT_EQ(s.linf, 1.0);
}

TEST(Norms, HalfQuarterQuarter) {
  const std::vector<double> raw{0.5, 0.25, 0.25};
  const auto s = norms(from_probs(raw), 6);
  EXPECT_DOUBLE_EQ(s.l2_sq, 0.375);
  EXPECT_DOUBLE_EQ(s.l3_cubed, 0.15625);
  for (int j = 1; j <= 6; ++j) {
    EXPECT_NEAR(s.power_sum(j), oracle::naive_power_sum(raw, j), 1e-15);
  }
}

TEST(Norms, RejectsSmallJMax) {
  EXPECT_EQ(code_of([] { norms(probs({1.0}), 2); }),
            ErrorCode::kInvalidArgument);
}

TEST(Norms, InvariantsOnRandomDistributions) {
  Xoshiro256 rng(41);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> w(1 + rng.next_below(40));
    double total = 0.0;
    for (auto& x : w) total += (x = rng.next_double());
    for (auto& x : w) x /= total;
    const auto s = norms(from_probs(w), 8);
    EXPECT_NEAR(s.l1, 1.0, 1e-9);
    for (int j = 2; j <= 8; ++j) {
      EXPECT_LE(std::pow(s.l2_sq, j - 1), s.power_sum(j) + 1e-12);
      EXPECT_LE(s.linf, s.norm(j) + 1e-15);
    }
  }
}

TEST(Norms, VectorHolderChain) {
  Xoshiro256 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(1 + rng.next_below(30));
    for (auto& v : x) v = 10.0 * rng.next_double();
    const double l1 = power_sum(x, 1);
    for (int j = 2; j <= 8; ++j) {
      const double lhs = std::pow(power_sum(x, 2), j - 1);
      const double rhs = std::pow(l1, j - 2) * power_sum(x, j);
      EXPECT_LE(lhs, rhs * (1.0 + 1e-12) + 1e-12);
    }
  }
}

TEST(Gap, Examples) {
  EXPECT_NEAR(uniformity_gap(realize(UniformFamily{10})), 0.0, 1e-12);
  EXPECT_NEAR(uniformity_gap(probs({0.6, 0.4})), 0.0096, 1e-15);
  EXPECT_EQ(uniformity_gap(probs({1.0})), 0.0);
}

TEST(TvDistance, Examples) {
  const auto p = probs({0.6, 0.4});
  EXPECT_EQ(tv_distance(p, p), 0.0);
  EXPECT_EQ(tv_distance(validate({{"a", 1.0}}), validate({{"b", 1.0}})), 1.0);
  EXPECT_NEAR(tv_distance(p, probs({0.5, 0.5})), 0.1, 1e-15);
}

TEST(TvDistance, TriangleAndRelabeling) {
  Xoshiro256 rng(5);
  const auto random_dist = [&](std::size_t n) {
    std::vector<Entry> e;
    double total = 0.0;
    std::vector<double> w(n);
    for (auto& x : w) total += (x = rng.next_double());
    for (std::size_t i = 0; i < n; ++i) {
      e.push_back({"L" + std::to_string(rng.next_below(3 * n) * 100 + i),
                   w[i] / total});
    }
    return validate(std::move(e));
  };
  for (int trial = 0; trial < 200; ++trial) {
    const auto a = random_dist(1 + rng.next_below(10));
    const auto b = random_dist(1 + rng.next_below(10));
    const auto c = random_dist(1 + rng.next_below(10));
    EXPECT_LE(tv_distance(a, c), tv_distance(a, b) + tv_distance(b, c) + 1e-12);
    EXPECT_NEAR(tv_distance(a, b), tv_distance(b, a), 1e-15);
    // Apply one relabeling to both sides.
    const auto relabel = [](const Distribution& d) {
      std::vector<Entry> e;
      for (const auto& x : d.entries()) e.push_back({"r" + x.label, x.prob});
      std::reverse(e.begin(), e.end());
      return validate(std::move(e));
    };
    EXPECT_NEAR(tv_distance(relabel(a), relabel(b)), tv_distance(a, b), 1e-15);
  }
}

TEST(TvToClass, Examples) {
  const auto u7 = tv_to_uniform_class(realize(UniformFamily{7}));
  EXPECT_NEAR(u7.distance, 0.0, 1e-15);
  EXPECT_EQ(u7.best_support_size, 7u);

  const auto a = tv_to_uniform_class(probs({0.6, 0.4}));
  EXPECT_NEAR(a.distance, 0.1, 1e-15);
  EXPECT_EQ(a.best_support_size, 2u);

  const auto b = tv_to_uniform_class(probs({0.9, 0.1}));
  EXPECT_NEAR(b.distance, 0.1, 1e-15);
  EXPECT_EQ(b.best_support_size, 1u);
  EXPECT_EQ(b.best_support, std::vector<std::string>{"0"});
}

TEST(TvToClass, RejectsZeroSMax) {
  EXPECT_EQ(code_of([] { tv_to_uniform_class(probs({1.0}), 0); }),
            ErrorCode::kInvalidSMax);
}

TEST(TvToClass, PadsWithFreshLabels) {
  // Mass 0.5 on one label is closest to uniform on two labels.
  const auto r = tv_to_uniform_class(probs({0.5, 0.25, 0.25}), 6);
  EXPECT_EQ(r.best_support_size, r.best_support.size());
  const auto one = tv_to_uniform_class(validate({{"a", 0.55}, {"b", 0.45}}), 1);
  EXPECT_EQ(one.best_support_size, 1u);
  EXPECT_NEAR(one.distance, 0.45, 1e-15);
}

TEST(TvToClass, MatchesBruteForce) {
  Xoshiro256 rng(2024);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t n = 1 + rng.next_below(9);
    std::vector<double> w(n);
    double total = 0.0;
    for (auto& x : w) {
      x = rng.next_below(4) == 0 ? 0.0 : rng.next_double();
      total += x;
    }
    if (total == 0.0) w[0] = total = 1.0;
    for (auto& x : w) x /= total;
    const auto p = from_probs(w);
    const auto fast = tv_to_uniform_class(p);
    EXPECT_NEAR(fast.distance, oracle::brute_force_tv_to_class(w), 1e-12)
        << "trial " << trial;

    std::vector<Entry> u;
    for (const auto& label : fast.best_support) {
      u.push_back({label, 1.0 / static_cast<double>(fast.best_support.size())});
    }
    EXPECT_NEAR(tv_distance(p, validate(std::move(u))), fast.distance, 1e-12);
  }
}

TEST(TvToClass, ZeroIffUniformOnSupport) {
  const auto p = validate({{"a", 0.25}, {"b", 0.0}, {"c", 0.25}, {"d", 0.5}});
  EXPECT_GT(tv_to_uniform_class(p).distance, 0.0);
  const auto q = validate({{"a", 1.0 / 3}, {"b", 0.0}, {"c", 1.0 / 3}, {"d", 1.0 / 3}});
  EXPECT_NEAR(tv_to_uniform_class(q).distance, 0.0, 1e-12);
  EXPECT_NEAR(uniformity_gap(q), 0.0, 1e-12);
}

TEST(DistanceBound, Examples) {
  EXPECT_NEAR(norms_to_distance_bound(0.001, 0.001), 9.0 * std::cbrt(0.004),
              1e-15);
  EXPECT_NEAR(norms_to_distance_bound(0.001, 0.001), 1.42866, 1e-5);
  EXPECT_EQ(code_of([] { norms_to_distance_bound(0.04, 0.01); }),
            ErrorCode::kHypothesisOutOfRange);
  EXPECT_EQ(code_of([] { norms_to_distance_bound(0.01, 0.0); }),
            ErrorCode::kHypothesisOutOfRange);
  EXPECT_LT(norms_to_distance_bound(1e-15, 1e-15), 1e-3);
}

TEST(DistributionFile, RoundTrip) {
  const auto p = validate({{"apple", 0.1}, {"b c", 0.2}, {"z", 0.7}, {"0", 0.0}});
  std::stringstream buf;
  write_distribution(buf, p);
  const auto q = read_distribution(buf);
  ASSERT_EQ(q.size(), p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    EXPECT_EQ(q[i].label, p[i].label);
    EXPECT_EQ(q[i].prob, p[i].prob);
  }
}

TEST(DistributionFile, ParsesCommentsAndRejectsGarbage) {
  std::istringstream ok("# header\n\na, 0.5\n b ,0.5\n");
  const auto p = read_distribution(ok);
  EXPECT_EQ(p[0].label, "a");
  EXPECT_EQ(p[1].label, "b");
  std::istringstream bad("a,0.5,1\n");
  EXPECT_EQ(code_of([&] { read_distribution(bad); }), ErrorCode::kParse);
  std::istringstream bad_num("a,half\n");
  EXPECT_EQ(code_of([&] { read_distribution(bad_num); }), ErrorCode::kParse);
}

TEST(CompensatedSum, RecoversLostBits) {
  CompensatedSum s;
  s.add(1.0);
  for (int i = 0; i < 1000; ++i) s.add(1e-17);
  s.add(-1.0);
  EXPECT_NEAR(s.value(), 1e-14, 1e-20);
}

}  // namespace
}  // namespace uniformity
