#include "uniformity/lowerbound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <unordered_set>

#include "uniformity/error.hpp"

namespace uniformity {

namespace {

constexpr int kMaxTruncation = 20000;

// k^j * s without overflowing k^j when the product itself is representable.
double scaled_moment(double k, double power_sum, int j) {
  if (power_sum == 0.0) return 0.0;
  const double kj = std::pow(k, j);
  if (std::isfinite(kj)) return kj * power_sum;
  return std::exp(j * std::log(k) + std::log(power_sum));
}

double geometric_tail(double x, int j_max) {
  return std::pow(x, j_max + 1) / (1.0 - x);
}

// Power sums of one distribution, extended on demand.
class PowerSums {
 public:
  explicit PowerSums(const Distribution& p) : p_(&p), sums_(norms(p, 3)) {}

  const NormSummary& upto(int j_max) {
    if (sums_.j_max() < j_max) {
      sums_ = norms(*p_, std::max(j_max, 2 * sums_.j_max()));
    }
    return sums_;
  }
  double l3() { return std::cbrt(upto(3).l3_cubed); }
  double linf() { return sums_.linf; }

 private:
  const Distribution* p_;
  NormSummary sums_;
};

Discrepancy discrepancy_from(PowerSums& yes, PowerSums& no, std::uint64_t k,
                             int j_max) {
  const double dk = static_cast<double>(k);
  const double x_yes = dk * yes.l3();
  const double x_no = dk * no.l3();
  if (!(x_yes < 1.0) || !(x_no < 1.0)) {
    throw Error(ErrorCode::kTailDiverges,
                "k * ||.||_3 >= 1 at k = " + std::to_string(k) +
                    "; the moment sum has no certified tail");
  }
  const auto tail_at = [&](int j) {
    return geometric_tail(x_yes, j) + geometric_tail(x_no, j);
  };
  int truncation = std::max(j_max, 3);
  while (tail_at(truncation) >= kTailTarget && truncation < kMaxTruncation) {
    ++truncation;
  }

  const NormSummary& sy = yes.upto(truncation);
  const NormSummary& sn = no.upto(truncation);
  CompensatedSum partial;
  for (int j = 2; j <= truncation; ++j) {
    const double my = scaled_moment(dk, sy.power_sum(j), j);
    const double mn = scaled_moment(dk, sn.power_sum(j), j);
    partial.add(std::abs(my - mn) / std::sqrt(1.0 + std::max(my, mn)));
  }
  Discrepancy out;
  out.partial = partial.value();
  out.tail = tail_at(truncation);
  out.j_max = truncation;
  return out;
}

IndistinguishabilityReport evaluate(PowerSums& yes, PowerSums& no,
                                    std::uint64_t k, int j_max) {
  IndistinguishabilityReport r;
  r.k = k;
  const double cap = 1.0 / (500.0 * static_cast<double>(k));
  r.linf_ok = yes.linf() <= cap && no.linf() <= cap;
  try {
    const auto d = discrepancy_from(yes, no, k, j_max);
    r.discrepancy = d.partial;
    r.tail = d.tail;
    r.discrepancy_ok = d.total() < kDiscrepancyThreshold;
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kTailDiverges) throw;
    r.discrepancy = std::numeric_limits<double>::infinity();
    r.tail = std::numeric_limits<double>::infinity();
    r.discrepancy_ok = false;
  }
  r.passes = r.linf_ok && r.discrepancy_ok;
  return r;
}

}  // namespace

MomentProfile k_moments(const Distribution& p, std::uint64_t k, int j_max) {
  if (k < 1 || j_max < 3) {
    throw Error(ErrorCode::kInvalidArgument, "k_moments needs k >= 1, j_max >= 3");
  }
  const NormSummary sums = norms(p, j_max);
  const double dk = static_cast<double>(k);
  MomentProfile out;
  out.k = k;
  out.j_max = j_max;
  out.moments.assign(static_cast<std::size_t>(j_max) + 1, 0.0);
  for (int j = 2; j <= j_max; ++j) {
    out.moments[j] = scaled_moment(dk, sums.power_sum(j), j);
  }
  out.linf = sums.linf;
  out.l3 = std::cbrt(sums.l3_cubed);
  const double x = dk * out.l3;
  if (x < 1.0) out.tail_bound = geometric_tail(x, j_max);
  return out;
}

Discrepancy wishful_discrepancy(const Distribution& yes, const Distribution& no,
                                std::uint64_t k, int j_max) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  PowerSums sy(yes);
  PowerSums sn(no);
  return discrepancy_from(sy, sn, k, j_max);
}

MatchedUniform build_matched_uniform(const Distribution& q) {
  MatchedUniform out;
  out.ideal_support = 1.0 / norms(q, 3).l2_sq;
  out.support = std::max<std::uint64_t>(
      1, static_cast<std::uint64_t>(std::llround(out.ideal_support)));
  out.rounding_error =
      std::abs(static_cast<double>(out.support) - out.ideal_support) /
      out.ideal_support;

  std::unordered_set<std::string_view> taken;
  for (const auto& e : q.entries()) taken.insert(e.label);
  std::vector<Entry> raw;
  raw.reserve(out.support);
  const double mass = 1.0 / static_cast<double>(out.support);
  for (std::uint64_t i = 0; raw.size() < out.support; ++i) {
    std::string label = "~u" + std::to_string(i);
    if (taken.count(label) == 0) raw.push_back({std::move(label), mass});
  }
  out.yes = validate(std::move(raw));
  return out;
}

IndistinguishabilityReport evaluate_indistinguishability(
    const Distribution& yes, const Distribution& no, std::uint64_t k,
    int j_max) {
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
  PowerSums sy(yes);
  PowerSums sn(no);
  return evaluate(sy, sn, k, j_max);
}

IndistinguishabilitySearch max_indistinguishable_k(const Distribution& q,
                                                   std::uint64_t k_cap,
                                                   int j_max) {
  if (k_cap < 1) {
    throw Error(ErrorCode::kInvalidArgument, "k_cap must be at least 1");
  }
  const MatchedUniform matched = build_matched_uniform(q);
  PowerSums yes(matched.yes);
  PowerSums no(q);

  IndistinguishabilitySearch out;
  out.rounding_error = matched.rounding_error;
  out.matched_support = matched.support;

  std::vector<std::uint64_t> grid;
  for (std::uint64_t k = 1; k < k_cap; k *= 2) {
    grid.push_back(k);
    if (k > k_cap / 2) break;
  }
  if (grid.empty() || grid.back() != k_cap) grid.push_back(k_cap);

  std::optional<std::size_t> best_index;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    out.evaluated.push_back(evaluate(yes, no, grid[i], j_max));
    if (out.evaluated.back().passes) best_index = i;
  }
  if (!best_index) {
    throw Error(ErrorCode::kNoPassingK,
                "no k in [1, " + std::to_string(k_cap) +
                    "] satisfies both indistinguishability conditions");
  }

  out.best = out.evaluated[*best_index];
  if (*best_index + 1 < grid.size()) {
    std::uint64_t lo = grid[*best_index];
    std::uint64_t hi = grid[*best_index + 1];
    while (hi - lo > 1) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      out.evaluated.push_back(evaluate(yes, no, mid, j_max));
      if (out.evaluated.back().passes) {
        lo = mid;
        out.best = out.evaluated.back();
      } else {
        hi = mid;
      }
    }
  }

  std::sort(out.evaluated.begin(), out.evaluated.end(),
            [](const auto& a, const auto& b) { return a.k < b.k; });
  bool seen_failure = false;
  for (const auto& r : out.evaluated) {
    if (!r.passes) seen_failure = true;
    if (r.passes && seen_failure) out.monotone = false;
  }
  return out;
}

}  // namespace uniformity
