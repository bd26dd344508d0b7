#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace uniformity {

// Tolerance on the total mass of a stored distribution.
inline constexpr double kStoredMassTolerance = 1e-9;
// Tolerance accepted by validate before the input is rejected.
inline constexpr double kInputMassTolerance = 1e-6;

struct Entry {
  std::string label;
  double prob = 0.0;
};

// Explicit finite pmf over opaque labels. Zero-mass entries are allowed.
// Instances can only be obtained through validate(), so every Distribution
// in circulation satisfies the invariants.
class Distribution {
 public:
  Distribution() = default;

  std::size_t size() const noexcept { return entries_.size(); }
  const std::vector<Entry>& entries() const noexcept { return entries_; }
  const Entry& operator[](std::size_t i) const { return entries_[i]; }

  // Probabilities in entry order.
  std::vector<double> probs() const;
  // Number of entries with strictly positive mass.
  std::size_t positive_support() const noexcept;

 private:
  friend Distribution validate(std::vector<Entry> raw);
  explicit Distribution(std::vector<Entry> entries)
      : entries_(std::move(entries)) {}

  std::vector<Entry> entries_;
};

// Checks the invariants, renormalizing when the mass is off by more than
// kStoredMassTolerance but no more than kInputMassTolerance. Entry order is
// preserved.
Distribution validate(std::vector<Entry> raw);

// Convenience: labels "0", "1", ... for the given probabilities.
Distribution from_probs(std::span<const double> probs);

struct NormSummary {
  double l1 = 0.0;
  double l2_sq = 0.0;     // ||p||_2^2
  double l3_cubed = 0.0;  // ||p||_3^3
  double linf = 0.0;
  // power_sums[j] = ||p||_j^j for 1 <= j <= j_max; index 0 unused.
  std::vector<double> power_sums;

  int j_max() const noexcept {
    return static_cast<int>(power_sums.size()) - 1;
  }
  double power_sum(int j) const { return power_sums.at(j); }
  // ||p||_j
  double norm(int j) const;
};

// Exact power sums, accumulated in descending-probability order.
NormSummary norms(const Distribution& p, int j_max = 3);

// sum_i |x_i|^j for an arbitrary real vector, descending-magnitude order.
double power_sum(std::span<const double> x, int j);

// ||p||_3^3 - ||p||_2^4. Zero exactly on the uniform class.
double uniformity_gap(const Distribution& p);

// Half the l1 distance over the union of labels.
double tv_distance(const Distribution& p, const Distribution& q);

struct UniformClassDistance {
  double distance = 0.0;
  std::size_t best_support_size = 0;
  std::vector<std::string> best_support;
};

// Exact distance from p to the set of distributions uniform on some subset
// of the domain. For a fixed support size s the best subset is the s
// heaviest labels, padded with fresh zero-mass labels when s exceeds the
// positive support, so the search is over s in [1, s_max] only.
// s_max defaults to twice the positive support.
UniformClassDistance tv_to_uniform_class(
    const Distribution& p, std::optional<std::size_t> s_max = std::nullopt);

// 9 * cbrt(delta + 3 eps); requires eps, delta in (0, 0.04). Not clamped.
double norms_to_distance_bound(double eps, double delta);

// `<label>,<prob>` per line, '#' comments.
Distribution read_distribution(std::istream& in);
Distribution read_distribution_file(const std::string& path);
void write_distribution(std::ostream& out, const Distribution& p);
void write_distribution_file(const std::string& path, const Distribution& p);

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) noexcept;
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace uniformity
