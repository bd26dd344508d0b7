#include "uniformity/core.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "uniformity/error.hpp"

namespace uniformity {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<double> sorted_descending(std::vector<double> values) {
  std::sort(values.begin(), values.end(), std::greater<>());
  return values;
}

}  // namespace

void CompensatedSum::add(double x) noexcept {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

std::vector<double> Distribution::probs() const {
  std::vector<double> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.push_back(e.prob);
  return out;
}

std::size_t Distribution::positive_support() const noexcept {
  return static_cast<std::size_t>(std::count_if(
      entries_.begin(), entries_.end(),
      [](const Entry& e) { return e.prob > 0.0; }));
}

Distribution validate(std::vector<Entry> raw) {
  std::unordered_set<std::string_view> seen;
  seen.reserve(raw.size());
  CompensatedSum total;
  for (const auto& e : raw) {
    if (!(e.prob >= 0.0) || !std::isfinite(e.prob)) {
      throw Error(ErrorCode::kNegativeMass,
                  "label '" + e.label + "' has invalid mass " +
                      std::to_string(e.prob));
    }
    if (!seen.insert(e.label).second) {
      throw Error(ErrorCode::kDuplicateLabel,
                  "label '" + e.label + "' appears more than once");
    }
    total.add(e.prob);
  }
  const double sum = total.value();
  if (std::abs(sum - 1.0) > kInputMassTolerance) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "total mass " << sum << " differs from 1 by more than "
        << kInputMassTolerance;
    throw Error(ErrorCode::kMassNotOne, msg.str());
  }
  if (std::abs(sum - 1.0) > kStoredMassTolerance) {
    for (auto& e : raw) e.prob /= sum;
  }
  return Distribution(std::move(raw));
}

Distribution from_probs(std::span<const double> probs) {
  std::vector<Entry> raw;
  raw.reserve(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) {
    raw.push_back({std::to_string(i), probs[i]});
  }
  return validate(std::move(raw));
}

double NormSummary::norm(int j) const {
  return std::pow(power_sum(j), 1.0 / j);
}

NormSummary norms(const Distribution& p, int j_max) {
  if (j_max < 3) {
    throw Error(ErrorCode::kInvalidArgument, "norms requires j_max >= 3");
  }
  const auto sorted = sorted_descending(p.probs());
  std::vector<CompensatedSum> sums(static_cast<std::size_t>(j_max) + 1);
  for (double x : sorted) {
    double power = x;
    for (int j = 1; j <= j_max; ++j) {
      sums[j].add(power);
      power *= x;
    }
  }
  NormSummary out;
  out.power_sums.resize(sums.size(), 0.0);
  for (int j = 1; j <= j_max; ++j) out.power_sums[j] = sums[j].value();
  out.l1 = out.power_sums[1];
  out.l2_sq = out.power_sums[2];
  out.l3_cubed = out.power_sums[3];
  out.linf = sorted.empty() ? 0.0 : sorted.front();
  return out;
}

double power_sum(std::span<const double> x, int j) {
  std::vector<double> magnitudes;
  magnitudes.reserve(x.size());
  for (double v : x) magnitudes.push_back(std::abs(v));
  magnitudes = sorted_descending(std::move(magnitudes));
  CompensatedSum sum;
  for (double v : magnitudes) {
    double power = 1.0;
    for (int i = 0; i < j; ++i) power *= v;
    sum.add(power);
  }
  return sum.value();
}

double uniformity_gap(const Distribution& p) {
  const auto n = norms(p, 3);
  return n.l3_cubed - n.l2_sq * n.l2_sq;
}

double tv_distance(const Distribution& p, const Distribution& q) {
  std::unordered_map<std::string_view, double> q_mass;
  q_mass.reserve(q.size());
  for (const auto& e : q.entries()) q_mass.emplace(e.label, e.prob);

  CompensatedSum sum;
  for (const auto& e : p.entries()) {
    const auto it = q_mass.find(e.label);
    const double other = it == q_mass.end() ? 0.0 : it->second;
    sum.add(std::abs(e.prob - other));
    if (it != q_mass.end()) q_mass.erase(it);
  }
  // Labels present only in q, visited in q's order.
  for (const auto& e : q.entries()) {
    if (q_mass.count(e.label) != 0) sum.add(e.prob);
  }
  return std::clamp(0.5 * sum.value(), 0.0, 1.0);
}

UniformClassDistance tv_to_uniform_class(const Distribution& p,
                                         std::optional<std::size_t> s_max) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return p[a].prob > p[b].prob;
                   });

  const std::size_t n_pos = p.positive_support();
  const std::size_t limit = s_max.value_or(2 * n_pos);
  if (limit < 1) {
    throw Error(ErrorCode::kInvalidSMax, "s_max must be at least 1");
  }

  // prefix[i] = mass of the i heaviest labels.
  std::vector<double> heavy(n_pos);
  std::vector<double> prefix(n_pos + 1, 0.0);
  CompensatedSum running;
  for (std::size_t i = 0; i < n_pos; ++i) {
    heavy[i] = p[order[i]].prob;
    running.add(heavy[i]);
    prefix[i + 1] = running.value();
  }

  double best = 2.0;
  std::size_t best_s = 1;
  for (std::size_t s = 1; s <= limit; ++s) {
    const double level = 1.0 / static_cast<double>(s);
    // Labels at or above the uniform level contribute nothing to the
    // deficit sum_{i <= s} max(0, 1/s - p_i).
    const auto above = static_cast<std::size_t>(
        std::upper_bound(heavy.begin(), heavy.end(), level,
                         [](double lvl, double x) { return lvl > x; }) -
        heavy.begin());
    const std::size_t k = std::min(above, s);
    const std::size_t covered = std::min(s, n_pos);
    const double deficit =
        static_cast<double>(s - k) * level - (prefix[covered] - prefix[k]);
    const double d = std::max(deficit, 0.0);
    if (d < best) {
      best = d;
      best_s = s;
    }
  }

  UniformClassDistance out;
  out.distance = std::min(best, 1.0);
  out.best_support_size = best_s;
  out.best_support.reserve(best_s);
  for (std::size_t i = 0; i < std::min(best_s, p.size()); ++i) {
    out.best_support.push_back(p[order[i]].label);
  }
  if (best_s > p.size()) {
    std::unordered_set<std::string_view> taken;
    for (const auto& e : p.entries()) taken.insert(e.label);
    std::size_t fresh = 0;
    while (out.best_support.size() < best_s) {
      std::string candidate = "~pad" + std::to_string(fresh++);
      if (taken.count(candidate) == 0) {
        out.best_support.push_back(std::move(candidate));
      }
    }
  }
  return out;
}

double norms_to_distance_bound(double eps, double delta) {
  const auto in_range = [](double x) { return x > 0.0 && x < 0.04; };
  if (!in_range(eps) || !in_range(delta)) {
    throw Error(ErrorCode::kHypothesisOutOfRange,
                "eps and delta must lie in (0, 0.04)");
  }
  return 9.0 * std::cbrt(delta + 3.0 * eps);
}

Distribution read_distribution(std::istream& in) {
  std::vector<Entry> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    const auto comma = body.find(',');
    if (comma == std::string::npos ||
        body.find(',', comma + 1) != std::string::npos) {
      throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) +
                                         ": expected `<label>,<prob>`");
    }
    std::string label = trim(std::string_view(body).substr(0, comma));
    const std::string number = trim(std::string_view(body).substr(comma + 1));
    char* end = nullptr;
    const double prob = std::strtod(number.c_str(), &end);
    if (label.empty() || number.empty() || *end != '\0') {
      throw Error(ErrorCode::kParse,
                  "line " + std::to_string(line_no) + ": malformed entry");
    }
    raw.push_back({std::move(label), prob});
  }
  return validate(std::move(raw));
}

Distribution read_distribution_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kParse, "cannot open " + path);
  return read_distribution(in);
}

void write_distribution(std::ostream& out, const Distribution& p) {
  char buf[64];
  for (const auto& e : p.entries()) {
    if (e.label.find_first_of(",\n\r") != std::string::npos ||
        e.label.empty() || e.label.front() == '#' ||
        trim(e.label) != e.label) {
      throw Error(ErrorCode::kInvalidArgument,
                  "label '" + e.label + "' cannot be written");
    }
    std::snprintf(buf, sizeof(buf), "%.17g", e.prob);
    out << e.label << ',' << buf << '\n';
  }
}

void write_distribution_file(const std::string& path, const Distribution& p) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kParse, "cannot open " + path);
  write_distribution(out, p);
}

}  // namespace uniformity
