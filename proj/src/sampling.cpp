#include "uniformity/sampling.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>

#include "uniformity/error.hpp"

namespace uniformity {

namespace {

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string format_number(std::uint64_t x) { return std::to_string(x); }

[[noreturn]] void bad_params(const std::string& what) {
  throw Error(ErrorCode::kBadFamilyParams, what);
}

std::uint64_t heavy_count(const BilevelFamily& f) {
  return static_cast<std::uint64_t>(
      std::llround(f.heavy_fraction * static_cast<double>(f.n)));
}

void check(const FamilySpec& spec) {
  std::visit(
      [](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if (f.n < 1) bad_params("n must be at least 1");
        if (f.n > 0xffffffffULL) bad_params("n exceeds 2^32 - 1 labels");
        if constexpr (std::is_same_v<T, BilevelFamily>) {
          if (!(f.heavy_fraction >= 0.0 && f.heavy_fraction <= 1.0)) {
            bad_params("bilevel: f must lie in [0, 1]");
          }
          if (!(f.tilt > -1.0)) bad_params("bilevel: t must exceed -1");
          if (!(f.heavy_fraction * (1.0 + f.tilt) < 1.0)) {
            bad_params("bilevel: requires f * (1 + t) < 1");
          }
          const auto h = heavy_count(f);
          const double heavy_mass =
              static_cast<double>(h) * (1.0 + f.tilt) / static_cast<double>(f.n);
          if (h >= f.n || !(heavy_mass < 1.0)) {
            bad_params("bilevel: heavy tier leaves no mass for the rest");
          }
        } else if constexpr (std::is_same_v<T, ZipfFamily>) {
          if (!std::isfinite(f.exponent) || f.exponent < 0.0) {
            bad_params("zipf: exponent must be finite and non-negative");
          }
        } else if constexpr (std::is_same_v<T, PointMassMixFamily>) {
          if (!(f.head_mass >= 0.0 && f.head_mass <= 1.0)) {
            bad_params("pointmassmix: head mass must lie in [0, 1]");
          }
          if (f.n == 1 && f.head_mass != 1.0) {
            bad_params("pointmassmix: n = 1 requires head mass 1");
          }
        }
      },
      spec);
}

}  // namespace

std::uint64_t splitmix64(std::uint64_t& state) noexcept {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Xoshiro256::Xoshiro256(std::uint64_t seed) noexcept {
  for (auto& word : s_) word = splitmix64(seed);
}

std::uint64_t Xoshiro256::next() noexcept {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Xoshiro256::next_double() noexcept {
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

std::uint64_t Xoshiro256::next_below(std::uint64_t bound) noexcept {
  const unsigned __int128 product =
      static_cast<unsigned __int128>(next()) * bound;
  return static_cast<std::uint64_t>(product >> 64);
}

AliasTable::AliasTable(std::span<const double> probs)
    : threshold_(probs.size(), 1.0), alias_(probs.size()) {
  const std::size_t n = probs.size();
  if (n == 0) {
    throw Error(ErrorCode::kInvalidArgument, "alias table needs entries");
  }
  std::vector<double> scaled(n);
  std::vector<std::uint32_t> small;
  std::vector<std::uint32_t> large;
  for (std::size_t i = 0; i < n; ++i) {
    alias_[i] = static_cast<std::uint32_t>(i);
    scaled[i] = probs[i] * static_cast<double>(n);
    (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
  }
  while (!small.empty() && !large.empty()) {
    const auto lo = small.back();
    small.pop_back();
    const auto hi = large.back();
    threshold_[lo] = scaled[lo];
    alias_[lo] = hi;
    scaled[hi] = (scaled[hi] + scaled[lo]) - 1.0;
    if (scaled[hi] < 1.0) {
      large.pop_back();
      small.push_back(hi);
    }
  }
  // Whatever remains is 1 up to rounding, except zero-mass columns, which
  // must never be returned.
  const auto heaviest = static_cast<std::uint32_t>(
      std::max_element(probs.begin(), probs.end()) - probs.begin());
  for (auto i : large) threshold_[i] = 1.0;
  for (auto i : small) {
    threshold_[i] = probs[i] > 0.0 ? 1.0 : 0.0;
    if (probs[i] == 0.0) alias_[i] = heaviest;
  }
}

std::size_t AliasTable::sample(Xoshiro256& rng) const noexcept {
  const auto column = static_cast<std::size_t>(rng.next_below(size()));
  return rng.next_double() < threshold_[column] ? column : alias_[column];
}

LabelId SampleOracle::pull() {
  if (auto id = try_pull()) return *id;
  throw Error(ErrorCode::kStreamExhausted,
              "sample stream exhausted after " + std::to_string(drawn()) +
                  " samples");
}

SyntheticOracle::SyntheticOracle(Distribution p, std::uint64_t seed)
    : rng_(seed) {
  AliasTable table(p.probs());
  model_ = std::make_shared<const Model>(Model{std::move(p), std::move(table)});
}

SyntheticOracle::SyntheticOracle(const SyntheticOracle& other,
                                 std::uint64_t seed)
    : model_(other.model_), rng_(seed) {}

std::optional<LabelId> SyntheticOracle::try_pull() {
  count_draw();
  return static_cast<LabelId>(model_->table.sample(rng_));
}

std::string SyntheticOracle::label_name(LabelId id) const {
  return model_->p[id].label;
}

StreamOracle::StreamOracle(std::istream& in) : in_(&in) {}

std::optional<LabelId> StreamOracle::try_pull() {
  std::string line;
  while (std::getline(*in_, line)) {
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r");
    std::string token = line.substr(first, last - first + 1);
    auto [it, inserted] =
        ids_.try_emplace(std::move(token), static_cast<LabelId>(names_.size()));
    if (inserted) names_.push_back(it->first);
    count_draw();
    return it->second;
  }
  return std::nullopt;
}

std::string StreamOracle::label_name(LabelId id) const { return names_.at(id); }

std::unique_ptr<SampleOracle> make_synthetic(const Distribution& p,
                                             std::uint64_t seed) {
  return std::make_unique<SyntheticOracle>(p, seed);
}

std::unique_ptr<SampleOracle> make_stream(std::istream& in) {
  return std::make_unique<StreamOracle>(in);
}

FamilySpec parse_family(std::string_view text) {
  const auto colon = text.find(':');
  const std::string name(text.substr(0, colon));
  std::map<std::string, std::string, std::less<>> params;
  if (colon != std::string_view::npos) {
    std::string_view rest = text.substr(colon + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const auto item = rest.substr(0, comma);
      const auto eq = item.find('=');
      if (eq == std::string_view::npos || eq == 0) {
        bad_params("malformed parameter '" + std::string(item) + "'");
      }
      const std::string key(item.substr(0, eq));
      if (!params.emplace(key, std::string(item.substr(eq + 1))).second) {
        bad_params("duplicate parameter " + key);
      }
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
  }

  const auto take = [&](std::initializer_list<const char*> keys)
      -> std::optional<std::string> {
    std::optional<std::string> found;
    for (const char* key : keys) {
      auto it = params.find(key);
      if (it == params.end()) continue;
      if (found) bad_params(std::string("duplicate parameter ") + key);
      found = it->second;
      params.erase(it);
    }
    return found;
  };
  const auto real = [&](std::initializer_list<const char*> keys) {
    const auto value = take(keys);
    if (!value) bad_params(name + ": missing parameter " + *keys.begin());
    double x = 0.0;
    const auto res =
        std::from_chars(value->data(), value->data() + value->size(), x);
    if (res.ec != std::errc() || res.ptr != value->data() + value->size()) {
      bad_params(name + ": bad number '" + *value + "'");
    }
    return x;
  };
  const auto count = [&]() {
    const auto value = take({"n"});
    if (!value) bad_params(name + ": missing parameter n");
    std::uint64_t n = 0;
    const auto res =
        std::from_chars(value->data(), value->data() + value->size(), n);
    if (res.ec != std::errc() || res.ptr != value->data() + value->size()) {
      bad_params(name + ": bad integer '" + *value + "'");
    }
    return n;
  };

  FamilySpec spec;
  if (name == "uniform") {
    spec = UniformFamily{count()};
  } else if (name == "bilevel") {
    BilevelFamily f;
    f.n = count();
    f.heavy_fraction = real({"f", "heavy_fraction"});
    f.tilt = real({"t", "tilt"});
    spec = f;
  } else if (name == "zipf") {
    ZipfFamily f;
    f.n = count();
    f.exponent = real({"s", "exponent"});
    spec = f;
  } else if (name == "pointmassmix") {
    PointMassMixFamily f;
    f.n = count();
    f.head_mass = real({"head", "head_mass"});
    spec = f;
  } else {
    bad_params("unknown family '" + name + "'");
  }
  if (!params.empty()) {
    bad_params(name + ": unknown parameter " + params.begin()->first);
  }
  check(spec);
  return spec;
}

std::string format_family(const FamilySpec& spec) {
  return std::visit(
      [](const auto& f) -> std::string {
        using T = std::decay_t<decltype(f)>;
        const std::string n = "n=" + format_number(f.n);
        if constexpr (std::is_same_v<T, UniformFamily>) {
          return "uniform:" + n;
        } else if constexpr (std::is_same_v<T, BilevelFamily>) {
          return "bilevel:" + n + ",f=" + format_number(f.heavy_fraction) +
                 ",t=" + format_number(f.tilt);
        } else if constexpr (std::is_same_v<T, ZipfFamily>) {
          return "zipf:" + n + ",s=" + format_number(f.exponent);
        } else {
          return "pointmassmix:" + n + ",head=" + format_number(f.head_mass);
        }
      },
      spec);
}

std::uint64_t family_size(const FamilySpec& spec) {
  return std::visit([](const auto& f) { return f.n; }, spec);
}

FamilySpec with_size(FamilySpec spec, std::uint64_t n) {
  std::visit([n](auto& f) { f.n = n; }, spec);
  check(spec);
  return spec;
}

Distribution realize(const FamilySpec& spec) {
  check(spec);
  const std::uint64_t n = family_size(spec);
  std::vector<double> probs(n, 0.0);
  const double dn = static_cast<double>(n);
  std::visit(
      [&](const auto& f) {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, UniformFamily>) {
          std::fill(probs.begin(), probs.end(), 1.0 / dn);
        } else if constexpr (std::is_same_v<T, BilevelFamily>) {
          const auto h = heavy_count(f);
          const double heavy = (1.0 + f.tilt) / dn;
          const double light =
              (1.0 - static_cast<double>(h) * heavy) / static_cast<double>(n - h);
          for (std::uint64_t i = 0; i < n; ++i) {
            probs[i] = i < h ? heavy : light;
          }
        } else if constexpr (std::is_same_v<T, ZipfFamily>) {
          CompensatedSum total;
          for (std::uint64_t i = 0; i < n; ++i) {
            probs[i] = std::pow(static_cast<double>(i + 1), -f.exponent);
            total.add(probs[i]);
          }
          for (auto& x : probs) x /= total.value();
        } else {
          probs[0] = f.head_mass;
          for (std::uint64_t i = 1; i < n; ++i) {
            probs[i] = (1.0 - f.head_mass) / static_cast<double>(n - 1);
          }
        }
      },
      spec);
  return from_probs(probs);
}

std::optional<ClosedFormNorms> closed_form_norms(const FamilySpec& spec) {
  check(spec);
  return std::visit(
      [](const auto& f) -> std::optional<ClosedFormNorms> {
        using T = std::decay_t<decltype(f)>;
        const double dn = static_cast<double>(f.n);
        if constexpr (std::is_same_v<T, UniformFamily>) {
          return ClosedFormNorms{1.0 / dn, 1.0 / (dn * dn)};
        } else if constexpr (std::is_same_v<T, BilevelFamily>) {
          const double h = static_cast<double>(heavy_count(f));
          const double heavy = (1.0 + f.tilt) / dn;
          const double light = (1.0 - h * heavy) / (dn - h);
          return ClosedFormNorms{
              h * heavy * heavy + (dn - h) * light * light,
              h * heavy * heavy * heavy + (dn - h) * light * light * light};
        } else if constexpr (std::is_same_v<T, PointMassMixFamily>) {
          const double head = f.head_mass;
          if (f.n == 1) return ClosedFormNorms{1.0, 1.0};
          const double rest = 1.0 - head;
          return ClosedFormNorms{
              head * head + rest * rest / (dn - 1.0),
              head * head * head + rest * rest * rest / ((dn - 1.0) * (dn - 1.0))};
        } else {
          return std::nullopt;
        }
      },
      spec);
}

}  // namespace uniformity
