#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <variant>
#include <vector>

#include "uniformity/core.hpp"

namespace uniformity {

// Dense integer handle for an opaque label. The owning oracle maps it back
// to the token via SampleOracle::label_name.
using LabelId = std::uint32_t;

// xoshiro256** 1.0 (Blackman & Vigna), state seeded through SplitMix64.
// Output depends only on the seed, so sequences are identical on every
// platform.
class Xoshiro256 {
 public:
  explicit Xoshiro256(std::uint64_t seed) noexcept;

  std::uint64_t next() noexcept;
  // Uniform in [0, 1) with 53 random bits.
  double next_double() noexcept;
  // Uniform in [0, bound) via the high half of a 64x64 product.
  std::uint64_t next_below(std::uint64_t bound) noexcept;

 private:
  std::uint64_t s_[4];
};

// SplitMix64 step; also used to derive per-trial streams.
std::uint64_t splitmix64(std::uint64_t& state) noexcept;

// Vose alias table: O(n) build, O(1) draw.
class AliasTable {
 public:
  explicit AliasTable(std::span<const double> probs);

  std::size_t size() const noexcept { return threshold_.size(); }
  std::size_t sample(Xoshiro256& rng) const noexcept;

 private:
  std::vector<double> threshold_;
  std::vector<std::uint32_t> alias_;
};

// Pull-based source of labels. Single consumer; not thread-safe.
class SampleOracle {
 public:
  virtual ~SampleOracle() = default;

  // Next label, or nullopt once the source is exhausted.
  virtual std::optional<LabelId> try_pull() = 0;
  virtual std::string label_name(LabelId id) const = 0;

  // Throws Error(kStreamExhausted) past the end.
  LabelId pull();
  std::uint64_t drawn() const noexcept { return drawn_; }

 protected:
  void count_draw() noexcept { ++drawn_; }

 private:
  std::uint64_t drawn_ = 0;
};

class SyntheticOracle final : public SampleOracle {
 public:
  SyntheticOracle(Distribution p, std::uint64_t seed);
  // Fresh oracle sharing `other`'s alias table, with its own seed.
  SyntheticOracle(const SyntheticOracle& other, std::uint64_t seed);

  std::optional<LabelId> try_pull() override;
  std::string label_name(LabelId id) const override;

  const Distribution& distribution() const noexcept { return model_->p; }

 private:
  struct Model {
    Distribution p;
    AliasTable table;
  };
  std::shared_ptr<const Model> model_;
  Xoshiro256 rng_;
};

// Emits one token per input line, interning tokens to dense ids in order of
// first appearance. Blank lines are skipped.
class StreamOracle final : public SampleOracle {
 public:
  explicit StreamOracle(std::istream& in);

  std::optional<LabelId> try_pull() override;
  std::string label_name(LabelId id) const override;
  std::size_t distinct_labels() const noexcept { return names_.size(); }

 private:
  std::istream* in_;
  std::unordered_map<std::string, LabelId> ids_;
  std::vector<std::string> names_;
};

std::unique_ptr<SampleOracle> make_synthetic(const Distribution& p,
                                             std::uint64_t seed);
std::unique_ptr<SampleOracle> make_stream(std::istream& in);

// ---------------------------------------------------------------------------
// Distribution families used by experiments.

struct UniformFamily {
  std::uint64_t n = 1;
};
// round(f * n) labels at (1 + t) / n each, the rest share what is left.
struct BilevelFamily {
  std::uint64_t n = 1;
  double heavy_fraction = 0.0;
  double tilt = 0.0;
};
// p_i proportional to i^-exponent, i = 1..n.
struct ZipfFamily {
  std::uint64_t n = 1;
  double exponent = 1.0;
};
// One label at head_mass, n - 1 labels sharing 1 - head_mass.
struct PointMassMixFamily {
  std::uint64_t n = 1;
  double head_mass = 1.0;
};

using FamilySpec =
    std::variant<UniformFamily, BilevelFamily, ZipfFamily, PointMassMixFamily>;

// Parses `family:param=value,...`, e.g. `bilevel:n=1000,f=0.1,t=0.9`.
FamilySpec parse_family(std::string_view text);
std::string format_family(const FamilySpec& spec);
// Number of labels of the realized distribution.
std::uint64_t family_size(const FamilySpec& spec);
FamilySpec with_size(FamilySpec spec, std::uint64_t n);

Distribution realize(const FamilySpec& spec);

struct ClosedFormNorms {
  double l2_sq = 0.0;
  double l3_cubed = 0.0;
};
// Available for uniform, bilevel and pointmassmix.
std::optional<ClosedFormNorms> closed_form_norms(const FamilySpec& spec);

}  // namespace uniformity
