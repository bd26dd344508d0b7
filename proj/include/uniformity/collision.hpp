#pragma once

#include <cstdint>
#include <unordered_map>

#include "uniformity/sampling.hpp"

namespace uniformity {

using Count128 = unsigned __int128;

inline constexpr std::uint64_t kDefaultTrackerCap = std::uint64_t{1} << 40;

// Incremental 2- and 3-way collision counts over a growing multiset.
// Only per-label counts are stored, never the sequence itself.
//
// Observing a label whose prior count is c adds c pairs and C(c, 2)
// triples, so s2 = sum C(count, 2) and t3 = sum C(count, 3) throughout.
class CollisionTracker {
 public:
  struct Totals {
    Count128 s2 = 0;
    Count128 t3 = 0;
  };

  explicit CollisionTracker(std::uint64_t cap = kDefaultTrackerCap)
      : cap_(cap) {}

  // Throws Error(kCapacityExceeded) if m would exceed the cap.
  Totals observe(LabelId label);

  std::uint64_t m() const noexcept { return m_; }
  Count128 s2() const noexcept { return s2_; }
  Count128 t3() const noexcept { return t3_; }
  std::uint64_t count(LabelId label) const;
  std::size_t distinct() const noexcept { return counts_.size(); }

 private:
  std::unordered_map<LabelId, std::uint64_t> counts_;
  std::uint64_t m_ = 0;
  Count128 s2_ = 0;
  Count128 t3_ = 0;
  std::uint64_t cap_;
};

// C(m, 2) and C(m, 3) without overflow for m < 2^42.
constexpr Count128 choose2(std::uint64_t m) noexcept {
  return m < 2 ? 0 : static_cast<Count128>(m) * (m - 1) / 2;
}
constexpr Count128 choose3(std::uint64_t m) noexcept {
  return m < 3 ? 0 : static_cast<Count128>(m) * (m - 1) * (m - 2) / 6;
}

}  // namespace uniformity
