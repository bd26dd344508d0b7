#include "uniformity/collision.hpp"

#include "uniformity/error.hpp"

namespace uniformity {

CollisionTracker::Totals CollisionTracker::observe(LabelId label) {
  if (m_ >= cap_) {
    throw Error(ErrorCode::kCapacityExceeded,
                "collision tracker capacity of " + std::to_string(cap_) +
                    " samples reached");
  }
  std::uint64_t& c = counts_[label];
  s2_ += c;
  t3_ += choose2(c);
  ++c;
  ++m_;
  return {s2_, t3_};
}

std::uint64_t CollisionTracker::count(LabelId label) const {
  const auto it = counts_.find(label);
  return it == counts_.end() ? 0 : it->second;
}

}  // namespace uniformity
