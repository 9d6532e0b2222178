#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <optional>

#include "profwall/profile.hpp"

namespace testing {

// Exact token bucket over rationals: starts full, refills continuously, a
// packet needs one whole token.
class RationalBucket {
 public:
  using Q = boost::multiprecision::cpp_rational;

  explicit RationalBucket(const profwall::RateSpec& spec)
      : cap_(static_cast<long long>(spec.capacity())),
        per_ns_(Q(static_cast<long long>(spec.rate.numerator)) /
                (Q(static_cast<long long>(spec.rate.denominator)) * Q(spec.rate.unit_duration().count()))) {}

  bool admit(profwall::Timestamp ts) {
    if (!last_) {
      tokens_ = cap_;
    } else {
      tokens_ += per_ns_ * Q(ts.ns() - last_->ns());
      if (tokens_ > cap_) tokens_ = cap_;
    }
    last_ = ts;
    if (tokens_ < 1) return false;
    tokens_ -= 1;
    return true;
  }

 private:
  Q cap_;
  Q per_ns_;
  Q tokens_;
  std::optional<profwall::Timestamp> last_;
};

}  // namespace testing
