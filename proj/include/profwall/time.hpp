#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace profwall {

using Duration = std::chrono::nanoseconds;

// Packet timestamp: seconds since the epoch plus nanoseconds.
struct Timestamp {
  std::int64_t sec = 0;
  std::uint32_t nsec = 0;

  static Timestamp from_ns(std::int64_t ns);
  static Timestamp from_seconds(double seconds);
  // Accepts "<sec>" or "<sec>.<fraction>" with up to 9 fractional digits.
  static std::optional<Timestamp> parse(std::string_view text);

  std::int64_t ns() const { return sec * 1'000'000'000 + nsec; }
  double seconds() const { return static_cast<double>(sec) + nsec * 1e-9; }
  // Exact decimal rendering, "<sec>.<9 digits>".
  std::string str() const;

  Timestamp operator+(Duration d) const { return from_ns(ns() + d.count()); }
  Duration operator-(const Timestamp& o) const { return Duration(ns() - o.ns()); }

  auto operator<=>(const Timestamp&) const = default;
};

}  // namespace profwall
