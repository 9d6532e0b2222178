#include "profwall/time.hpp"

#include <charconv>
#include <cmath>

namespace profwall {

Timestamp Timestamp::from_ns(std::int64_t ns) {
  std::int64_t sec = ns / 1'000'000'000;
  std::int64_t rem = ns % 1'000'000'000;
  if (rem < 0) {
    rem += 1'000'000'000;
    --sec;
  }
  return Timestamp{sec, static_cast<std::uint32_t>(rem)};
}

Timestamp Timestamp::from_seconds(double seconds) {
  return from_ns(static_cast<std::int64_t>(std::llround(seconds * 1e9)));
}

std::optional<Timestamp> Timestamp::parse(std::string_view text) {
  auto dot = text.find('.');
  auto int_part = text.substr(0, dot);
  if (int_part.empty()) return std::nullopt;
  std::int64_t sec = 0;
  auto [p, ec] = std::from_chars(int_part.data(), int_part.data() + int_part.size(), sec);
  if (ec != std::errc() || p != int_part.data() + int_part.size() || sec < 0) return std::nullopt;
  std::uint32_t nsec = 0;
  if (dot != std::string_view::npos) {
    auto frac = text.substr(dot + 1);
    if (frac.empty() || frac.size() > 9) return std::nullopt;
    for (std::size_t i = 0; i < 9; ++i) {
      nsec *= 10;
      if (i < frac.size()) {
        if (frac[i] < '0' || frac[i] > '9') return std::nullopt;
        nsec += static_cast<std::uint32_t>(frac[i] - '0');
      }
    }
  }
  return Timestamp{sec, nsec};
}

std::string Timestamp::str() const {
  std::string frac = std::to_string(nsec);
  return std::to_string(sec) + "." + std::string(9 - frac.size(), '0') + frac;
}

}  // namespace profwall
