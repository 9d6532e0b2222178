#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace profwall {

using Bytes = std::vector<std::uint8_t>;

struct MacAddr {
  std::array<std::uint8_t, 6> octets{};

  static std::optional<MacAddr> parse(std::string_view text);
  static constexpr MacAddr broadcast() { return MacAddr{{0xff, 0xff, 0xff, 0xff, 0xff, 0xff}}; }

  bool is_broadcast() const { return *this == broadcast(); }
  bool is_multicast() const { return (octets[0] & 0x01) != 0; }
  std::string str() const;

  auto operator<=>(const MacAddr&) const = default;
};

// IPv4 or IPv6 address, stored in network byte order.
class IpAddr {
 public:
  enum class Family : std::uint8_t { V4, V6 };

  IpAddr() = default;
  static IpAddr v4(std::uint32_t host_order);
  static IpAddr v4(std::array<std::uint8_t, 4> octets);
  static IpAddr v6(std::array<std::uint8_t, 16> octets);
  static std::optional<IpAddr> parse(std::string_view text);
  static std::optional<IpAddr> from_bytes(std::span<const std::uint8_t> bytes);

  Family family() const { return family_; }
  bool is_v4() const { return family_ == Family::V4; }
  int version() const { return is_v4() ? 4 : 6; }
  std::span<const std::uint8_t> bytes() const {
    return {bytes_.data(), is_v4() ? std::size_t{4} : std::size_t{16}};
  }
  std::uint32_t v4_value() const;
  bool is_multicast() const;
  std::string str() const;

  auto operator<=>(const IpAddr&) const = default;

 private:
  Family family_ = Family::V4;
  std::array<std::uint8_t, 16> bytes_{};
};

struct IpPrefix {
  IpAddr base;
  int length = 0;

  static std::optional<IpPrefix> parse(std::string_view text);
  bool contains(const IpAddr& addr) const;
  std::string str() const;

  auto operator<=>(const IpPrefix&) const = default;
};

}  // namespace profwall

template <>
struct std::hash<profwall::MacAddr> {
  std::size_t operator()(const profwall::MacAddr& m) const noexcept {
    std::uint64_t v = 0;
    for (auto o : m.octets) v = (v << 8) | o;
    return std::hash<std::uint64_t>{}(v);
  }
};

template <>
struct std::hash<profwall::IpAddr> {
  std::size_t operator()(const profwall::IpAddr& a) const noexcept {
    std::size_t h = a.is_v4() ? 4 : 6;
    for (auto b : a.bytes()) h = h * 131 + b;
    return h;
  }
};
