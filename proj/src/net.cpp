#include "profwall/net.hpp"

#include <arpa/inet.h>

#include <charconv>
#include <cstdio>
#include <cstring>

namespace profwall {

namespace {

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::optional<MacAddr> MacAddr::parse(std::string_view text) {
  // aa:bb:cc:dd:ee:ff or aa-bb-cc-dd-ee-ff
  if (text.size() != 17) return std::nullopt;
  MacAddr mac;
  for (std::size_t i = 0; i < 6; ++i) {
    int hi = hex_value(text[i * 3]);
    int lo = hex_value(text[i * 3 + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    if (i < 5 && text[i * 3 + 2] != ':' && text[i * 3 + 2] != '-') return std::nullopt;
    mac.octets[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return mac;
}

std::string MacAddr::str() const {
  char buf[18];
  std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", octets[0], octets[1], octets[2],
                octets[3], octets[4], octets[5]);
  return buf;
}

IpAddr IpAddr::v4(std::uint32_t host_order) {
  return v4({static_cast<std::uint8_t>(host_order >> 24), static_cast<std::uint8_t>(host_order >> 16),
             static_cast<std::uint8_t>(host_order >> 8), static_cast<std::uint8_t>(host_order)});
}

IpAddr IpAddr::v4(std::array<std::uint8_t, 4> octets) {
  IpAddr a;
  a.family_ = Family::V4;
  std::copy(octets.begin(), octets.end(), a.bytes_.begin());
  return a;
}

IpAddr IpAddr::v6(std::array<std::uint8_t, 16> octets) {
  IpAddr a;
  a.family_ = Family::V6;
  a.bytes_ = octets;
  return a;
}

std::optional<IpAddr> IpAddr::from_bytes(std::span<const std::uint8_t> bytes) {
  if (bytes.size() == 4) return v4({bytes[0], bytes[1], bytes[2], bytes[3]});
  if (bytes.size() == 16) {
    std::array<std::uint8_t, 16> o{};
    std::copy(bytes.begin(), bytes.end(), o.begin());
    return v6(o);
  }
  return std::nullopt;
}

std::optional<IpAddr> IpAddr::parse(std::string_view text) {
  if (text.empty() || text.size() > 45) return std::nullopt;
  std::string s(text);
  if (s.find(':') == std::string::npos) {
    std::array<std::uint8_t, 4> o{};
    if (inet_pton(AF_INET, s.c_str(), o.data()) != 1) return std::nullopt;
    return v4(o);
  }
  std::array<std::uint8_t, 16> o{};
  if (inet_pton(AF_INET6, s.c_str(), o.data()) != 1) return std::nullopt;
  return v6(o);
}

std::uint32_t IpAddr::v4_value() const {
  return (std::uint32_t{bytes_[0]} << 24) | (std::uint32_t{bytes_[1]} << 16) |
         (std::uint32_t{bytes_[2]} << 8) | bytes_[3];
}

bool IpAddr::is_multicast() const {
  if (is_v4()) return (bytes_[0] & 0xf0) == 0xe0;
  return bytes_[0] == 0xff;
}

std::string IpAddr::str() const {
  char buf[INET6_ADDRSTRLEN];
  inet_ntop(is_v4() ? AF_INET : AF_INET6, bytes_.data(), buf, sizeof buf);
  return buf;
}

std::optional<IpPrefix> IpPrefix::parse(std::string_view text) {
  auto slash = text.find('/');
  auto addr = IpAddr::parse(text.substr(0, slash));
  if (!addr) return std::nullopt;
  int max_len = addr->is_v4() ? 32 : 128;
  int len = max_len;
  if (slash != std::string_view::npos) {
    auto digits = text.substr(slash + 1);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), len);
    if (ec != std::errc() || ptr != digits.data() + digits.size() || len < 0 || len > max_len) {
      return std::nullopt;
    }
  }
  return IpPrefix{*addr, len};
}

bool IpPrefix::contains(const IpAddr& addr) const {
  if (addr.family() != base.family()) return false;
  auto a = addr.bytes();
  auto b = base.bytes();
  int full = length / 8;
  if (std::memcmp(a.data(), b.data(), static_cast<std::size_t>(full)) != 0) return false;
  int rest = length % 8;
  if (rest == 0) return true;
  auto mask = static_cast<std::uint8_t>(0xff << (8 - rest));
  return (a[full] & mask) == (b[full] & mask);
}

std::string IpPrefix::str() const { return base.str() + "/" + std::to_string(length); }

}  // namespace profwall
