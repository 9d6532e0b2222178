#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "profwall/net.hpp"
#include "profwall/time.hpp"

namespace profwall {

// Name -> addresses learned from observed DNS answers. Names are normalized
// (lowercase, no trailing dot).
class DnsTable {
 public:
  struct Entry {
    std::set<IpAddr> addresses;
    Timestamp inserted_at;  // last time an address was added
    bool operator==(const Entry&) const = default;
  };

  enum class Lookup { Unknown, Resolves, Other };

  void insert(std::string_view name, const IpAddr& addr, Timestamp ts);
  // Empty set for unknown names.
  const std::set<IpAddr>& lookup(std::string_view name) const;
  // Whether `addr` is an address of `pattern` ("name" or "*.suffix").
  // Unknown when no entry matches the pattern at all.
  Lookup check(std::string_view pattern, const IpAddr& addr) const;
  // Drops entries last refreshed before `cutoff`.
  void expire_before(Timestamp cutoff);

  const std::map<std::string, Entry, std::less<>>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }
  bool operator==(const DnsTable&) const = default;

 private:
  std::map<std::string, Entry, std::less<>> entries_;
};

}  // namespace profwall
