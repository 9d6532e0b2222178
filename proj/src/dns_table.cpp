#include "profwall/dns_table.hpp"

#include "profwall/profile.hpp"

namespace profwall {

namespace {

bool under(std::string_view name, std::string_view suffix) {
  return name.size() > suffix.size() && name.substr(name.size() - suffix.size()) == suffix &&
         name[name.size() - suffix.size() - 1] == '.';
}

}  // namespace

void DnsTable::insert(std::string_view name, const IpAddr& addr, Timestamp ts) {
  auto& entry = entries_[normalize_domain(name)];
  entry.addresses.insert(addr);
  entry.inserted_at = ts;
}

const std::set<IpAddr>& DnsTable::lookup(std::string_view name) const {
  static const std::set<IpAddr> kEmpty;
  auto it = entries_.find(normalize_domain(name));
  return it == entries_.end() ? kEmpty : it->second.addresses;
}

DnsTable::Lookup DnsTable::check(std::string_view pattern, const IpAddr& addr) const {
  if (pattern.size() > 2 && pattern.substr(0, 2) == "*.") {
    std::string_view suffix = pattern.substr(2);
    bool known = false;
    for (const auto& [name, entry] : entries_) {
      if (!under(name, suffix)) continue;
      known = true;
      if (entry.addresses.count(addr)) return Lookup::Resolves;
    }
    return known ? Lookup::Other : Lookup::Unknown;
  }
  auto it = entries_.find(pattern);
  if (it == entries_.end()) return Lookup::Unknown;
  return it->second.addresses.count(addr) ? Lookup::Resolves : Lookup::Other;
}

void DnsTable::expire_before(Timestamp cutoff) {
  std::erase_if(entries_, [&](const auto& kv) { return kv.second.inserted_at < cutoff; });
}

}  // namespace profwall
