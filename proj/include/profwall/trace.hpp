#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "profwall/packet.hpp"

namespace profwall {

struct Trace {
  std::vector<Packet> packets;
  int linktype = kLinkTypeEthernet;
};

// Classic pcap, either byte order, microsecond or nanosecond magic.
// Throws FormatError on bad magic, truncation, non-Ethernet linktype or
// decreasing timestamps.
Trace read_pcap(std::span<const std::uint8_t> bytes);
// Nanosecond-resolution pcap in host byte order.
Bytes write_pcap(const Trace& trace);

// One JSON object per line (schema version 1). Lines with "raw" are dissected
// from those bytes; otherwise the packet is synthesized from its fields.
// Throws FormatError with the 1-based line number.
Trace read_jsonl(std::string_view text);
// Emits raw bytes plus a decoded summary of each packet.
std::string write_jsonl(const Trace& trace);

// By extension: .pcap/.cap are pcap, anything else JSONL. Throws FormatError,
// or std::runtime_error when the file cannot be read or written.
Trace load_trace(const std::filesystem::path& path);
void save_trace(const Trace& trace, const std::filesystem::path& path);

std::string to_hex(std::span<const std::uint8_t> bytes);
// nullopt on odd length or non-hex characters.
std::optional<Bytes> from_hex(std::string_view text);

}  // namespace profwall
