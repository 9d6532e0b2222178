#pragma once

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "profwall/engine.hpp"
#include "profwall/harness.hpp"
#include "profwall/profile.hpp"
#include "profwall/trace.hpp"

namespace testing {

std::filesystem::path source_path(const std::string& rel);
std::filesystem::path fixture_path(const std::string& rel);

profwall::Profile load_fixture(const std::string& rel);
profwall::EngineConfig fixture_config();

struct Fixture {
  std::string name;
  std::vector<profwall::Profile> profiles;
};

// Profiles covering one-off, transient and periodic policies with and without
// bidirectionality, plus the shipped plug and hue bridge profiles.
std::vector<Fixture> base_fixtures();

// Happy-path traces of every profile, merged by timestamp.
profwall::Trace happy_for(const std::vector<profwall::Profile>& profiles, std::size_t cycles);

profwall::ReplayReport replay(const std::vector<profwall::Profile>& profiles, const profwall::EngineConfig& config,
                              const profwall::Trace& trace);

// Random packet with random field values for every supported layer. Transport
// ports avoid the classified ports unless an application message is chosen.
profwall::Packet random_packet(std::mt19937_64& rng, profwall::Timestamp ts);

// Random Ethernet frame: a random header (biased towards known ether types)
// followed by junk.
profwall::Bytes random_frame(std::mt19937_64& rng);

}  // namespace testing
