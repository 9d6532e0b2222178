#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <unistd.h>

#include "profwall/cli.hpp"
#include "support.hpp"

using namespace profwall;
namespace fs = std::filesystem;

namespace {

struct Run {
  int rc;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "profwall");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  int rc = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {rc, out.str(), err.str()};
}

std::string fixture(const std::string& rel) { return testing::fixture_path(rel).string(); }
std::string shipped(const std::string& rel) { return testing::source_path("profiles/" + rel).string(); }

fs::path scratch() {
  fs::path dir = fs::temp_directory_path() / ("profwall-cli-" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("check") {
    Run ok = cli({"check", fixture("dns-https.yaml")});
    CHECK(ok.rc == kExitOk);
    CHECK(ok.out.empty());
    CHECK(cli({"check", fixture("includes/dangling.yaml")}).rc == kExitUsage);

    fs::path bad = scratch() / "invalid.yaml";
    std::ofstream(bad) << "device-info:\n  name: d\n  mac: 02:00:00:00:00:01\n  ipv4: 192.168.1.9\ninteractions:\n  "
                          "i:\n    p:\n      type: periodic\n      protocols: {ipv4: {src: self}}\n";
    Run mixed = cli({"check", fixture("dns-https.yaml"), bad.string()});
    CHECK(mixed.rc == kExitInvalid);
    CHECK(mixed.err.find("periodic policy requires a rate") != std::string::npos);
    CHECK(cli({"check"}).rc == kExitUsage);
    CHECK(cli({"frobnicate"}).rc == kExitUsage);
  }

  TEST_CASE("compile") {
    Run json = cli({"compile", fixture("smart-lamp.yaml")});
    REQUIRE(json.rc == kExitOk);
    auto j = nlohmann::json::parse(json.out);
    CHECK(j["states"].size() == 4);
    CHECK(j["transitions"].size() == 8);

    Run dot = cli({"compile", fixture("smart-lamp.yaml"), "--format", "dot"});
    CHECK(dot.rc == kExitOk);
    CHECK(dot.out.rfind("digraph", 0) == 0);
    CHECK(cli({"compile", fixture("smart-lamp.yaml"), "--format", "svg"}).rc == kExitUsage);
    CHECK(cli({"compile", fixture("smart-lamp.yaml"), "--interaction", "nope"}).rc == kExitUsage);

    Run one = cli({"compile", shipped("tplink-plug.yaml"), "--interaction", "time-sync"});
    CHECK(nlohmann::json::parse(one.out)["interaction"] == "time-sync");
  }

  TEST_CASE("attack, run and expected verdicts") {
    fs::path dir = scratch();
    std::string trace = (dir / "a3.jsonl").string();
    std::string side = (dir / "a3.json").string();
    Run gen = cli({"attack", "A3", "--out", trace, "--sidecar", side});
    REQUIRE(gen.rc == kExitOk);
    CHECK(nlohmann::json::parse(gen.out)["expected_drop"] == 5);

    Run run = cli({"run", "--profiles", shipped(""), "--trace", trace, "--config", shipped("config.yaml"), "--expected",
                   side, "--log", (dir / "log.jsonl").string()});
    CHECK(run.rc == kExitOk);
    auto report = nlohmann::json::parse(run.out);
    CHECK(report["accepted"] == 0);
    CHECK(report["dropped"] == 5);
    std::istringstream log(slurp(dir / "log.jsonl"));
    std::string line;
    int lines = 0;
    while (std::getline(log, line)) {
      CHECK(nlohmann::json::parse(line)["decision"] == "DROP");
      ++lines;
    }
    CHECK(lines == 5);

    std::ofstream(dir / "wrong.json") << "{\"v\":1,\"expected\":[\"ACCEPT\",\"DROP\",\"DROP\",\"DROP\",\"DROP\"]}";
    Run mismatch = cli({"run", "--profiles", shipped(""), "--trace", trace, "--config", shipped("config.yaml"),
                        "--expected", (dir / "wrong.json").string()});
    CHECK(mismatch.rc == kExitInvalid);

    CHECK(cli({"run", "--profiles", shipped(""), "--trace", (dir / "missing.jsonl").string()}).rc == kExitUsage);
  }

  TEST_CASE("fuzz output is reproducible") {
    fs::path dir = scratch();
    auto fuzz = [&](const std::string& name) {
      return cli({"fuzz", "--profiles", shipped(""), "--config", shipped("config.yaml"), "--seed", "7", "--out",
                  (dir / (name + ".jsonl")).string(), "--sidecar", (dir / (name + ".json")).string()});
    };
    Run a = fuzz("a");
    Run b = fuzz("b");
    REQUIRE(a.rc == kExitOk);
    CHECK(a.out == b.out);
    CHECK(slurp(dir / "a.jsonl") == slurp(dir / "b.jsonl"));
    CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));

    Run run = cli({"run", "--profiles", shipped(""), "--trace", (dir / "a.jsonl").string(), "--config",
                   shipped("config.yaml"), "--expected", (dir / "a.json").string()});
    CHECK(run.rc == kExitOk);
  }

  TEST_CASE("attack flood size and bench") {
    fs::path dir = scratch();
    std::string trace = (dir / "a1.jsonl").string();
    REQUIRE(cli({"attack", "A1", "--out", trace}).rc == kExitOk);
    Run bench = cli({"bench", "--profiles", shipped(""), "--trace", trace, "--config", shipped("config.yaml")});
    REQUIRE(bench.rc == kExitOk);
    auto j = nlohmann::json::parse(bench.out);
    CHECK(j["packets"] == 1000);
    CHECK(j["accepted"] == 110);
    int total = 0;
    for (const auto& [k, v] : j["effort"].items()) total += v.get<int>();
    CHECK(total == 1000);
    CHECK(cli({"attack", "A9", "--out", trace}).rc == kExitUsage);
  }
}
