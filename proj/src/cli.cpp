#include "profwall/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "profwall/engine.hpp"
#include "profwall/errors.hpp"
#include "profwall/fsm.hpp"
#include "profwall/harness.hpp"
#include "profwall/profile_parser.hpp"
#include "profwall/trace.hpp"

namespace profwall {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::vector<Profile> load_profiles(const std::vector<std::string>& paths) {
  std::vector<Profile> out;
  for (const auto& p : paths) {
    if (fs::is_directory(p)) {
      auto dir = load_profile_dir(p);
      out.insert(out.end(), dir.begin(), dir.end());
    } else {
      out.push_back(load_profile_file(p));
    }
  }
  return out;
}

EngineConfig load_config(const std::string& path) { return path.empty() ? EngineConfig{} : load_engine_config(path); }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw std::runtime_error("cannot write '" + path + "'");
}

void print_diagnostics(std::ostream& err, const std::string& where, const ValidationError& e) {
  for (const auto& d : e.diagnostics()) err << where << ": " << d.path << ": " << d.message << '\n';
}

// Maps library exceptions onto exit codes.
template <typename F>
int guarded(std::ostream& err, const std::string& where, F&& body) {
  try {
    return body();
  } catch (const ValidationError& e) {
    print_diagnostics(err, where, e);
    return kExitInvalid;
  } catch (const DuplicateDevice& e) {
    err << where << ": " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    err << where << ": " << e.what() << '\n';
    return kExitUsage;
  }
}

int cmd_check(const std::vector<std::string>& paths, std::ostream& err) {
  int code = kExitOk;
  for (const auto& p : paths) {
    int rc = guarded(err, p, [&] {
      load_profiles({p});
      return kExitOk;
    });
    code = std::max(code, rc);
  }
  return code;
}

int cmd_compile(const std::string& path, const std::string& format, const std::string& only, std::ostream& out,
                std::ostream& err) {
  return guarded(err, path, [&] {
    Profile profile = load_profile_file(path);
    bool any = false;
    for (const auto& ia : profile.interactions) {
      if (!only.empty() && ia.name != only) continue;
      InteractionFsm fsm = compile_interaction(ia);
      out << (format == "dot" ? fsm_to_dot(fsm) : fsm_to_json(fsm) + "\n");
      any = true;
    }
    if (!only.empty() && !any) {
      err << path << ": no interaction named '" << only << "'\n";
      return kExitUsage;
    }
    return kExitOk;
  });
}

struct RunArgs {
  std::vector<std::string> profiles;
  std::string trace;
  std::string config;
  std::string log;
  std::string expected;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, "run", [&] {
    Engine engine(load_config(a.config));
    for (const auto& p : load_profiles(a.profiles)) engine.register_profile(p);
    Trace trace = load_trace(a.trace);
    std::optional<Sidecar> sidecar;
    if (!a.expected.empty()) sidecar = parse_sidecar(read_text(a.expected));

    ReplayReport report = engine.run_replay(trace);
    if (!a.log.empty()) write_text(a.log, verdict_log(report, trace));
    out << report_to_json(report) << '\n';

    if (!sidecar) return kExitOk;
    if (sidecar->expected.size() != report.verdicts.size()) {
      err << "expected " << sidecar->expected.size() << " verdicts, trace has " << report.verdicts.size()
          << " packets\n";
      return kExitInvalid;
    }
    std::vector<std::size_t> bad;
    for (std::size_t i = 0; i < report.verdicts.size(); ++i) {
      if (report.verdicts[i].decision != sidecar->expected[i]) bad.push_back(i);
    }
    if (bad.empty()) return kExitOk;
    err << bad.size() << " verdict mismatches at packets:";
    for (auto i : bad) err << ' ' << i;
    err << '\n';
    return kExitInvalid;
  });
}

struct FuzzArgs {
  std::string trace;
  std::vector<std::string> profiles;
  std::string config;
  std::string out;
  std::string sidecar;
  std::uint64_t seed = 0;
  double fraction = 0.3;
  std::size_t cycles = 1;
};

int cmd_fuzz(const FuzzArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, "fuzz", [&] {
    if (a.trace.empty() && a.profiles.empty()) throw BadParams("give --trace or --profiles");
    if (!a.sidecar.empty() && a.profiles.empty()) throw BadParams("--sidecar needs --profiles for labeling");
    std::vector<Profile> profiles = load_profiles(a.profiles);
    Trace base;
    if (!a.trace.empty()) {
      base = load_trace(a.trace);
    } else {
      std::vector<Trace> parts;
      for (const auto& p : profiles) {
        SynthHosts hosts = default_synth_hosts(p.device_info);
        auto_resolve(p, hosts);
        HappyOptions opts;
        opts.cycles = a.cycles;
        parts.push_back(happy_trace(p, hosts, opts));
      }
      base = merge_traces(parts);
    }
    FuzzResult fuzzed = fuzz_trace(base, a.seed, a.fraction);
    save_trace(fuzzed.trace, a.out);
    std::size_t expected_drop = 0;
    if (!a.sidecar.empty()) {
      LabeledTrace lt = label_trace(fuzzed.trace, profiles, load_config(a.config), fuzzed.edits);
      for (auto d : lt.expected) expected_drop += d == Decision::Drop;
      write_text(a.sidecar, sidecar_to_json(lt.expected, lt.edits) + "\n");
    }
    json summary{{"v", 1}, {"packets", fuzzed.trace.packets.size()}, {"edits", fuzzed.edits.size()}, {"seed", a.seed}};
    if (!a.sidecar.empty()) summary["expected_drop"] = expected_drop;
    out << summary.dump() << '\n';
    return kExitOk;
  });
}

struct AttackArgs {
  std::string scenario;
  std::string out;
  std::string sidecar;
  std::optional<double> pps;
  std::optional<double> duration;
  std::optional<std::size_t> count;
  std::optional<std::uint16_t> port;
  bool prelude = false;
};

int cmd_attack(const AttackArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, "attack", [&] {
    auto s = parse_scenario(a.scenario);
    if (!s) throw BadParams("unknown scenario '" + a.scenario + "' (A1..A4)");
    AttackParams params = default_attack_params(*s);
    if (a.pps) params.pps = *a.pps;
    if (a.duration) params.duration = *a.duration;
    if (a.count) params.count = *a.count;
    if (a.port) params.port = *a.port;
    params.prelude = a.prelude;
    AttackTrace at = gen_attack(*s, params);
    save_trace(at.trace, a.out);
    if (!a.sidecar.empty()) write_text(a.sidecar, sidecar_to_json(at.expected, {}) + "\n");
    std::size_t accept = 0;
    for (auto d : at.expected) accept += d == Decision::Accept;
    out << json{{"v", 1},
                {"scenario", std::string(to_string(*s))},
                {"packets", at.trace.packets.size()},
                {"expected_accept", accept},
                {"expected_drop", at.expected.size() - accept}}
               .dump()
        << '\n';
    return kExitOk;
  });
}

struct BenchArgs {
  std::vector<std::string> profiles;
  std::string trace;
  std::string config;
  std::size_t repeat = 1;
};

int cmd_bench(const BenchArgs& a, std::ostream& out, std::ostream& err) {
  return guarded(err, "bench", [&] {
    if (a.repeat == 0) throw BadParams("--repeat must be positive");
    EngineConfig config = load_config(a.config);
    std::vector<Profile> profiles = load_profiles(a.profiles);
    Trace trace = load_trace(a.trace);
    std::vector<double> latency;
    std::uint64_t cat[4] = {0, 0, 0, 0};
    std::uint64_t accepted = 0;
    for (std::size_t r = 0; r < a.repeat; ++r) {
      Engine engine(config);
      for (const auto& p : profiles) engine.register_profile(p);
      ReplayReport report = engine.run_replay(trace);
      latency.insert(latency.end(), report.latency_us.begin(), report.latency_us.end());
      for (auto c : report.effort) ++cat[static_cast<int>(c)];
      accepted += report.accepted;
    }
    LatencyStats lat = latency_stats(latency);
    out << json{{"v", 1},
                {"packets", latency.size()},
                {"repeat", a.repeat},
                {"accepted", accepted},
                {"latency_us", {{"mean", lat.mean}, {"p2_5", lat.p2_5}, {"p97_5", lat.p97_5}}},
                {"effort", {{"A", cat[0]}, {"B", cat[1]}, {"C", cat[2]}, {"D", cat[3]}}}}
               .dump()
        << '\n';
    return kExitOk;
  });
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Interaction-aware firewall for smart home device profiles", "profwall"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::vector<std::string> check_paths;
  auto* check = app.add_subcommand("check", "Validate profiles; exit 0 iff all are valid");
  check->add_option("profiles", check_paths, "Profile files or directories")->required();

  std::string compile_path, compile_format = "json", compile_only;
  auto* compile = app.add_subcommand("compile", "Print the state machine of each interaction");
  compile->add_option("profile", compile_path, "Profile file")->required();
  compile->add_option("--format", compile_format, "json or dot")->check(CLI::IsMember({"json", "dot"}));
  compile->add_option("--interaction", compile_only, "Only this interaction");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "Replay a trace and print the report");
  run->add_option("--profiles", run_args.profiles, "Profile files or directories")->required();
  run->add_option("--trace", run_args.trace, "pcap or JSONL trace")->required();
  run->add_option("--config", run_args.config, "Engine configuration (JSON or YAML)");
  run->add_option("--log", run_args.log, "Write the verdict log (JSONL) here");
  run->add_option("--expected", run_args.expected, "Sidecar with expected verdicts");

  FuzzArgs fuzz_args;
  auto* fuzz = app.add_subcommand("fuzz", "Edit packets of a trace and label the result");
  fuzz->add_option("--trace", fuzz_args.trace, "Base trace; default: happy path of --profiles");
  fuzz->add_option("--profiles", fuzz_args.profiles, "Profile files or directories");
  fuzz->add_option("--config", fuzz_args.config, "Engine configuration for labeling");
  fuzz->add_option("--out", fuzz_args.out, "Fuzzed trace")->required();
  fuzz->add_option("--sidecar", fuzz_args.sidecar, "Expected verdicts and edit log");
  fuzz->add_option("--seed", fuzz_args.seed, "RNG seed");
  fuzz->add_option("--fraction", fuzz_args.fraction, "Share of packets to edit");
  fuzz->add_option("--cycles", fuzz_args.cycles, "Happy-path repetitions");

  AttackArgs attack_args;
  auto* attack = app.add_subcommand("attack", "Generate an attack trace");
  attack->add_option("scenario", attack_args.scenario, "A1, A2, A3 or A4")->required();
  attack->add_option("--out", attack_args.out, "Attack trace")->required();
  attack->add_option("--sidecar", attack_args.sidecar, "Expected verdicts");
  attack->add_option("--pps", attack_args.pps, "Packets per second (A1, A2)");
  attack->add_option("--duration", attack_args.duration, "Seconds (A1, A2)");
  attack->add_option("--count", attack_args.count, "Packets (A3, A4)");
  attack->add_option("--port", attack_args.port, "Target port");
  attack->add_flag("--prelude", attack_args.prelude, "Prepend the legitimate ARP or DNS exchange");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench", "Time per-packet decisions");
  bench->add_option("--profiles", bench_args.profiles, "Profile files or directories")->required();
  bench->add_option("--trace", bench_args.trace, "pcap or JSONL trace")->required();
  bench->add_option("--config", bench_args.config, "Engine configuration");
  bench->add_option("--repeat", bench_args.repeat, "Replays of the trace");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  }

  if (check->parsed()) return cmd_check(check_paths, err);
  if (compile->parsed()) return cmd_compile(compile_path, compile_format, compile_only, out, err);
  if (run->parsed()) return cmd_run(run_args, out, err);
  if (fuzz->parsed()) return cmd_fuzz(fuzz_args, out, err);
  if (attack->parsed()) return cmd_attack(attack_args, out, err);
  return cmd_bench(bench_args, out, err);
}

}  // namespace profwall
