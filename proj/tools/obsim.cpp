// obsim: batch entry point for the simulation laboratory.
//
//   obsim simulate    --config sem.json --out traj.csv
//   obsim reduce      traj.csv --config sem.json --out model.json
//   obsim distinguish --config sem.json --candidate reduced --out report.json
//   obsim render      traj.csv --config sem.json --out frames/
//   obsim serve       --config sem.json --port 8765 --seed 42 --tick-ms 50
//
// Exit codes: 0 ok, 1 I/O error, 2 config error, 3 reduction hypothesis
// failure, 4 numeric failure.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "obsim/config.hpp"
#include "obsim/distinguisher.hpp"
#include "obsim/server.hpp"
#include "obsim/trajectory_io.hpp"
#include "obsim/vrpipe.hpp"

namespace fs = std::filesystem;
using namespace obsim;

namespace {

enum Exit { kOk = 0, kIo = 1, kConfig = 2, kHypothesis = 3, kNumeric = 4 };

struct Globals {
  std::string config;
  std::string out;
  std::uint64_t seed = 0;
  bool verbose = false;
};

void note(const Globals& g, const std::string& msg) {
  if (g.verbose) std::cerr << "obsim: " << msg << '\n';
}

ScenarioConfig load(const Globals& g) {
  if (g.config.empty()) return sem_config();
  note(g, "loading " + g.config);
  return load_config(g.config);
}

void emit(const Globals& g, const std::string& bytes) {
  if (g.out.empty() || g.out == "-") {
    std::cout << bytes;
    std::cout.flush();
  } else {
    write_file(g.out, bytes);
  }
}

int cmd_simulate(const Globals& g, std::optional<double> duration) {
  const ScenarioConfig cfg = load(g);
  const double span = duration.value_or(cfg.duration);
  note(g, "simulating " + std::to_string(span) + " time units with " +
              std::string(to_string(cfg.integrator)));
  const Trajectory traj = simulate(cfg.scenario.system, cfg.scenario.init, span, cfg.dt,
                                   cfg.integrator);
  emit(g, to_csv(traj));
  return kOk;
}

int cmd_reduce(const Globals& g, const std::string& input) {
  const ScenarioConfig cfg = load(g);
  const Trajectory traj = read_csv(input);
  if (traj.size() < 3) throw ConfigError("trajectory", "reduction needs at least three samples");
  std::vector<std::string> charts;
  for (const auto& body : cfg.reduction.charts) {
    if (std::find(traj.meta.bodies.begin(), traj.meta.bodies.end(), body) !=
        traj.meta.bodies.end()) {
      charts.push_back(body);
    }
  }
  DriveCoordinate drive;
  try {
    drive = detect_drive_coordinate(traj, charts);
  } catch (const NoMonotoneCoordinate& e) {
    std::cout << "hypothesis: FAILED\n" << "reason: " << e.what() << '\n';
    return kHypothesis;
  }
  ReducedModel model = build_reduced(traj, drive);
  if (cfg.scenario.system.movable_names() == traj.meta.bodies) {
    model = attach_inertia(std::move(model), cfg.scenario.system);
  }
  const VectorXd times = traj.times();
  const Trajectory replay = playback(model, std::vector<double>(times.begin(), times.end()));
  double residual = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    residual = std::max(residual, (replay.samples[k].q - traj.samples[k].q).cwiseAbs().maxCoeff());
  }
  if (!g.out.empty()) write_file(g.out, model_to_json(model));
  std::printf("hypothesis: ok\ndrive: %s\nchart: %s\nmargin: %.17g\nknots: %zu\n"
              "max_knot_residual: %.17g\n",
              drive.label().c_str(),
              drive.chart == ChartKind::cylindrical ? "cylindrical" : "cartesian", drive.margin,
              traj.size(), residual);
  return kOk;
}

int cmd_distinguish(const Globals& g, const std::string& candidate_name,
                    std::optional<double> fraction) {
  ScenarioConfig cfg = load(g);
  if (fraction) cfg.protocol.impulse.fraction = *fraction;
  const CandidateKind kind = parse_candidate_kind(candidate_name);
  note(g, "building candidate " + std::string(to_string(kind)));
  const Candidate candidate = make_candidate(cfg, kind);
  const DistinguisherReport report = run_protocol(candidate, make_protocol(cfg));
  emit(g, report_to_json(report) + "\n");
  std::cerr << "verdict: " << to_string(report.verdict) << " (D_max " << report.d_max << ")\n";
  return kOk;
}

int cmd_render(const Globals& g, const std::string& input, std::optional<int> stride_flag) {
  const ScenarioConfig cfg = load(g);
  const Trajectory traj = read_csv(input);
  if (cfg.scenario.system.movable_names() != traj.meta.bodies) {
    throw ConfigError("bodies", "trajectory bodies do not match the configuration");
  }
  const fs::path dir = g.out.empty() ? fs::path("frames") : fs::path(g.out);
  fs::create_directories(dir);
  const int stride = stride_flag.value_or(cfg.render.stride);
  if (stride < 1) throw ConfigError("stride", "must be >= 1");
  const auto& grid = cfg.render.grid;
  RegisterMatrix registers(grid.R, grid.C, cfg.render.bits);
  int index = 0;
  for (std::size_t k = 0; k < traj.size(); k += static_cast<std::size_t>(stride), ++index) {
    const auto& s = traj.samples[k];
    const PixelFrame frame = render(cfg.scenario.system, s.q, s.t, grid, registers);
    char name[32];
    std::snprintf(name, sizeof name, "frame_%05d.pgm", index);
    write_file(dir / name, encode_pgm(frame));
    const auto v = checksum(frame);
    const auto c = checksum(registers, grid.R, grid.C);
    std::printf("%s t=%.17g V=%016llx C=%016llx %s\n", name, s.t,
                static_cast<unsigned long long>(v), static_cast<unsigned long long>(c),
                v == c ? "equal" : "DIFFER");
  }
  return kOk;
}

int cmd_serve(const Globals& g, unsigned short port, int tick_ms, const std::string& address) {
  const ScenarioConfig cfg = load(g);
  ServerOptions options;
  options.address = address;
  options.port = port;
  options.seed = g.seed;
  options.tick_ms = tick_ms;
  Server server(cfg, options);
  std::cerr << "serving on " << address << ":" << port << " (seed " << g.seed << ")\n";
  server.run();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Observable-simulation laboratory"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "Scenario JSON (defaults to the built-in Sun-Earth-Moon)");
  app.add_option("--out", g.out, "Output file or directory");
  app.add_option("--seed", g.seed, "Seed for session candidate draws");
  app.add_flag("--verbose", g.verbose, "Progress notes on stderr");

  auto* sim = app.add_subcommand("simulate", "Integrate the scenario and write a CSV trajectory");
  std::optional<double> duration;
  sim->add_option("--duration", duration, "Override the configured duration");

  auto* red = app.add_subcommand("reduce", "Build a one-parameter model of a CSV trajectory");
  std::string red_input;
  red->add_option("trajectory", red_input, "Input CSV")->required();

  auto* dis = app.add_subcommand("distinguish", "Run the force-injection protocol");
  std::string candidate = "copy";
  std::optional<double> fraction;
  dis->add_option("--candidate", candidate,
                  "copy | padded | reduced | reduced_kinematic | real");
  dis->add_option("--fraction", fraction, "Override the impulse fraction");

  auto* ren = app.add_subcommand("render", "Rasterize a CSV trajectory to PGM frames");
  std::string ren_input;
  std::optional<int> stride;
  ren->add_option("trajectory", ren_input, "Input CSV")->required();
  ren->add_option("--stride", stride, "Render every k-th sample");

  auto* srv = app.add_subcommand("serve", "Host blind-trial sessions");
  unsigned short port = 8765;
  int tick_ms = 50;
  std::string address = "127.0.0.1";
  srv->add_option("--port", port, "TCP port (WebSocket and line JSON)");
  srv->add_option("--tick-ms", tick_ms, "Wall-clock milliseconds per tick")
      ->check(CLI::PositiveNumber);
  srv->add_option("--address", address, "Listen address");

  for (auto* sub : {sim, red, dis, ren, srv}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*sim) return cmd_simulate(g, duration);
    if (*red) return cmd_reduce(g, red_input);
    if (*dis) return cmd_distinguish(g, candidate, fraction);
    if (*ren) return cmd_render(g, ren_input, stride);
    if (*srv) return cmd_serve(g, port, tick_ms, address);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfig;
  } catch (const NoMonotoneCoordinate& e) {
    std::cerr << "hypothesis failure: " << e.what() << '\n';
    return kHypothesis;
  } catch (const Error& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::ios_base::failure& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  } catch (const std::system_error& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kIo;
  }
  return kOk;
}
