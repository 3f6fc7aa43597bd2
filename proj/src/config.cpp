#include "obsim/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace obsim {

namespace {

using nlohmann::json;

// Typed access into a JSON object that reports failures by field path.
class Reader {
 public:
  Reader(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "expected an object");
  }

  std::string field(std::string_view key) const {
    return path_.empty() ? std::string(key) : path_ + "." + std::string(key);
  }

  bool has(std::string_view key) const { return node_.contains(std::string(key)); }

  const json& raw(std::string_view key) const { return node_.at(std::string(key)); }

  void allow(std::initializer_list<std::string_view> keys) const {
    const std::set<std::string_view> known(keys);
    for (const auto& item : node_.items()) {
      if (!known.count(item.key())) throw ConfigError(field(item.key()), "unknown key");
    }
  }

  double number(std::string_view key, std::optional<double> fallback = {}) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError(field(key), "missing");
    }
    const auto& v = raw(key);
    if (!v.is_number()) throw ConfigError(field(key), "expected a number");
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(field(key), "must be finite");
    return x;
  }

  double positive(std::string_view key, std::optional<double> fallback = {}) const {
    const double x = number(key, fallback);
    if (!(x > 0.0)) throw ConfigError(field(key), "must be positive");
    return x;
  }

  double non_negative(std::string_view key, std::optional<double> fallback = {}) const {
    const double x = number(key, fallback);
    if (x < 0.0) throw ConfigError(field(key), "must be >= 0");
    return x;
  }

  long integer(std::string_view key, long fallback, long min_value) const {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_number_integer()) throw ConfigError(field(key), "expected an integer");
    const long x = v.get<long>();
    if (x < min_value) throw ConfigError(field(key), "must be >= " + std::to_string(min_value));
    return x;
  }

  bool boolean(std::string_view key, bool fallback) const {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_boolean()) throw ConfigError(field(key), "expected true or false");
    return v.get<bool>();
  }

  std::string string(std::string_view key, std::optional<std::string> fallback = {}) const {
    if (!has(key)) {
      if (fallback) return *fallback;
      throw ConfigError(field(key), "missing");
    }
    const auto& v = raw(key);
    if (!v.is_string()) throw ConfigError(field(key), "expected a string");
    return v.get<std::string>();
  }

  std::vector<std::string> strings(std::string_view key) const {
    std::vector<std::string> out;
    if (!has(key)) return out;
    const auto& v = raw(key);
    if (!v.is_array()) throw ConfigError(field(key), "expected an array of strings");
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (!v[i].is_string()) {
        throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected a string");
      }
      out.push_back(v[i].get<std::string>());
    }
    return out;
  }

  Vector3d vec3(std::string_view key, const Vector3d& fallback) const {
    if (!has(key)) return fallback;
    const auto& v = raw(key);
    if (!v.is_array() || v.size() != 3) throw ConfigError(field(key), "expected [x, y, z]");
    Vector3d out;
    for (int i = 0; i < 3; ++i) {
      if (!v[static_cast<std::size_t>(i)].is_number()) {
        throw ConfigError(field(key) + "[" + std::to_string(i) + "]", "expected a number");
      }
      out[i] = v[static_cast<std::size_t>(i)].get<double>();
    }
    if (!out.allFinite()) throw ConfigError(field(key), "must be finite");
    return out;
  }

  Reader child(std::string_view key) const { return Reader(raw(key), field(key)); }

 private:
  const json& node_;
  std::string path_;
};

struct BodyEntry {
  BodySpec spec;
  Vector3d velocity = Vector3d::Zero();
};

BodyEntry parse_body(const Reader& r) {
  r.allow({"name", "mass", "fixed", "attractors", "host", "position", "velocity"});
  BodyEntry entry;
  entry.spec.name = r.string("name");
  entry.spec.mass = r.non_negative("mass");
  entry.spec.fixed = r.boolean("fixed", false);
  entry.spec.attractors = r.strings("attractors");
  if (r.has("host") && !r.raw("host").is_null()) entry.spec.host = r.string("host");
  entry.spec.position = r.vec3("position", Vector3d::Zero());
  entry.velocity = r.vec3("velocity", Vector3d::Zero());
  return entry;
}

ExtraBody parse_extra(const Reader& r) {
  const BodyEntry entry = parse_body(r);
  return {entry.spec, entry.spec.position, entry.velocity};
}

StateEstimator parse_estimator(const Reader& r, std::string_view key) {
  const std::string name = r.string(key, std::string("newtonian_fit"));
  if (name == "newtonian_fit") return StateEstimator::newtonian_fit;
  if (name == "two_point") return StateEstimator::two_point;
  throw ConfigError(r.field(key), "expected newtonian_fit or two_point");
}

ExtraBody default_probe() {
  BodySpec spec{"Probe", 1e-6, false, {}, std::nullopt, Vector3d(3.0, 0.0, 0.0)};
  return {spec, Vector3d(3.0, 0.0, 0.0), Vector3d(0.0, 0.25, 0.0)};
}

}  // namespace

ScenarioConfig parse_config(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  const Reader top(doc, "");
  top.allow({"name", "G", "bodies", "integrator", "dt", "duration", "reduction", "observer",
             "protocol", "render", "padding", "session"});

  ScenarioConfig cfg;
  cfg.name = top.string("name", std::string("scenario"));
  const double G = top.non_negative("G", 1.0);
  cfg.dt = top.positive("dt");
  cfg.duration = top.non_negative("duration", 0.0);
  cfg.integrator = parse_integrator(top.string("integrator", std::string("rk4")));

  if (!top.has("bodies") || !top.raw("bodies").is_array()) {
    throw ConfigError("bodies", "expected an array of bodies");
  }
  std::vector<BodySpec> specs;
  std::vector<Vector3d> positions;
  std::vector<Vector3d> velocities;
  const auto& bodies = top.raw("bodies");
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    const BodyEntry entry = parse_body(Reader(bodies[i], "bodies[" + std::to_string(i) + "]"));
    positions.push_back(entry.spec.position);
    velocities.push_back(entry.velocity);
    specs.push_back(entry.spec);
    if (!specs.back().fixed) specs.back().position = Vector3d::Zero();
  }
  const std::vector<BodySpec> listed = specs;
  PhysicalSystem system(std::move(specs), G, {}, cfg.name);
  State init;
  init.t = 0.0;
  init.q.resize(system.n());
  init.qdot.resize(system.n());
  for (std::size_t i = 0; i < listed.size(); ++i) {
    if (listed[i].fixed) continue;
    const int slot = system.slot_of(listed[i].name);
    init.q.segment<3>(slot) = positions[i];
    init.qdot.segment<3>(slot) = velocities[i];
  }
  cfg.scenario = {std::move(system), std::move(init)};

  if (top.has("reduction")) {
    const Reader r = top.child("reduction");
    r.allow({"charts", "knot_stride", "record_dt"});
    cfg.reduction.charts = r.strings("charts");
    for (std::size_t i = 0; i < cfg.reduction.charts.size(); ++i) {
      const auto& label = cfg.reduction.charts[i];
      if (!cfg.scenario.system.find(label)) {
        throw ConfigError("reduction.charts[" + std::to_string(i) + "]",
                          "unknown body '" + label + "'");
      }
    }
    cfg.reduction.knot_stride = static_cast<int>(r.integer("knot_stride", 1, 1));
    cfg.reduction.record_dt = r.positive("record_dt", cfg.dt);
  } else {
    cfg.reduction.record_dt = cfg.dt;
  }

  cfg.observer = {1e-3, cfg.dt};
  if (top.has("observer")) {
    const Reader r = top.child("observer");
    r.allow({"eps_q", "eps_t"});
    cfg.observer.eps_q = r.positive("eps_q", 1e-3);
    cfg.observer.eps_t = r.positive("eps_t", cfg.dt);
  }

  if (top.has("protocol")) {
    const Reader r = top.child("protocol");
    r.allow({"t_f", "impulse", "pre_window", "post_window", "pass_mult", "fail_mult",
             "estimator"});
    auto& p = cfg.protocol;
    p.t_f = r.non_negative("t_f", 0.0);
    p.pre_window = r.positive("pre_window");
    p.post_window = r.positive("post_window");
    p.pass_mult = r.positive("pass_mult", 2.0);
    p.fail_mult = r.positive("fail_mult", 10.0);
    if (!(p.pass_mult < p.fail_mult)) {
      throw ConfigError("protocol.fail_mult", "must exceed pass_mult");
    }
    p.estimator = parse_estimator(r, "estimator");
    if (r.has("impulse")) {
      const Reader imp = r.child("impulse");
      imp.allow({"body", "kind", "fraction", "dp"});
      p.impulse.body = imp.string("body");
      if (!cfg.scenario.system.find(p.impulse.body)) {
        throw ConfigError("protocol.impulse.body", "unknown body '" + p.impulse.body + "'");
      }
      p.impulse.kind = imp.string("kind", std::string("tangential"));
      if (p.impulse.kind != "tangential" && p.impulse.kind != "radial" &&
          p.impulse.kind != "vector") {
        throw ConfigError("protocol.impulse.kind", "expected tangential, radial or vector");
      }
      p.impulse.fraction = imp.number("fraction", 0.0);
      p.impulse.dp = imp.vec3("dp", Vector3d::Zero());
    }
  }

  if (top.has("render")) {
    const Reader r = top.child("render");
    r.allow({"R", "C", "window", "stride", "bits", "intensity"});
    auto& g = cfg.render.grid;
    g.R = static_cast<int>(r.integer("R", 64, 1));
    g.C = static_cast<int>(r.integer("C", 64, 1));
    if (r.has("window")) {
      const auto& w = r.raw("window");
      if (!w.is_array() || w.size() != 4 || !std::all_of(w.begin(), w.end(), [](const json& x) {
            return x.is_number();
          })) {
        throw ConfigError("render.window", "expected [xmin, xmax, ymin, ymax]");
      }
      g.xmin = w[0].get<double>();
      g.xmax = w[1].get<double>();
      g.ymin = w[2].get<double>();
      g.ymax = w[3].get<double>();
      if (!(g.xmin < g.xmax) || !(g.ymin < g.ymax)) {
        throw ConfigError("render.window", "needs xmin < xmax and ymin < ymax");
      }
    }
    cfg.render.stride = static_cast<int>(r.integer("stride", 1, 1));
    cfg.render.bits = static_cast<int>(r.integer("bits", 8, 1));
    if (cfg.render.bits > 32) throw ConfigError("render.bits", "must be <= 32");
    if (r.has("intensity")) {
      const auto& levels = r.raw("intensity");
      if (!levels.is_object()) throw ConfigError("render.intensity", "expected {body: level}");
      const auto max_level = cfg.render.bits == 32 ? 0xFFFFFFFFull : (1ull << cfg.render.bits) - 1;
      for (const auto& item : levels.items()) {
        const std::string where = "render.intensity." + item.key();
        if (!item.value().is_number_unsigned() || item.value().get<std::uint64_t>() > max_level) {
          throw ConfigError(where, "expected an unsigned level within the register width");
        }
        g.intensity[item.key()] = static_cast<std::uint32_t>(item.value().get<std::uint64_t>());
      }
    }
  }

  if (top.has("padding")) {
    const auto& extras = top.raw("padding");
    if (!extras.is_array()) throw ConfigError("padding", "expected an array of bodies");
    for (std::size_t i = 0; i < extras.size(); ++i) {
      cfg.padding.push_back(parse_extra(Reader(extras[i], "padding[" + std::to_string(i) + "]")));
    }
  } else {
    cfg.padding.push_back(default_probe());
  }

  cfg.session.sim_per_tick = cfg.dt;
  cfg.session.horizon = std::max(cfg.duration, cfg.protocol.t_f + cfg.protocol.post_window);
  if (top.has("session")) {
    const Reader r = top.child("session");
    r.allow({"sim_per_tick", "frame_every", "horizon", "outbox_capacity"});
    cfg.session.sim_per_tick = r.positive("sim_per_tick", cfg.dt);
    cfg.session.frame_every = static_cast<int>(r.integer("frame_every", 1, 1));
    cfg.session.horizon = r.positive("horizon", cfg.session.horizon);
    cfg.session.outbox_capacity =
        static_cast<std::size_t>(r.integer("outbox_capacity", 256, 4));
  }
  if (!(cfg.session.horizon > 0.0)) throw ConfigError("session.horizon", "must be positive");
  return cfg;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::ios_base::failure("cannot open config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

ScenarioConfig sem_config() {
  ScenarioConfig cfg;
  cfg.name = "sun-earth-moon";
  cfg.scenario = sem::make();
  cfg.integrator = Integrator::rk4;
  cfg.dt = sem::kStep;
  cfg.duration = 3.0 * sem::kMoonPeriod;
  cfg.reduction.charts = {"Earth", "Moon"};
  cfg.reduction.record_dt = cfg.dt;
  cfg.observer = {1e-3, cfg.dt};
  cfg.protocol.t_f = sem::kMoonPeriod;
  cfg.protocol.impulse = {"Moon", "tangential", 0.1, Vector3d::Zero()};
  cfg.protocol.pre_window = sem::kMoonPeriod;
  cfg.protocol.post_window = sem::kMoonPeriod;
  cfg.padding.push_back(default_probe());
  cfg.session.sim_per_tick = cfg.dt;
  cfg.session.horizon = 10.0 * sem::kEarthPeriod;
  return cfg;
}

Trajectory record_for_reduction(const ScenarioConfig& cfg, double horizon) {
  const double step = cfg.reduction.record_dt > 0.0 ? cfg.reduction.record_dt : cfg.dt;
  return simulate(cfg.scenario.system.with_external({}), cfg.scenario.init, horizon, step,
                  cfg.integrator);
}

ReducedModel reduce_scenario(const ScenarioConfig& cfg, double horizon) {
  Trajectory traj = record_for_reduction(cfg, horizon);
  if (cfg.reduction.knot_stride > 1) {
    Trajectory thinned;
    thinned.meta = traj.meta;
    const auto stride = static_cast<std::size_t>(cfg.reduction.knot_stride);
    for (std::size_t k = 0; k < traj.size(); k += stride) thinned.samples.push_back(traj.samples[k]);
    if ((traj.size() - 1) % stride != 0) {
      thinned.samples.push_back(traj.samples.back());
    }
    traj = std::move(thinned);
  }
  const DriveCoordinate drive = detect_drive_coordinate(traj, cfg.reduction.charts);
  return attach_inertia(build_reduced(traj, drive), cfg.scenario.system);
}

ExternalForce protocol_force(const ScenarioConfig& cfg) {
  const auto& imp = cfg.protocol.impulse;
  if (imp.body.empty()) throw ConfigError("protocol.impulse", "no impulse configured");
  if (imp.kind == "vector") return make_impulse(imp.body, imp.dp, cfg.protocol.t_f);
  const Trajectory ref = simulate(cfg.scenario.system.with_external({}), cfg.scenario.init,
                                  cfg.protocol.t_f, cfg.dt, cfg.integrator);
  const State at = state_at(ref.samples.back());
  if (imp.kind == "radial") {
    return radial_impulse(cfg.scenario.system, at, imp.body, imp.fraction, cfg.protocol.t_f);
  }
  return tangential_impulse(cfg.scenario.system, at, imp.body, imp.fraction, cfg.protocol.t_f);
}

Protocol make_protocol(const ScenarioConfig& cfg) {
  if (!(cfg.protocol.pre_window > 0.0)) throw ConfigError("protocol.pre_window", "must be positive");
  if (!(cfg.protocol.post_window > 0.0)) {
    throw ConfigError("protocol.post_window", "must be positive");
  }
  Protocol p;
  p.scenario = cfg.scenario;
  p.dt = cfg.dt;
  p.integrator = cfg.integrator;
  p.t_f = cfg.protocol.t_f;
  p.force = protocol_force(cfg);
  p.pre_window = cfg.protocol.pre_window;
  p.post_window = cfg.protocol.post_window;
  p.resolution = cfg.observer;
  p.pass_mult = cfg.protocol.pass_mult;
  p.fail_mult = cfg.protocol.fail_mult;
  p.estimator = cfg.protocol.estimator;
  return p;
}

Candidate make_candidate(const ScenarioConfig& cfg, CandidateKind kind) {
  switch (kind) {
    case CandidateKind::real:
      return Candidate::real(cfg.scenario.system);
    case CandidateKind::copy:
      return Candidate::copy(cfg.scenario.system);
    case CandidateKind::padded:
      return Candidate::padded(pad_noninteracting(cfg.scenario.system, cfg.padding));
    case CandidateKind::reduced_kinematic:
    case CandidateKind::reduced_interactive: {
      const double end = cfg.protocol.t_f + cfg.protocol.post_window;
      const double horizon = 1.25 * std::max(end, cfg.duration) + 10.0 * cfg.dt;
      return Candidate::reduced(reduce_scenario(cfg, horizon),
                                kind == CandidateKind::reduced_interactive);
    }
  }
  throw ConfigError("candidate", "unknown candidate kind");
}

}  // namespace obsim
