#include "obsim/dynamics.hpp"

#include <cmath>
#include <set>

namespace obsim {

std::string_view to_string(Integrator method) {
  switch (method) {
    case Integrator::rk4:
      return "rk4";
    case Integrator::leapfrog:
      return "leapfrog";
  }
  return "unknown";
}

Integrator parse_integrator(std::string_view name) {
  if (name == "rk4") return Integrator::rk4;
  if (name == "leapfrog") return Integrator::leapfrog;
  throw ConfigError("integrator", "expected rk4 or leapfrog, got '" + std::string(name) + "'");
}

PhysicalSystem::PhysicalSystem(std::vector<BodySpec> bodies, double G,
                               std::vector<ExternalForce> external, std::string name)
    : name_(std::move(name)), G_(G) {
  if (!std::isfinite(G) || G < 0.0) throw ConfigError("G", "must be finite and non-negative");
  std::set<std::string> seen;
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    const auto& spec = bodies[i];
    const std::string where = "bodies[" + std::to_string(i) + "]";
    if (spec.name.empty()) throw ConfigError(where + ".name", "empty body label");
    if (!seen.insert(spec.name).second) {
      throw ConfigError(where + ".name", "duplicate body '" + spec.name + "'");
    }
    if (!std::isfinite(spec.mass) || spec.mass < 0.0) {
      throw ConfigError(where + ".mass", "mass must be finite and >= 0");
    }
    if (!spec.position.allFinite()) throw ConfigError(where + ".position", "non-finite");
  }

  bodies_.reserve(bodies.size());
  for (auto& spec : bodies) {
    Body body;
    body.spec = std::move(spec);
    if (!body.spec.fixed) {
      body.slot = n_;
      n_ += 3;
    }
    bodies_.push_back(std::move(body));
  }
  if (n_ < 1) throw ConfigError("bodies", "system needs at least one movable body");

  for (std::size_t i = 0; i < bodies_.size(); ++i) {
    auto& body = bodies_[i];
    const std::string where = "bodies[" + std::to_string(i) + "]";
    for (const auto& label : body.spec.attractors) {
      const auto idx = find(label);
      if (!idx) throw ConfigError(where + ".attractors", "unknown body '" + label + "'");
      if (static_cast<std::size_t>(*idx) == i) {
        throw ConfigError(where + ".attractors", "body '" + label + "' attracts itself");
      }
      body.attractors.push_back(*idx);
    }
    if (body.spec.host) {
      const auto idx = find(*body.spec.host);
      if (!idx) throw ConfigError(where + ".host", "unknown body '" + *body.spec.host + "'");
      if (static_cast<std::size_t>(*idx) == i) throw ConfigError(where + ".host", "self host");
      body.host = *idx;
    }
  }
  // Host chains must terminate.
  for (std::size_t i = 0; i < bodies_.size(); ++i) {
    std::size_t hops = 0;
    for (int h = bodies_[i].host; h >= 0; h = bodies_[static_cast<std::size_t>(h)].host) {
      if (++hops > bodies_.size()) {
        throw ConfigError("bodies[" + std::to_string(i) + "].host", "cyclic host chain");
      }
    }
  }

  for (const auto& force : external) validate_force(force);
  external_ = std::move(external);
}

void PhysicalSystem::validate_force(const ExternalForce& force) const {
  const auto idx = find(force.target);
  if (!idx) throw ConfigError("external.target", "unknown body '" + force.target + "'");
  const auto& body = bodies_[static_cast<std::size_t>(*idx)];
  if (body.slot < 0) {
    throw ConfigError("external.target", "fixed body '" + force.target + "' accepts no force");
  }
  if (!(body.spec.mass > 0.0)) {
    throw ConfigError("external.target", "massless body '" + force.target + "' accepts no force");
  }
  if (const auto* imp = std::get_if<Impulse>(&force.kind)) {
    if (!imp->dp.allFinite() || !std::isfinite(imp->time)) {
      throw ConfigError("external.dp", "impulse must be finite");
    }
  } else {
    const auto& win = std::get<ForceWindow>(force.kind);
    if (!win.force.allFinite()) throw ConfigError("external.force", "force must be finite");
    if (!(win.t_on < win.t_off)) throw ConfigError("external.t_on", "window needs t_on < t_off");
  }
}

std::optional<int> PhysicalSystem::find(std::string_view body) const {
  for (std::size_t i = 0; i < bodies_.size(); ++i) {
    if (bodies_[i].spec.name == body) return static_cast<int>(i);
  }
  return std::nullopt;
}

const PhysicalSystem::Body& PhysicalSystem::body(std::string_view name) const {
  const auto idx = find(name);
  if (!idx) throw ConfigError("body", "unknown body '" + std::string(name) + "'");
  return bodies_[static_cast<std::size_t>(*idx)];
}

int PhysicalSystem::slot_of(std::string_view name) const {
  const auto& b = body(name);
  if (b.slot < 0) throw ConfigError("body", "fixed body '" + std::string(name) + "' has no slots");
  return b.slot;
}

std::vector<std::string> PhysicalSystem::movable_names() const {
  std::vector<std::string> names;
  for (const auto& b : bodies_) {
    if (b.slot >= 0) names.push_back(b.spec.name);
  }
  return names;
}

VectorXd PhysicalSystem::slot_masses() const {
  VectorXd m(n_);
  for (const auto& b : bodies_) {
    if (b.slot >= 0) m.segment<3>(b.slot).setConstant(b.spec.mass);
  }
  return m;
}

PhysicalSystem PhysicalSystem::with_external(std::vector<ExternalForce> external) const {
  PhysicalSystem copy = *this;
  for (const auto& force : external) copy.validate_force(force);
  copy.external_ = std::move(external);
  return copy;
}

VectorXd Trajectory::times() const {
  VectorXd t(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) t[static_cast<Eigen::Index>(k)] = samples[k].t;
  return t;
}

MatrixXd Trajectory::positions() const {
  MatrixXd out(dim(), static_cast<Eigen::Index>(samples.size()));
  for (std::size_t k = 0; k < samples.size(); ++k) {
    out.col(static_cast<Eigen::Index>(k)) = samples[k].q;
  }
  return out;
}

std::vector<double> sample_times(double t0, double duration, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt", "step size must be positive");
  if (!(duration >= 0.0) || !std::isfinite(duration)) {
    throw ConfigError("duration", "must be finite and >= 0");
  }
  const double ratio = duration / dt;
  const auto full = static_cast<long long>(std::floor(ratio + 1e-9));
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(full) + 2);
  for (long long k = 0; k <= full; ++k) times.push_back(t0 + static_cast<double>(k) * dt);
  if (ratio - static_cast<double>(full) > 1e-9) times.push_back(t0 + duration);
  return times;
}

State state_at(const Sample& sample) { return State{sample.t, sample.q, sample.qdot}; }

Trajectory simulate(const PhysicalSystem& system, const State& init, double duration, double dt,
                    Integrator method) {
  if (init.q.size() != system.n() || init.qdot.size() != system.n()) {
    throw ConfigError("init", "state dimension does not match system");
  }
  if (!init.q.allFinite() || !init.qdot.allFinite() || !std::isfinite(init.t)) {
    throw ConfigError("init", "initial state must be finite");
  }
  const std::vector<double> times = sample_times(init.t, duration, dt);
  const double t_end = init.t + duration;

  struct Pending {
    int slot;
    Vector3d dv;
    double time;
    bool done;
  };
  std::vector<Pending> pending;
  for (const auto& force : system.external()) {
    if (const auto* imp = std::get_if<Impulse>(&force.kind)) {
      const auto& body = system.body(force.target);
      const bool inside = imp->time >= init.t && imp->time <= t_end;
      pending.push_back({body.slot, imp->dp / body.spec.mass, imp->time, !inside});
    }
  }
  const auto apply_impulses = [&pending](State& s) {
    for (auto& p : pending) {
      if (p.done || s.t < p.time) continue;
      s.qdot.segment<3>(p.slot) += p.dv;
      p.done = true;
    }
  };

  Trajectory traj;
  traj.meta = {system.name(), dt, std::string(to_string(method)), system.movable_names()};
  traj.samples.reserve(times.size());

  State s = init;
  s.t = times.front();
  apply_impulses(s);
  traj.samples.push_back({s.t, s.q, s.qdot});
  const bool partial_last =
      times.size() > 1 && duration / dt - std::floor(duration / dt + 1e-9) > 1e-9;
  for (std::size_t k = 1; k < times.size(); ++k) {
    const bool shortened = partial_last && k + 1 == times.size();
    s = step<double>(system, s, shortened ? times[k] - times[k - 1] : dt, method);
    s.t = times[k];
    if (!s.q.allFinite() || !s.qdot.allFinite()) {
      throw NumericError("non-finite state at t=" + std::to_string(s.t), k - 1);
    }
    apply_impulses(s);
    traj.samples.push_back({s.t, s.q, s.qdot});
  }
  return traj;
}

}  // namespace obsim
