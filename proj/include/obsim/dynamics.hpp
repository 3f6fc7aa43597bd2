#pragma once

#include <algorithm>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "obsim/types.hpp"

namespace obsim {

/// Minimum separation between a body and one of its attractors.
inline constexpr double kSingularSeparation = 1e-9;

struct BodySpec {
  std::string name;
  double mass = 0.0;
  bool fixed = false;
  /// Bodies whose gravity acts on this one. Couplings are directed.
  std::vector<std::string> attractors;
  /// Optional frame host. A hosted body also receives the host's gravitational
  /// acceleration, i.e. it rides in the host's free-fall frame and feels the
  /// host's attractors as a uniform field.
  std::optional<std::string> host;
  /// Location of a fixed body. Ignored for movable bodies.
  Vector3d position = Vector3d::Zero();

  bool operator==(const BodySpec&) const = default;
};

struct Impulse {
  Vector3d dp = Vector3d::Zero();
  double time = 0.0;

  bool operator==(const Impulse&) const = default;
};

struct ForceWindow {
  Vector3d force = Vector3d::Zero();
  double t_on = 0.0;
  double t_off = 0.0;

  bool operator==(const ForceWindow&) const = default;
};

struct ExternalForce {
  std::string target;
  std::variant<Impulse, ForceWindow> kind;

  bool is_impulse() const { return std::holds_alternative<Impulse>(kind); }
  bool operator==(const ExternalForce&) const = default;
};

enum class Integrator { rk4, leapfrog };

std::string_view to_string(Integrator method);
Integrator parse_integrator(std::string_view name);

template <typename Scalar>
struct BasicState {
  Scalar t{0};
  VectorX<Scalar> q;
  VectorX<Scalar> qdot;
};

using State = BasicState<double>;

/// Restricted Newtonian N-body system. Movable bodies own three consecutive
/// Cartesian slots of the coordinate vector in listed order; fixed bodies own
/// none and act as sources only.
class PhysicalSystem {
 public:
  struct Body {
    BodySpec spec;
    int slot = -1;
    std::vector<int> attractors;
    int host = -1;

    bool operator==(const Body&) const = default;
  };

  PhysicalSystem() = default;
  PhysicalSystem(std::vector<BodySpec> bodies, double G = 1.0,
                 std::vector<ExternalForce> external = {}, std::string name = {});

  const std::string& name() const { return name_; }
  double G() const { return G_; }
  int n() const { return n_; }
  const std::vector<Body>& bodies() const { return bodies_; }
  const std::vector<ExternalForce>& external() const { return external_; }

  std::optional<int> find(std::string_view body) const;
  const Body& body(std::string_view name) const;
  /// First coordinate slot of a movable body; throws for fixed or unknown bodies.
  int slot_of(std::string_view body) const;
  std::vector<std::string> movable_names() const;
  /// Per-slot masses, length n.
  VectorXd slot_masses() const;

  /// Copy of this system with a different external schedule.
  PhysicalSystem with_external(std::vector<ExternalForce> external) const;

  bool operator==(const PhysicalSystem&) const = default;

 private:
  void validate_force(const ExternalForce& force) const;

  std::string name_;
  std::vector<Body> bodies_;
  double G_ = 1.0;
  int n_ = 0;
  std::vector<ExternalForce> external_;
};

struct Sample {
  double t = 0.0;
  VectorXd q;
  VectorXd qdot;
};

struct TrajectoryMeta {
  std::string system;
  double dt = 0.0;
  std::string integrator;
  /// Movable body labels in slot order.
  std::vector<std::string> bodies;
};

struct Trajectory {
  TrajectoryMeta meta;
  std::vector<Sample> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  int dim() const { return samples.empty() ? 0 : static_cast<int>(samples.front().q.size()); }
  VectorXd times() const;
  /// n x K matrix, one column per sample.
  MatrixXd positions() const;
};

namespace detail {

template <typename Scalar>
Vector3<Scalar> body_position(const PhysicalSystem::Body& body, const VectorX<Scalar>& q) {
  if (body.slot < 0) return body.spec.position.template cast<Scalar>();
  return q.template segment<3>(body.slot);
}

template <typename Scalar>
VectorX<Scalar> raw_field(const PhysicalSystem& system, const VectorX<Scalar>& q, double t) {
  using std::sqrt;
  const auto& bodies = system.bodies();
  VectorX<Scalar> acc = VectorX<Scalar>::Zero(system.n());
  const Scalar G = Scalar(system.G());
  for (const auto& body : bodies) {
    if (body.slot < 0) continue;
    const Vector3<Scalar> rb = q.template segment<3>(body.slot);
    Vector3<Scalar> a = Vector3<Scalar>::Zero();
    for (int ai : body.attractors) {
      const auto& src = bodies[static_cast<std::size_t>(ai)];
      const Vector3<Scalar> d = body_position<Scalar>(src, q) - rb;
      const Scalar r2 = d.squaredNorm();
      const Scalar r = sqrt(r2);
      if (!(r >= Scalar(kSingularSeparation))) {
        throw SingularityError(body.spec.name, src.spec.name, t);
      }
      if (src.spec.mass == 0.0) continue;
      a += (G * Scalar(src.spec.mass) / (r2 * r)) * d;
    }
    acc.template segment<3>(body.slot) = a;
  }
  return acc;
}

}  // namespace detail

/// Gravitational acceleration of every movable body, including the host-frame
/// term for hosted bodies. External forces are not included.
template <typename Scalar>
VectorX<Scalar> gravitational_accel(const PhysicalSystem& system, const VectorX<Scalar>& q,
                                    double t = 0.0) {
  if (q.size() != system.n()) throw ConfigError("q", "state dimension does not match system");
  const VectorX<Scalar> raw = detail::raw_field<Scalar>(system, q, t);
  VectorX<Scalar> acc = raw;
  for (const auto& body : system.bodies()) {
    if (body.slot < 0) continue;
    for (int h = body.host; h >= 0; h = system.bodies()[static_cast<std::size_t>(h)].host) {
      const auto& host = system.bodies()[static_cast<std::size_t>(h)];
      if (host.slot < 0) break;
      acc.template segment<3>(body.slot) += raw.template segment<3>(host.slot);
    }
  }
  return acc;
}

template <typename Scalar>
VectorX<Scalar> gravitational_accel(const PhysicalSystem& system, const BasicState<Scalar>& state) {
  if (state.qdot.size() != system.n()) {
    throw ConfigError("qdot", "state dimension does not match system");
  }
  return gravitational_accel<Scalar>(system, state.q, static_cast<double>(state.t));
}

/// Acceleration contributed by window forces active at time t, [t_on, t_off).
/// With `left_limit` the window is read as (t_on, t_off], the value just
/// before t; stages at the end of a step use it so a window that ends on a
/// step boundary acts over the whole step.
template <typename Scalar>
VectorX<Scalar> window_accel(const PhysicalSystem& system, double t, bool left_limit = false) {
  VectorX<Scalar> acc = VectorX<Scalar>::Zero(system.n());
  for (const auto& force : system.external()) {
    const auto* window = std::get_if<ForceWindow>(&force.kind);
    if (window == nullptr) continue;
    const bool active = left_limit ? (t > window->t_on && t <= window->t_off)
                                   : (t >= window->t_on && t < window->t_off);
    if (!active) continue;
    const auto& body = system.body(force.target);
    acc.template segment<3>(body.slot) +=
        (window->force / body.spec.mass).template cast<Scalar>();
  }
  return acc;
}

template <typename Scalar>
VectorX<Scalar> total_accel(const PhysicalSystem& system, const VectorX<Scalar>& q, double t,
                            bool left_limit = false) {
  VectorX<Scalar> acc = gravitational_accel<Scalar>(system, q, t);
  if (!system.external().empty()) acc += window_accel<Scalar>(system, t, left_limit);
  return acc;
}

/// Advances the state by dt. rk4 is the classical fourth-order scheme;
/// leapfrog is kick-drift-kick. Window forces enter the acceleration at every
/// stage; impulses are handled by simulate().
template <typename Scalar>
BasicState<Scalar> step(const PhysicalSystem& system, const BasicState<Scalar>& s, Scalar dt,
                        Integrator method = Integrator::rk4) {
  if (!(dt > Scalar(0))) throw ConfigError("dt", "step size must be positive");
  const double t = static_cast<double>(s.t);
  const double h = static_cast<double>(dt);
  BasicState<Scalar> out;
  out.t = s.t + dt;
  switch (method) {
    case Integrator::rk4: {
      const Scalar half = dt / Scalar(2);
      const VectorX<Scalar> k1v = total_accel<Scalar>(system, s.q, t);
      const VectorX<Scalar>& k1q = s.qdot;
      const VectorX<Scalar> k2q = s.qdot + half * k1v;
      const VectorX<Scalar> k2v = total_accel<Scalar>(system, s.q + half * k1q, t + h / 2);
      const VectorX<Scalar> k3q = s.qdot + half * k2v;
      const VectorX<Scalar> k3v = total_accel<Scalar>(system, s.q + half * k2q, t + h / 2);
      const VectorX<Scalar> k4q = s.qdot + dt * k3v;
      const VectorX<Scalar> k4v = total_accel<Scalar>(system, s.q + dt * k3q, t + h, true);
      out.q = s.q + (dt / Scalar(6)) * (k1q + Scalar(2) * k2q + Scalar(2) * k3q + k4q);
      out.qdot = s.qdot + (dt / Scalar(6)) * (k1v + Scalar(2) * k2v + Scalar(2) * k3v + k4v);
      break;
    }
    case Integrator::leapfrog: {
      const Scalar half = dt / Scalar(2);
      const VectorX<Scalar> v_half = s.qdot + half * total_accel<Scalar>(system, s.q, t);
      out.q = s.q + dt * v_half;
      out.qdot = v_half + half * total_accel<Scalar>(system, out.q, t + h, true);
      break;
    }
  }
  return out;
}

/// Kinetic energy (host-relative for hosted bodies) plus one gravitational
/// potential term per coupled pair of bodies.
template <typename Scalar>
Scalar total_energy(const PhysicalSystem& system, const BasicState<Scalar>& s) {
  using std::sqrt;
  const auto& bodies = system.bodies();
  Scalar kinetic(0);
  for (const auto& body : bodies) {
    if (body.slot < 0) continue;
    Vector3<Scalar> v = s.qdot.template segment<3>(body.slot);
    if (body.host >= 0) {
      const auto& host = bodies[static_cast<std::size_t>(body.host)];
      if (host.slot >= 0) v -= s.qdot.template segment<3>(host.slot);
    }
    kinetic += Scalar(0.5) * Scalar(body.spec.mass) * v.squaredNorm();
  }
  Scalar potential(0);
  const int count = static_cast<int>(bodies.size());
  for (int i = 0; i < count; ++i) {
    for (int j = i + 1; j < count; ++j) {
      const auto& a = bodies[static_cast<std::size_t>(i)];
      const auto& b = bodies[static_cast<std::size_t>(j)];
      const auto couples = [](const PhysicalSystem::Body& x, int other) {
        return std::find(x.attractors.begin(), x.attractors.end(), other) != x.attractors.end();
      };
      if (!couples(a, j) && !couples(b, i)) continue;
      const Scalar r = sqrt(
          (detail::body_position<Scalar>(a, s.q) - detail::body_position<Scalar>(b, s.q))
              .squaredNorm());
      if (!(r >= Scalar(kSingularSeparation))) {
        throw SingularityError(a.spec.name, b.spec.name, static_cast<double>(s.t));
      }
      potential -= Scalar(system.G() * a.spec.mass * b.spec.mass) / r;
    }
  }
  return kinetic + potential;
}

/// Sample times t0, t0+dt, ..., ending exactly at t0+duration. A remainder
/// shorter than a full step becomes one shortened final step.
std::vector<double> sample_times(double t0, double duration, double dt);

/// Integrates from `init` over [t0, t0+duration]. Each impulse is applied once,
/// to the velocity at the first sample time >= its time; impulses outside the
/// window never fire.
Trajectory simulate(const PhysicalSystem& system, const State& init, double duration, double dt,
                    Integrator method = Integrator::rk4);

/// State stored in a trajectory sample.
State state_at(const Sample& sample);

}  // namespace obsim
