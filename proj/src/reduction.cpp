#include "obsim/reduction.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace obsim {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

struct Candidate {
  DriveCoordinate drive;
  VectorXd values;
};

// Direction and margin of a sampled coordinate; margin <= 0 means not monotone.
void score(const VectorXd& values, const VectorXd& times, DriveCoordinate& drive) {
  const Eigen::Index count = values.size();
  drive.direction = values[count - 1] >= values[0] ? 1 : -1;
  double margin = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k + 1 < count; ++k) {
    const double rate = drive.direction * (values[k + 1] - values[k]) / (times[k + 1] - times[k]);
    margin = std::min(margin, rate);
  }
  drive.margin = std::isfinite(margin) ? margin : 0.0;
}

std::optional<Candidate> cylindrical_candidate(const Trajectory& traj, const std::string& body) {
  const auto& names = traj.meta.bodies;
  const auto it = std::find(names.begin(), names.end(), body);
  if (it == names.end()) {
    throw ConfigError("charts", "no movable body '" + body + "' in trajectory");
  }
  Candidate c;
  c.drive.chart = ChartKind::cylindrical;
  c.drive.body = body;
  c.drive.index = 3 * static_cast<int>(it - names.begin());
  c.drive.unwrap_offsets.reserve(traj.size());
  c.values.resize(static_cast<Eigen::Index>(traj.size()));
  long offset = 0;
  double previous = 0.0;
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& q = traj.samples[k].q;
    const double x = q[c.drive.index];
    const double y = q[c.drive.index + 1];
    if (x == 0.0 && y == 0.0) return std::nullopt;
    const double theta = std::atan2(y, x);
    if (k > 0) {
      const double jump = theta + kTwoPi * static_cast<double>(offset) - previous;
      offset -= std::lround(jump / kTwoPi);
    }
    previous = theta + kTwoPi * static_cast<double>(offset);
    c.drive.unwrap_offsets.push_back(offset);
    c.values[static_cast<Eigen::Index>(k)] = previous;
  }
  return c;
}

}  // namespace

std::string DriveCoordinate::label() const {
  if (chart == ChartKind::cylindrical) return "theta(" + body + ")";
  return "q[" + std::to_string(index) + "]";
}

VectorXd drive_values(const Trajectory& traj, const DriveCoordinate& drive) {
  VectorXd values(static_cast<Eigen::Index>(traj.size()));
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& q = traj.samples[k].q;
    double v = q[drive.index];
    if (drive.chart == ChartKind::cylindrical) {
      if (drive.unwrap_offsets.size() != traj.size()) {
        throw ConfigError("drive", "unwrap offsets do not match trajectory length");
      }
      v = std::atan2(q[drive.index + 1], q[drive.index]) +
          kTwoPi * static_cast<double>(drive.unwrap_offsets[k]);
    }
    values[static_cast<Eigen::Index>(k)] = v;
  }
  return values;
}

double drive_rate(const Sample& sample, const DriveCoordinate& drive) {
  if (drive.chart == ChartKind::cartesian) return sample.qdot[drive.index];
  const double x = sample.q[drive.index];
  const double y = sample.q[drive.index + 1];
  const double vx = sample.qdot[drive.index];
  const double vy = sample.qdot[drive.index + 1];
  return (x * vy - y * vx) / (x * x + y * y);
}

DriveCoordinate detect_drive_coordinate(const Trajectory& traj,
                                        const std::vector<std::string>& cylindrical_bodies) {
  if (traj.size() < 3) throw ConfigError("trajectory", "need at least 3 samples");
  const VectorXd times = traj.times();
  std::optional<DriveCoordinate> best;
  const auto consider = [&best](DriveCoordinate&& drive) {
    if (!(drive.margin > 0.0)) return;
    if (!best || drive.margin > best->margin) best = std::move(drive);
  };

  for (int i = 0; i < traj.dim(); ++i) {
    DriveCoordinate d;
    d.index = i;
    VectorXd values(static_cast<Eigen::Index>(traj.size()));
    for (std::size_t k = 0; k < traj.size(); ++k) {
      values[static_cast<Eigen::Index>(k)] = traj.samples[k].q[i];
    }
    score(values, times, d);
    consider(std::move(d));
  }
  for (const auto& body : cylindrical_bodies) {
    auto c = cylindrical_candidate(traj, body);
    if (!c) continue;
    score(c->values, times, c->drive);
    consider(std::move(c->drive));
  }
  if (!best) {
    throw NoMonotoneCoordinate(
        "no coordinate is continuous and strictly monotone over the interval; "
        "the reduction hypothesis fails");
  }
  return *best;
}

ReducedModel::ReducedModel(DriveCoordinate drive, int n, std::vector<std::string> bodies,
                           std::vector<int> slave_slots, CubicHermite<double> slaves,
                           CubicHermite<double> drive_law, std::optional<VectorXd> slot_masses)
    : drive_(std::move(drive)),
      n_(n),
      bodies_(std::move(bodies)),
      slave_slots_(std::move(slave_slots)),
      slaves_(std::move(slaves)),
      drive_law_(std::move(drive_law)),
      slot_masses_(std::move(slot_masses)) {
  if (drive_law_.dim() != 1) throw ConfigError("drive_law", "drive law must be scalar");
  if (slaves_.dim() != static_cast<Eigen::Index>(slave_slots_.size())) {
    throw ConfigError("slaves", "slave count does not match slave slots");
  }
  if (slot_masses_ && slot_masses_->size() != n_) {
    throw ConfigError("inertia", "mass vector does not match coordinate count");
  }
}

VectorXd ReducedModel::configuration(double s) const {
  VectorXd q(n_);
  if (drive_.chart == ChartKind::cartesian) q[drive_.index] = drive_.direction * s;
  if (slave_slots_.empty()) {
    if (!(s >= s_min() && s <= s_max())) throw DomainError("drive parameter out of range");
    return q;
  }
  const VectorXd values = slaves_(s);
  for (std::size_t i = 0; i < slave_slots_.size(); ++i) {
    q[slave_slots_[i]] = values[static_cast<Eigen::Index>(i)];
  }
  return q;
}

VectorXd ReducedModel::tangent(double s) const {
  VectorXd dq(n_);
  if (drive_.chart == ChartKind::cartesian) dq[drive_.index] = drive_.direction;
  if (slave_slots_.empty()) {
    if (!(s >= s_min() && s <= s_max())) throw DomainError("drive parameter out of range");
    return dq;
  }
  const VectorXd slopes = slaves_.derivative(s);
  for (std::size_t i = 0; i < slave_slots_.size(); ++i) {
    dq[slave_slots_[i]] = slopes[static_cast<Eigen::Index>(i)];
  }
  return dq;
}

int ReducedModel::slot_of(const std::string& body) const {
  const auto it = std::find(bodies_.begin(), bodies_.end(), body);
  if (it == bodies_.end()) throw ConfigError("body", "body '" + body + "' is not in the model");
  return 3 * static_cast<int>(it - bodies_.begin());
}

double ReducedModel::inertia(double s) const {
  if (!slot_masses_) throw ConfigError("inertia", "model has no inertia profile");
  return slot_masses_->dot(tangent(s).cwiseAbs2());
}

ReducedModel build_reduced(const Trajectory& traj, const DriveCoordinate& drive) {
  if (traj.size() < 2) throw ConfigError("trajectory", "need at least 2 samples");
  if (!(drive.margin > 0.0)) {
    throw NoMonotoneCoordinate("drive coordinate " + drive.label() + " is not strictly monotone");
  }
  const int n = traj.dim();
  if (drive.index < 0 || drive.index >= n ||
      (drive.chart == ChartKind::cylindrical && drive.index + 1 >= n)) {
    throw ConfigError("drive", "drive index out of range");
  }
  const auto K = static_cast<Eigen::Index>(traj.size());
  const VectorXd times = traj.times();
  const VectorXd s = drive.direction * drive_values(traj, drive);
  for (Eigen::Index k = 1; k < K; ++k) {
    if (!(s[k] > s[k - 1])) {
      throw ConfigError("drive", "duplicate drive knot at sample " + std::to_string(k));
    }
  }

  VectorXd sdot(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    sdot[k] = drive.direction * drive_rate(traj.samples[static_cast<std::size_t>(k)], drive);
  }

  std::vector<int> slave_slots;
  for (int i = 0; i < n; ++i) {
    if (drive.chart == ChartKind::cylindrical || i != drive.index) slave_slots.push_back(i);
  }
  const auto m = static_cast<Eigen::Index>(slave_slots.size());
  MatrixXd values(m, K);
  MatrixXd velocities(m, K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& sample = traj.samples[static_cast<std::size_t>(k)];
    for (Eigen::Index i = 0; i < m; ++i) {
      values(i, k) = sample.q[slave_slots[static_cast<std::size_t>(i)]];
      velocities(i, k) = sample.qdot[slave_slots[static_cast<std::size_t>(i)]];
    }
  }

  // Chain-rule slopes where the drive is moving; finite differences in s at
  // knots where it momentarily stalls.
  const double mean_rate = (s[K - 1] - s[0]) / (times[K - 1] - times[0]);
  MatrixXd slopes = finite_difference_slopes<double>(s, values);
  for (Eigen::Index k = 0; k < K; ++k) {
    if (sdot[k] > 1e-6 * mean_rate) slopes.col(k) = velocities.col(k) / sdot[k];
  }

  VectorXd drive_slopes = sdot;
  for (Eigen::Index k = 0; k < K; ++k) {
    if (!std::isfinite(drive_slopes[k])) drive_slopes[k] = mean_rate;
  }
  drive_slopes = fritsch_carlson<double>(times, s, drive_slopes);

  CubicHermite<double> slaves(s, std::move(values), std::move(slopes));
  CubicHermite<double> law(times, s.transpose(), drive_slopes.transpose());
  return ReducedModel(drive, n, traj.meta.bodies, std::move(slave_slots), std::move(slaves),
                      std::move(law));
}

ReducedModel attach_inertia(ReducedModel model, const PhysicalSystem& system) {
  if (system.n() != model.n()) {
    throw ConfigError("inertia", "system coordinate count does not match model");
  }
  return ReducedModel(model.drive(), model.n(), model.bodies(), model.slave_slots(),
                      model.slaves(), model.drive_law(), system.slot_masses());
}

Trajectory playback(const ReducedModel& model, std::span<const double> times) {
  Trajectory out;
  out.meta.system = "reduced";
  out.meta.integrator = "playback";
  out.meta.bodies = model.bodies();
  out.samples.reserve(times.size());
  for (const double t : times) {
    if (!(t >= model.t_begin() && t <= model.t_end())) {
      throw DomainError("playback time " + std::to_string(t) + " outside [" +
                        std::to_string(model.t_begin()) + ", " + std::to_string(model.t_end()) +
                        "]");
    }
    const double s = model.drive_at(t);
    const double sdot = model.drive_rate_at(t);
    out.samples.push_back({t, model.configuration(s), model.tangent(s) * sdot});
  }
  if (times.size() > 1) out.meta.dt = times[1] - times[0];
  return out;
}

double project_generalized_force(const ReducedModel& model, const std::string& body,
                                 const Vector3d& force, double s) {
  const int slot = model.slot_of(body);
  return force.dot(model.tangent(s).segment<3>(slot));
}

DriveState reduced_step_interactive(const ReducedModel& model, DriveState state, double Q,
                                    double dt) {
  if (!(dt > 0.0)) throw ConfigError("dt", "step size must be positive");
  const auto accel = [&model, Q](double s) {
    const double inertia = model.inertia(s);
    if (!(inertia > 0.0)) throw Error("non-positive effective inertia at s=" + std::to_string(s));
    return Q / inertia;
  };
  const double h = dt / 2.0;
  const double k1s = state.sdot;
  const double k1v = accel(state.s);
  const double k2s = state.sdot + h * k1v;
  const double k2v = accel(state.s + h * k1s);
  const double k3s = state.sdot + h * k2v;
  const double k3v = accel(state.s + h * k2s);
  const double k4s = state.sdot + dt * k3v;
  const double k4v = accel(state.s + dt * k3s);
  return {state.s + dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s),
          state.sdot + dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)};
}

DriveState apply_generalized_impulse(const ReducedModel& model, DriveState state,
                                     const std::string& body, const Vector3d& dp) {
  const double inertia = model.inertia(state.s);
  if (!(inertia > 0.0)) throw Error("non-positive effective inertia");
  state.sdot += project_generalized_force(model, body, dp, state.s) / inertia;
  return state;
}

PhysicalSystem clone_copy(const PhysicalSystem& system) { return system; }

State PaddedSystem::extend(const State& base) const {
  State out;
  out.t = base.t;
  out.q.resize(system.n());
  out.qdot.resize(system.n());
  out.q << base.q, extra_q;
  out.qdot << base.qdot, extra_qdot;
  return out;
}

PaddedSystem pad_noninteracting(const PhysicalSystem& base, const std::vector<ExtraBody>& extras) {
  std::set<std::string> base_names;
  std::vector<BodySpec> bodies;
  for (const auto& b : base.bodies()) {
    base_names.insert(b.spec.name);
    bodies.push_back(b.spec);
  }
  std::vector<double> q;
  std::vector<double> qdot;
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const auto& extra = extras[i];
    const std::string where = "extras[" + std::to_string(i) + "]";
    for (const auto& a : extra.spec.attractors) {
      if (base_names.count(a)) {
        throw ConfigError(where + ".attractors", "coupling '" + extra.spec.name + "' <- '" + a +
                                                     "' would let the base act on the padding");
      }
    }
    if (extra.spec.host && base_names.count(*extra.spec.host)) {
      throw ConfigError(where + ".host", "padding body '" + extra.spec.name +
                                             "' cannot ride in base body '" +
                                             *extra.spec.host + "'");
    }
    bodies.push_back(extra.spec);
    if (!extra.spec.fixed) {
      q.insert(q.end(), extra.position.data(), extra.position.data() + 3);
      qdot.insert(qdot.end(), extra.velocity.data(), extra.velocity.data() + 3);
    }
  }
  PaddedSystem out;
  out.system = PhysicalSystem(std::move(bodies), base.G(), base.external(), base.name());
  out.base_n = base.n();
  out.extra_q = Eigen::Map<const VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
  out.extra_qdot = Eigen::Map<const VectorXd>(qdot.data(), static_cast<Eigen::Index>(qdot.size()));
  return out;
}

Trajectory project_base(const Trajectory& traj, int base_n) {
  Trajectory out;
  out.meta = traj.meta;
  out.meta.bodies.resize(static_cast<std::size_t>(base_n / 3));
  out.samples.reserve(traj.size());
  for (const auto& sample : traj.samples) {
    out.samples.push_back({sample.t, sample.q.head(base_n), sample.qdot.head(base_n)});
  }
  return out;
}

}  // namespace obsim
