#include "obsim/observer.hpp"

#include <cmath>

namespace obsim {

namespace {

void check_resolution(const Resolution& res) {
  if (!(res.eps_q > 0.0) || !std::isfinite(res.eps_q)) {
    throw ConfigError("eps_q", "must be positive");
  }
  if (!(res.eps_t > 0.0) || !std::isfinite(res.eps_t)) {
    throw ConfigError("eps_t", "must be positive");
  }
}

// Integer division rounding to nearest, halves away from zero.
std::int64_t round_div(std::int64_t value, std::int64_t factor) {
  const std::int64_t q = value / factor;
  const std::int64_t r = value % factor;
  const std::int64_t twice = 2 * (r < 0 ? -r : r);
  if (twice < factor) return q;
  return value < 0 ? q - 1 : q + 1;
}

void push_collapsed(MeasurementSeries& series, Measurement&& m) {
  if (!series.samples.empty() && series.samples.back() == m) return;
  series.samples.push_back(std::move(m));
}

struct RelativeMotion {
  int slot;
  double mass;
  Vector3d position;
  Vector3d velocity;
};

RelativeMotion relative_motion(const PhysicalSystem& system, const State& state,
                               const std::string& body) {
  const auto& b = system.body(body);
  if (b.slot < 0) throw ConfigError("body", "fixed body '" + body + "' accepts no force");
  RelativeMotion rel{b.slot, b.spec.mass, state.q.segment<3>(b.slot),
                     state.qdot.segment<3>(b.slot)};
  if (b.host >= 0) {
    const auto& host = system.bodies()[static_cast<std::size_t>(b.host)];
    if (host.slot >= 0) {
      rel.position -= state.q.segment<3>(host.slot);
      rel.velocity -= state.qdot.segment<3>(host.slot);
    } else {
      rel.position -= host.spec.position;
    }
  }
  return rel;
}

}  // namespace

double MeasurementSeries::time(std::size_t k) const {
  return static_cast<double>(samples[k].t) * resolution.eps_t;
}

VectorXd MeasurementSeries::position(std::size_t k) const {
  return samples[k].q.cast<double>() * resolution.eps_q;
}

std::int64_t quantize_ticks(double x, double eps) {
  if (!(eps > 0.0)) throw ConfigError("eps", "quantum must be positive");
  return static_cast<std::int64_t>(std::llround(x / eps));
}

double quantize(double x, double eps) {
  return static_cast<double>(quantize_ticks(x, eps)) * eps;
}

MeasurementSeries measure(const Trajectory& traj, const Resolution& res, std::string source) {
  check_resolution(res);
  MeasurementSeries out{res, std::move(source), {}};
  out.samples.reserve(traj.size());
  for (const auto& sample : traj.samples) {
    Measurement m;
    m.t = quantize_ticks(sample.t, res.eps_t);
    m.q.resize(sample.q.size());
    for (Eigen::Index i = 0; i < sample.q.size(); ++i) m.q[i] = quantize_ticks(sample.q[i], res.eps_q);
    push_collapsed(out, std::move(m));
  }
  return out;
}

MeasurementSeries measure(const MeasurementSeries& series, const Resolution& res) {
  check_resolution(res);
  if (res == series.resolution) return series;
  MeasurementSeries out{res, series.source, {}};
  for (std::size_t k = 0; k < series.size(); ++k) {
    Measurement m;
    m.t = quantize_ticks(series.time(k), res.eps_t);
    const VectorXd q = series.position(k);
    m.q.resize(q.size());
    for (Eigen::Index i = 0; i < q.size(); ++i) m.q[i] = quantize_ticks(q[i], res.eps_q);
    push_collapsed(out, std::move(m));
  }
  return out;
}

MeasurementSeries coarsen(const MeasurementSeries& series, std::int64_t q_factor,
                          std::int64_t t_factor) {
  if (q_factor < 1 || t_factor < 1) throw ConfigError("factor", "must be >= 1");
  MeasurementSeries out{{series.resolution.eps_q * static_cast<double>(q_factor),
                         series.resolution.eps_t * static_cast<double>(t_factor)},
                        series.source,
                        {}};
  for (const auto& s : series.samples) {
    Measurement m;
    m.t = round_div(s.t, t_factor);
    m.q = s.q.unaryExpr([q_factor](std::int64_t v) { return round_div(v, q_factor); });
    push_collapsed(out, std::move(m));
  }
  return out;
}

bool observably_equal(const MeasurementSeries& a, const MeasurementSeries& b) {
  if (!(a.resolution == b.resolution)) {
    throw ConfigError("resolution", "series were taken with different instruments");
  }
  const auto arity = [](const MeasurementSeries& s) {
    return s.samples.empty() ? Eigen::Index{-1} : s.samples.front().q.size();
  };
  if (!a.samples.empty() && !b.samples.empty() && arity(a) != arity(b)) {
    throw ConfigError("arity", "series observe different numbers of coordinates");
  }
  return a.samples == b.samples;
}

Trajectory select_coordinates(const Trajectory& traj, std::span<const int> slots) {
  Trajectory out;
  out.meta = traj.meta;
  out.meta.bodies.clear();
  out.samples.reserve(traj.size());
  for (const auto& sample : traj.samples) {
    Sample s{sample.t, VectorXd(static_cast<Eigen::Index>(slots.size())),
             VectorXd(static_cast<Eigen::Index>(slots.size()))};
    for (std::size_t i = 0; i < slots.size(); ++i) {
      if (slots[i] < 0 || slots[i] >= sample.q.size()) {
        throw ConfigError("slots", "coordinate " + std::to_string(slots[i]) + " out of range");
      }
      s.q[static_cast<Eigen::Index>(i)] = sample.q[slots[i]];
      s.qdot[static_cast<Eigen::Index>(i)] = sample.qdot[slots[i]];
    }
    out.samples.push_back(std::move(s));
  }
  return out;
}

ExternalForce make_impulse(std::string target, const Vector3d& dp, double t_imp) {
  if (!dp.allFinite()) throw ConfigError("dp", "impulse must be finite");
  return {std::move(target), Impulse{dp, t_imp}};
}

ExternalForce tangential_impulse(const PhysicalSystem& system, const State& state,
                                 const std::string& body, double fraction, double t_imp) {
  const auto rel = relative_motion(system, state, body);
  return make_impulse(body, fraction * rel.mass * rel.velocity, t_imp);
}

ExternalForce radial_impulse(const PhysicalSystem& system, const State& state,
                             const std::string& body, double fraction, double t_imp) {
  const auto rel = relative_motion(system, state, body);
  const double norm = rel.position.norm();
  if (!(norm > 0.0)) throw ConfigError("body", "radial direction undefined at the host");
  return make_impulse(body, fraction * rel.mass * rel.velocity.norm() / norm * rel.position,
                      t_imp);
}

}  // namespace obsim
