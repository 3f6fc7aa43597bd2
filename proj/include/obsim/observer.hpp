#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "obsim/dynamics.hpp"

namespace obsim {

/// The observer's instruments: a meter with quantum eps_q and a clock with quantum eps_t.
struct Resolution {
  double eps_q = 1e-3;
  double eps_t = 1e-3;

  bool operator==(const Resolution&) const = default;
};

using TickVector = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

/// One reading, stored as integer multiples of the instrument quanta.
struct Measurement {
  std::int64_t t = 0;
  TickVector q;

  bool operator==(const Measurement& o) const { return t == o.t && q == o.q; }
};

struct MeasurementSeries {
  Resolution resolution;
  std::string source;
  std::vector<Measurement> samples;

  std::size_t size() const { return samples.size(); }
  double time(std::size_t k) const;
  VectorXd position(std::size_t k) const;
};

/// Number of quanta nearest to x; exact halves round away from zero.
std::int64_t quantize_ticks(double x, double eps);
double quantize(double x, double eps);

/// Quantized readings of every sample, with consecutive identical rows collapsed.
MeasurementSeries measure(const Trajectory& traj, const Resolution& res,
                          std::string source = {});
/// Re-reads an existing series with an instrument of resolution `res`.
MeasurementSeries measure(const MeasurementSeries& series, const Resolution& res);
/// Re-reads a series with an instrument coarser by integer factors.
MeasurementSeries coarsen(const MeasurementSeries& series, std::int64_t q_factor,
                          std::int64_t t_factor = 1);

/// True iff both collapsed reading sequences are identical. Throws when the
/// instruments or the coordinate counts differ.
bool observably_equal(const MeasurementSeries& a, const MeasurementSeries& b);

/// Keeps the chosen coordinates of every sample, in the given order.
Trajectory select_coordinates(const Trajectory& traj, std::span<const int> slots);

ExternalForce make_impulse(std::string target, const Vector3d& dp, double t_imp);

/// Impulse of `fraction` times the body's momentum relative to its host (or
/// to the origin frame when unhosted), along that relative velocity.
ExternalForce tangential_impulse(const PhysicalSystem& system, const State& state,
                                 const std::string& body, double fraction, double t_imp);

/// Same magnitude as tangential_impulse, pointing away from the host.
ExternalForce radial_impulse(const PhysicalSystem& system, const State& state,
                             const std::string& body, double fraction, double t_imp);

}  // namespace obsim
