#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "obsim/dynamics.hpp"
#include "obsim/hermite.hpp"

namespace obsim {

enum class ChartKind { cartesian, cylindrical };

/// The coordinate used to reparameterize a trajectory. For the cylindrical
/// chart the coordinate is the azimuth of `body` about the z axis through the
/// origin, unwrapped over the samples.
struct DriveCoordinate {
  ChartKind chart = ChartKind::cartesian;
  /// Cartesian: coordinate slot. Cylindrical: first slot of the body.
  int index = 0;
  std::string body;
  int direction = 1;
  /// min over samples of direction * (q_{k+1} - q_k) / (t_{k+1} - t_k).
  double margin = 0.0;
  /// Cylindrical only: 2*pi multiples added to atan2 at each sample.
  std::vector<long> unwrap_offsets;

  std::string label() const;
};

/// Raw (unwrapped) drive values at every sample.
VectorXd drive_values(const Trajectory& traj, const DriveCoordinate& drive);

/// Instantaneous rate dq_j/dt at a sample, from the sample's velocities.
double drive_rate(const Sample& sample, const DriveCoordinate& drive);

/// Picks the candidate coordinate with the largest positive monotonicity
/// margin among the raw coordinates and the cylindrical azimuths of
/// `cylindrical_bodies`. Ties go to the earlier candidate.
/// Throws NoMonotoneCoordinate when no candidate is strictly monotone.
DriveCoordinate detect_drive_coordinate(const Trajectory& traj,
                                        const std::vector<std::string>& cylindrical_bodies = {});

/// One-degree-of-freedom model of a recorded trajectory: every observable
/// coordinate is a function of the normalized drive parameter s, and s is a
/// monotone function of time on the recorded interval.
///
/// s = direction * q_j, so s always increases along the recording. With a
/// Cartesian drive, coordinate j is s itself (times direction) and the others
/// are slaves. With a cylindrical drive all n Cartesian coordinates are slaves
/// of the azimuth.
class ReducedModel {
 public:
  ReducedModel() = default;
  ReducedModel(DriveCoordinate drive, int n, std::vector<std::string> bodies,
               std::vector<int> slave_slots, CubicHermite<double> slaves,
               CubicHermite<double> drive_law, std::optional<VectorXd> slot_masses = {});

  const DriveCoordinate& drive() const { return drive_; }
  int n() const { return n_; }
  /// Degrees of freedom of the constructed model.
  int dof() const { return 1; }
  const std::vector<std::string>& bodies() const { return bodies_; }
  const std::vector<int>& slave_slots() const { return slave_slots_; }
  const CubicHermite<double>& slaves() const { return slaves_; }
  const CubicHermite<double>& drive_law() const { return drive_law_; }

  double t_begin() const { return drive_law_.front(); }
  double t_end() const { return drive_law_.back(); }
  double s_min() const { return slaves_.front(); }
  double s_max() const { return slaves_.back(); }

  double drive_at(double t) const { return drive_law_(t)[0]; }
  double drive_rate_at(double t) const { return drive_law_.derivative(t)[0]; }

  /// Observable coordinates on the recorded curve at parameter s.
  VectorXd configuration(double s) const;
  /// dq/ds at parameter s.
  VectorXd tangent(double s) const;
  int slot_of(const std::string& body) const;

  bool has_inertia() const { return slot_masses_.has_value(); }
  const std::optional<VectorXd>& slot_masses() const { return slot_masses_; }
  /// Effective inertia sum_b m_b |dr_b/ds|^2.
  double inertia(double s) const;

 private:
  DriveCoordinate drive_;
  int n_ = 0;
  std::vector<std::string> bodies_;
  std::vector<int> slave_slots_;
  CubicHermite<double> slaves_;
  CubicHermite<double> drive_law_;
  std::optional<VectorXd> slot_masses_;
};

/// Builds the reduced model. Slaves use cubic Hermite interpolation in s with
/// chain-rule slopes qdot_i / sdot; the drive law s(t) uses the same family
/// with Fritsch-Carlson limited slopes so it stays strictly monotone.
ReducedModel build_reduced(const Trajectory& traj, const DriveCoordinate& drive);

/// Attaches per-slot masses so the model can respond to generalized forces.
ReducedModel attach_inertia(ReducedModel model, const PhysicalSystem& system);

/// Samples the model at the given times; velocities by the chain rule.
Trajectory playback(const ReducedModel& model, std::span<const double> times);

/// Generalized force Q = F . dr_body/ds at parameter s.
double project_generalized_force(const ReducedModel& model, const std::string& body,
                                 const Vector3d& force, double s);

struct DriveState {
  double s = 0.0;
  double sdot = 0.0;
};

/// One rk4 step of s'' = Q / I(s) with Q held constant.
DriveState reduced_step_interactive(const ReducedModel& model, DriveState state, double Q,
                                    double dt);

/// Instantaneous response to an impulse: sdot += (dp . dr_body/ds) / I(s).
DriveState apply_generalized_impulse(const ReducedModel& model, DriveState state,
                                     const std::string& body, const Vector3d& dp);

/// Exact copy of a system. Value semantics make this a plain copy.
PhysicalSystem clone_copy(const PhysicalSystem& system);

struct ExtraBody {
  BodySpec spec;
  Vector3d position = Vector3d::Zero();
  Vector3d velocity = Vector3d::Zero();
};

/// A base system plus bodies that neither act on nor feel the base.
struct PaddedSystem {
  PhysicalSystem system;
  int base_n = 0;
  VectorXd extra_q;
  VectorXd extra_qdot;

  int m() const { return system.n(); }
  /// Appends the extras' initial state to a base state.
  State extend(const State& base) const;
};

PaddedSystem pad_noninteracting(const PhysicalSystem& base, const std::vector<ExtraBody>& extras);

/// Keeps only the first `base_n` coordinates of every sample.
Trajectory project_base(const Trajectory& traj, int base_n);

}  // namespace obsim
