#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "obsim/dynamics.hpp"
#include "obsim/observer.hpp"
#include "obsim/reduction.hpp"
#include "obsim/scenario.hpp"

namespace obsim {

enum class CandidateKind { real, copy, padded, reduced_kinematic, reduced_interactive };

std::string_view to_string(CandidateKind kind);
CandidateKind parse_candidate_kind(std::string_view name);

enum class Verdict { indistinguishable, distinguishable_nonphysical, inconclusive };

std::string_view to_string(Verdict verdict);

/// A system offered to the observer in place of the real one.
struct Candidate {
  CandidateKind kind = CandidateKind::copy;
  std::variant<PhysicalSystem, PaddedSystem, ReducedModel> payload;
  /// Degrees of freedom of the payload.
  int p = 0;

  static Candidate real(const PhysicalSystem& system);
  static Candidate copy(const PhysicalSystem& system);
  static Candidate padded(PaddedSystem system);
  static Candidate reduced(ReducedModel model, bool interactive);

  /// Number of coordinates the observer sees (extras of a padded system hidden).
  int observed_n() const;
};

enum class StateEstimator {
  /// Least-squares fit of a Newtonian state to the measured window.
  newtonian_fit,
  /// Position at a reading plus (next - this) / eps_t.
  two_point,
};

struct Protocol {
  Scenario scenario;
  double dt = sem::kStep;
  Integrator integrator = Integrator::rk4;
  /// Force time; impulses fire at the first sample time >= t_f.
  double t_f = 0.0;
  ExternalForce force;
  double pre_window = 0.0;
  double post_window = 0.0;
  Resolution resolution;
  double pass_mult = 2.0;
  double fail_mult = 10.0;
  StateEstimator estimator = StateEstimator::newtonian_fit;
};

struct DistinguisherReport {
  CandidateKind candidate = CandidateKind::copy;
  int p = 0;
  int n = 0;
  bool pre_equal = false;
  /// Set when the candidate failed observable equivalence before the force.
  bool pre_phase_failed = false;
  double t_apply = 0.0;
  /// Measured clock readings of the post-force window and the deviation from
  /// the Newtonian prediction at each, in units of eps_q.
  std::vector<double> times;
  std::vector<double> deviation;
  double d_max = 0.0;
  double pass_mult = 2.0;
  double fail_mult = 10.0;
  Resolution resolution;
  Verdict verdict = Verdict::inconclusive;
};

/// What the observer knows when judging a recorded candidate run.
struct Assessment {
  PhysicalSystem system;
  double dt = 0.0;
  Integrator integrator = Integrator::rk4;
  /// Sample index of the first force (or of the split between fit and
  /// prediction windows when no force was applied).
  std::size_t apply_index = 0;
  /// Forces known to the observer, in time order. The first is the one at
  /// apply_index; later ones stay in the prediction schedule.
  std::vector<ExternalForce> forces;
  double pre_window = 0.0;
  double post_window = 0.0;
  Resolution resolution;
  double pass_mult = 2.0;
  double fail_mult = 10.0;
  StateEstimator estimator = StateEstimator::newtonian_fit;
};

/// The observer's theoretical expectation: true physics integrated from a state.
Trajectory predict_newtonian(const PhysicalSystem& system, const State& measured, double duration,
                             double dt, Integrator method = Integrator::rk4);

/// Velocity by two consecutive readings: (q_{k+1} - q_k) / eps_t.
State two_point_state(const MeasurementSeries& series, std::size_t k);

/// Newtonian state at the first reading of `window` that best explains every
/// reading in the window (least squares, Levenberg-Marquardt).
State fit_newtonian_state(const PhysicalSystem& system, const MeasurementSeries& window, double dt,
                          Integrator method = Integrator::rk4);

/// Position at time t from cubic Hermite interpolation of samples (q, qdot).
VectorXd dense_position(const Trajectory& traj, double t);

/// The candidate's observable trajectory under the protocol, on `times`.
Trajectory candidate_run(const Candidate& candidate, const Protocol& protocol,
                         const std::vector<double>& times);

/// Judges a recorded candidate run against the real reference on the same grid.
DistinguisherReport assess(const Assessment& plan, const Trajectory& reference,
                           const Trajectory& candidate_traj);

DistinguisherReport run_protocol(const Candidate& candidate, const Protocol& protocol);

/// Necessary condition for an interactive simulation: p >= n.
bool dof_criterion(int p, int n);

Verdict classify(double d_max, double pass_mult, double fail_mult);

}  // namespace obsim
