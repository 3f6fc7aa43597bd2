#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "obsim/distinguisher.hpp"
#include "obsim/observer.hpp"
#include "obsim/reduction.hpp"
#include "obsim/scenario.hpp"
#include "obsim/vrpipe.hpp"

namespace obsim {

struct ReductionConfig {
  /// Bodies whose azimuth is offered as a drive coordinate.
  std::vector<std::string> charts;
  /// Use every k-th input sample as a knot.
  int knot_stride = 1;
  /// Recording step for reduced candidates; defaults to the scenario dt.
  double record_dt = 0.0;
};

struct ImpulseConfig {
  std::string body;
  /// "tangential", "radial" (fraction of host-relative momentum) or "vector" (dp).
  std::string kind = "tangential";
  double fraction = 0.0;
  Vector3d dp = Vector3d::Zero();
};

struct ProtocolConfig {
  double t_f = 0.0;
  ImpulseConfig impulse;
  double pre_window = 0.0;
  double post_window = 0.0;
  double pass_mult = 2.0;
  double fail_mult = 10.0;
  StateEstimator estimator = StateEstimator::newtonian_fit;
};

struct RenderConfig {
  RenderGrid grid;
  int stride = 1;
  int bits = 8;
};

struct SessionConfig {
  /// Simulation time advanced per server tick; rounded to whole steps.
  double sim_per_tick = 0.0;
  /// Emit a frame every k-th tick (states go out every tick).
  int frame_every = 1;
  /// Simulated time after which the session stops advancing.
  double horizon = 0.0;
  /// Outbound queue bound; frames and states beyond it are dropped oldest first.
  std::size_t outbox_capacity = 256;
};

struct ScenarioConfig {
  std::string name;
  Scenario scenario;
  Integrator integrator = Integrator::rk4;
  double dt = 0.0;
  double duration = 0.0;
  ReductionConfig reduction;
  Resolution observer;
  ProtocolConfig protocol;
  RenderConfig render;
  std::vector<ExtraBody> padding;
  SessionConfig session;
};

/// Parses a JSON scenario document. Errors are ConfigError naming the field
/// path, e.g. "bodies[2].mass" or "dt".
ScenarioConfig parse_config(std::string_view text);
ScenarioConfig load_config(const std::filesystem::path& path);

/// Canonical Sun-Earth-Moon configuration used when no file is given.
ScenarioConfig sem_config();

/// Unforced reference run long enough for the protocol plus a margin, at the
/// reduction recording step.
Trajectory record_for_reduction(const ScenarioConfig& cfg, double horizon);

/// Reduced model of the scenario with inertia attached.
ReducedModel reduce_scenario(const ScenarioConfig& cfg, double horizon);

/// The protocol's impulse, evaluated on the unforced reference at t_f.
ExternalForce protocol_force(const ScenarioConfig& cfg);
Protocol make_protocol(const ScenarioConfig& cfg);

/// Candidate of the requested kind for this scenario.
Candidate make_candidate(const ScenarioConfig& cfg, CandidateKind kind);

}  // namespace obsim
