#include <gtest/gtest.h>

#include <cmath>

#include "obsim/distinguisher.hpp"
#include "obsim/observer.hpp"
#include "obsim/reduction.hpp"
#include "obsim/scenario.hpp"
#include "oracles.hpp"

using namespace obsim;

namespace {

// x = cos t on a single free body, sampled on [t0, t1].
Trajectory oscillator(double t1, int steps) {
  Trajectory traj;
  traj.meta.bodies = {"Bob"};
  for (int k = 0; k <= steps; ++k) {
    const double t = t1 * k / steps;
    traj.samples.push_back({t, Vector3d(std::cos(t), 0, 0), Vector3d(-std::sin(t), 0, 0)});
  }
  return traj;
}

const Trajectory& sem_recording() {
  static const Trajectory traj = [] {
    const Scenario sc = sem::make();
    return simulate(sc.system, sc.init, 3 * sem::kMoonPeriod, sem::kMoonPeriod / 1000);
  }();
  return traj;
}

const ReducedModel& sem_model() {
  static const ReducedModel model = [] {
    const auto drive = detect_drive_coordinate(sem_recording(), {"Earth", "Moon"});
    return attach_inertia(build_reduced(sem_recording(), drive), sem::make().system);
  }();
  return model;
}

}  // namespace

TEST(CloneCopy, BitwiseEqualTrajectories) {
  const Scenario sc = sem::make();
  const PhysicalSystem copy = clone_copy(sc.system);
  EXPECT_EQ(copy, sc.system);
  EXPECT_TRUE(copy.external().empty());
  const Trajectory a = simulate(sc.system, sc.init, 3.0, sem::kStep);
  const Trajectory b = simulate(copy, sc.init, 3.0, sem::kStep);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k) ASSERT_EQ(a.samples[k].q, b.samples[k].q);
}

TEST(CloneCopy, ValueSemantics) {
  const Scenario sc = sem::make();
  auto specs = std::vector<BodySpec>{};
  for (const auto& b : sc.system.bodies()) specs.push_back(b.spec);
  PhysicalSystem copy = clone_copy(sc.system);
  specs[2].mass *= 2;
  copy = PhysicalSystem(specs, copy.G());
  EXPECT_DOUBLE_EQ(sc.system.body("Moon").spec.mass, sem::kMoonMass);
  const PhysicalSystem forced = clone_copy(sc.system).with_external(
      {{"Moon", Impulse{Vector3d(1, 0, 0), 0.0}}});
  EXPECT_TRUE(sc.system.external().empty());
  EXPECT_EQ(forced.external().size(), 1u);
}

TEST(PadNoninteracting, BaseProjectionBitwiseEqual) {
  const Scenario sc = sem::make();
  const ExtraBody probe{{"Probe", 1e-6, false, {}, std::nullopt, Vector3d::Zero()},
                        Vector3d(3, 0, 0), Vector3d(0, 0.25, 0)};
  const PaddedSystem padded = pad_noninteracting(sc.system, {probe});
  EXPECT_EQ(padded.m(), 9);
  EXPECT_EQ(padded.base_n, 6);
  for (auto method : {Integrator::rk4, Integrator::leapfrog}) {
    const Trajectory base = simulate(sc.system, sc.init, 4.0, sem::kStep, method);
    const Trajectory full =
        project_base(simulate(padded.system, padded.extend(sc.init), 4.0, sem::kStep, method),
                     padded.base_n);
    ASSERT_EQ(base.size(), full.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
      ASSERT_EQ(base.samples[k].q, full.samples[k].q);
      ASSERT_EQ(base.samples[k].qdot, full.samples[k].qdot);
    }
    EXPECT_EQ(full.meta.bodies, base.meta.bodies);
  }
}

TEST(PadNoninteracting, ZeroExtrasDegeneratesToCopy) {
  const Scenario sc = sem::make();
  const PaddedSystem padded = pad_noninteracting(sc.system, {});
  EXPECT_EQ(padded.m(), sc.system.n());
  EXPECT_EQ(padded.system, sc.system);
}

TEST(PadNoninteracting, RejectsCouplingWithOffendingEdge) {
  const Scenario sc = sem::make();
  const ExtraBody bad{{"Probe", 1e-6, false, {"Earth"}, std::nullopt, Vector3d::Zero()},
                      Vector3d(3, 0, 0), Vector3d::Zero()};
  try {
    pad_noninteracting(sc.system, {bad});
    FAIL() << "coupling accepted";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("'Probe' <- 'Earth'"), std::string::npos) << e.what();
  }
}

TEST(DetectDrive, PaperScenarioSelectsEarthAzimuth) {
  const DriveCoordinate drive = detect_drive_coordinate(sem_recording(), {"Earth", "Moon"});
  EXPECT_EQ(drive.chart, ChartKind::cylindrical);
  EXPECT_EQ(drive.body, "Earth");
  EXPECT_EQ(drive.label(), "theta(Earth)");
  EXPECT_EQ(drive.direction, 1);
  EXPECT_NEAR(drive.margin, 1.0, 1e-6);
  EXPECT_EQ(drive.unwrap_offsets.size(), sem_recording().size());
}

TEST(DetectDrive, RawCoordinatesAloneFailOnPaperScenario) {
  EXPECT_THROW(detect_drive_coordinate(sem_recording()), NoMonotoneCoordinate);
}

TEST(DetectDrive, HalfPeriodOscillatorIsDecreasing) {
  const DriveCoordinate drive = detect_drive_coordinate(oscillator(oracle::kPi, 100));
  EXPECT_EQ(drive.chart, ChartKind::cartesian);
  EXPECT_EQ(drive.index, 0);
  EXPECT_EQ(drive.direction, -1);
  EXPECT_GT(drive.margin, 0.0);
}

TEST(DetectDrive, FullPeriodOscillatorHasNoMonotoneCoordinate) {
  EXPECT_THROW(detect_drive_coordinate(oscillator(2 * oracle::kPi, 100)), NoMonotoneCoordinate);
}

TEST(DetectDrive, NeedsThreeSamples) {
  EXPECT_THROW(detect_drive_coordinate(oscillator(1.0, 1)), ConfigError);
}

TEST(BuildReduced, PaperScenarioIsOneDof) {
  const ReducedModel& model = sem_model();
  EXPECT_EQ(model.dof(), 1);
  EXPECT_EQ(model.n(), 6);
  EXPECT_EQ(model.slave_slots().size(), 6u);
  EXPECT_DOUBLE_EQ(model.t_begin(), 0.0);
  EXPECT_DOUBLE_EQ(model.t_end(), sem_recording().samples.back().t);
}

TEST(BuildReduced, UniformMotionHasNoSlavesAndLinearLaw) {
  Trajectory traj;
  for (int k = 0; k <= 10; ++k) {
    const double t = 0.1 * k;
    VectorXd q(1);
    VectorXd v(1);
    q << 2.0 * t + 1.0;
    v << 2.0;
    traj.samples.push_back({t, q, v});
  }
  const DriveCoordinate drive = detect_drive_coordinate(traj);
  const ReducedModel model = build_reduced(traj, drive);
  EXPECT_TRUE(model.slave_slots().empty());
  for (double t : {0.05, 0.333, 0.71, 0.99}) EXPECT_NEAR(model.drive_at(t), 2.0 * t + 1.0, 1e-14);
  const Trajectory out = playback(model, std::vector<double>{0.05, 0.5});
  EXPECT_NEAR(out.samples[0].q[0], 1.1, 1e-14);
  EXPECT_NEAR(out.samples[1].qdot[0], 2.0, 1e-14);
}

TEST(BuildReduced, KnotsReproducedExactly) {
  const ReducedModel& model = sem_model();
  const VectorXd t = sem_recording().times();
  const Trajectory out = playback(model, std::vector<double>(t.begin(), t.end()));
  for (std::size_t k = 0; k < out.size(); ++k) {
    ASSERT_EQ(out.samples[k].q, sem_recording().samples[k].q) << k;
  }
}

TEST(BuildReduced, DecreasingDriveIsNormalized) {
  const Trajectory traj = oscillator(oracle::kPi, 64);
  const ReducedModel model = build_reduced(traj, detect_drive_coordinate(traj));
  EXPECT_EQ(model.drive().direction, -1);
  EXPECT_LT(model.drive_at(0.0), model.drive_at(1.0));
  EXPECT_LT(model.drive_at(1.0), model.drive_at(3.0));
  const VectorXd t = traj.times();
  const Trajectory out = playback(model, std::vector<double>(t.begin(), t.end()));
  for (std::size_t k = 0; k < out.size(); ++k) ASSERT_EQ(out.samples[k].q, traj.samples[k].q);
  const Trajectory mid = playback(model, std::vector<double>{1.0});
  EXPECT_NEAR(mid.samples[0].q[0], std::cos(1.0), 1e-6);
}

TEST(BuildReduced, RejectsNonMonotoneDrive) {
  const Trajectory traj = oscillator(2 * oracle::kPi, 64);
  DriveCoordinate drive;
  drive.index = 0;
  drive.margin = 1.0;
  EXPECT_THROW(build_reduced(traj, drive), ConfigError);
}

TEST(Playback, MidpointsMatchFreshIntegration) {
  const ReducedModel& model = sem_model();
  const Scenario sc = sem::make();
  const double h = sem::kMoonPeriod / 1000;
  const Trajectory fine = simulate(sc.system, sc.init, 3 * sem::kMoonPeriod, h / 2);
  std::vector<double> mids;
  for (std::size_t k = 1; k < fine.size(); k += 2) mids.push_back(fine.samples[k].t);
  const Trajectory out = playback(model, mids);
  double worst = 0.0;
  for (std::size_t i = 0; i < mids.size(); ++i) {
    worst = std::max(worst, (out.samples[i].q - fine.samples[2 * i + 1].q).cwiseAbs().maxCoeff());
  }
  EXPECT_LT(worst, 1e-3);
}

TEST(Playback, OutsideValidIntervalThrows) {
  const ReducedModel& model = sem_model();
  EXPECT_THROW(playback(model, std::vector<double>{model.t_end() + 0.01}), DomainError);
  EXPECT_THROW(playback(model, std::vector<double>{-0.01}), DomainError);
}

TEST(GeneralizedForce, OrthogonalAndParallel) {
  const ReducedModel& model = sem_model();
  const double s = model.drive_at(1.0);
  const Vector3d tangent = model.tangent(s).segment<3>(3);
  Vector3d orthogonal = tangent.cross(Vector3d::UnitZ());
  EXPECT_NEAR(project_generalized_force(model, "Moon", orthogonal, s), 0.0, 1e-15);
  const double F = 0.3;
  EXPECT_NEAR(project_generalized_force(model, "Moon", F * tangent.normalized(), s),
              F * tangent.norm(), 1e-14);
  EXPECT_THROW(project_generalized_force(model, "Pluto", tangent, s), ConfigError);
}

TEST(GeneralizedForce, MatchesVirtualWorkFiniteDifference) {
  const ReducedModel& model = sem_model();
  const Vector3d F(0.2, -0.7, 0.1);
  for (double t : {0.5, 2.0, 4.1}) {
    const double s = model.drive_at(t);
    const double h = 1e-6;
    const Vector3d ahead = model.configuration(s + h).segment<3>(3);
    const Vector3d behind = model.configuration(s - h).segment<3>(3);
    const double virtual_work = F.dot(ahead - behind) / (2 * h);
    const double Q = project_generalized_force(model, "Moon", F, s);
    EXPECT_NEAR(Q, virtual_work, 1e-6 * std::abs(virtual_work));
  }
}

TEST(ReducedStep, ZeroForceKeepsRate) {
  const ReducedModel& model = sem_model();
  DriveState ds{model.drive_at(1.0), 1.3};
  const DriveState next = reduced_step_interactive(model, ds, 0.0, 0.01);
  EXPECT_DOUBLE_EQ(next.sdot, 1.3);
  EXPECT_NEAR(next.s, ds.s + 0.013, 1e-15);
}

TEST(ReducedStep, ConstantForceOnStraightLineIsQuadratic) {
  Trajectory traj;
  traj.meta.bodies = {"Cart"};
  for (int k = 0; k <= 20; ++k) {
    const double t = 0.1 * k;
    traj.samples.push_back({t, Vector3d(t, 2 * t, 0.5), Vector3d(1, 2, 0)});
  }
  const ReducedModel model = attach_inertia(
      build_reduced(traj, detect_drive_coordinate(traj)),
      PhysicalSystem({{"Cart", 3.0, false, {}, std::nullopt, Vector3d::Zero()}}));
  // y grows fastest, so it drives: dq/ds = (1/2, 1, 0).
  EXPECT_EQ(model.drive().index, 1);
  EXPECT_NEAR(model.inertia(0.7), 3.0 * 1.25, 1e-12);
  const double Q = 0.6;
  DriveState ds{0.2, 1.0};
  for (int k = 0; k < 10; ++k) ds = reduced_step_interactive(model, ds, Q, 0.05);
  const double t = 0.5;
  const double a = Q / 3.75;
  EXPECT_NEAR(ds.s, 0.2 + t + 0.5 * a * t * t, 1e-13);
  EXPECT_NEAR(ds.sdot, 1.0 + a * t, 1e-13);
}

TEST(ReducedStep, NonPositiveInertiaThrows) {
  Trajectory traj;
  traj.meta.bodies = {"Ghost"};
  for (int k = 0; k <= 5; ++k) {
    traj.samples.push_back({0.1 * k, Vector3d(0.1 * k, 0, 0), Vector3d(1, 0, 0)});
  }
  const ReducedModel model = attach_inertia(
      build_reduced(traj, detect_drive_coordinate(traj)),
      PhysicalSystem({{"Ghost", 0.0, false, {}, std::nullopt, Vector3d::Zero()}}));
  EXPECT_THROW(reduced_step_interactive(model, {0.1, 1.0}, 0.0, 0.01), Error);
  const ReducedModel bare = build_reduced(traj, detect_drive_coordinate(traj));
  EXPECT_THROW(bare.inertia(0.1), ConfigError);
}

TEST(ReducedStep, InertiaIsVirtualWorkMass) {
  const ReducedModel& model = sem_model();
  const double s = model.drive_at(2.0);
  const VectorXd tangent = model.tangent(s);
  const double expected = sem::kEarthMass * tangent.head<3>().squaredNorm() +
                          sem::kMoonMass * tangent.tail<3>().squaredNorm();
  EXPECT_NEAR(model.inertia(s), expected, 1e-15);
}

TEST(ReducedInteractive, ImpulseScalesSpeedsAndKeepsMoonOnRecordedCircle) {
  const Scenario sc = sem::make();
  const double T = sem::kMoonPeriod;
  Protocol protocol;
  protocol.scenario = sc;
  protocol.t_f = T;
  const Trajectory before = simulate(sc.system, sc.init, T, sem::kStep);
  protocol.force = tangential_impulse(sc.system, state_at(before.samples.back()), "Moon", 0.1, T);
  const std::vector<double> times = sample_times(0.0, 2 * T, sem::kStep);
  const Trajectory run =
      candidate_run(Candidate::reduced(sem_model(), true), protocol, times);
  const Trajectory plain = playback(sem_model(), times);

  std::size_t apply = 0;
  while (times[apply] < T) ++apply;
  // Before the force the interactive model is plain playback.
  for (std::size_t k = 0; k < apply; ++k) ASSERT_EQ(run.samples[k].q, plain.samples[k].q);
  // Afterwards the whole configuration moves along the recorded curve at a
  // new rate: the Moon stays on its recorded circle about the Earth, and the
  // Earth, which real physics leaves untouched, changes speed with it.
  const double before_speed = plain.samples[apply + 1].qdot.head<3>().norm();
  for (std::size_t k = apply + 1; k < times.size(); k += 37) {
    const VectorXd& q = run.samples[k].q;
    const VectorXd& v = run.samples[k].qdot;
    EXPECT_NEAR((q.tail<3>() - q.head<3>()).norm(), 0.05, 1e-6);
    EXPECT_GT(std::abs(v.head<3>().norm() / before_speed - 1), 1e-5);
  }
}
