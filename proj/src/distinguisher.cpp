#include "obsim/distinguisher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/LevenbergMarquardt>
#include <unsupported/Eigen/NumericalDiff>

namespace obsim {

std::string_view to_string(CandidateKind kind) {
  switch (kind) {
    case CandidateKind::real:
      return "real";
    case CandidateKind::copy:
      return "copy";
    case CandidateKind::padded:
      return "padded";
    case CandidateKind::reduced_kinematic:
      return "reduced_kinematic";
    case CandidateKind::reduced_interactive:
      return "reduced_interactive";
  }
  return "unknown";
}

CandidateKind parse_candidate_kind(std::string_view name) {
  if (name == "real") return CandidateKind::real;
  if (name == "copy") return CandidateKind::copy;
  if (name == "padded") return CandidateKind::padded;
  if (name == "reduced_kinematic" || name == "kinematic") return CandidateKind::reduced_kinematic;
  if (name == "reduced_interactive" || name == "reduced") return CandidateKind::reduced_interactive;
  throw ConfigError("candidate", "unknown candidate '" + std::string(name) + "'");
}

std::string_view to_string(Verdict verdict) {
  switch (verdict) {
    case Verdict::indistinguishable:
      return "INDISTINGUISHABLE";
    case Verdict::distinguishable_nonphysical:
      return "DISTINGUISHABLE_NONPHYSICAL";
    case Verdict::inconclusive:
      return "INCONCLUSIVE";
  }
  return "INCONCLUSIVE";
}

Candidate Candidate::real(const PhysicalSystem& system) {
  return {CandidateKind::real, system, system.n()};
}

Candidate Candidate::copy(const PhysicalSystem& system) {
  return {CandidateKind::copy, clone_copy(system), system.n()};
}

Candidate Candidate::padded(PaddedSystem system) {
  const int m = system.m();
  return {CandidateKind::padded, std::move(system), m};
}

Candidate Candidate::reduced(ReducedModel model, bool interactive) {
  if (interactive && !model.has_inertia()) {
    throw ConfigError("candidate", "interactive reduced candidate needs an inertia profile");
  }
  const int p = model.dof();
  return {interactive ? CandidateKind::reduced_interactive : CandidateKind::reduced_kinematic,
          std::move(model), p};
}

int Candidate::observed_n() const {
  return std::visit(
      [](const auto& payload) -> int {
        using T = std::decay_t<decltype(payload)>;
        if constexpr (std::is_same_v<T, PaddedSystem>) {
          return payload.base_n;
        } else {
          return payload.n();
        }
      },
      payload);
}

bool dof_criterion(int p, int n) { return p >= n; }

Verdict classify(double d_max, double pass_mult, double fail_mult) {
  if (d_max <= pass_mult) return Verdict::indistinguishable;
  if (d_max >= fail_mult) return Verdict::distinguishable_nonphysical;
  return Verdict::inconclusive;
}

Trajectory predict_newtonian(const PhysicalSystem& system, const State& measured, double duration,
                             double dt, Integrator method) {
  return simulate(system, measured, duration, dt, method);
}

State two_point_state(const MeasurementSeries& series, std::size_t k) {
  if (k + 1 >= series.size()) throw ConfigError("series", "two-point estimate needs reading k+1");
  State s;
  s.t = series.time(k);
  s.q = series.position(k);
  s.qdot = (series.position(k + 1) - s.q) / series.resolution.eps_t;
  return s;
}

VectorXd dense_position(const Trajectory& traj, double t) {
  if (traj.empty()) throw DomainError("empty trajectory");
  const auto& samples = traj.samples;
  const double t0 = samples.front().t;
  const double t1 = samples.back().t;
  const double slack = 1e-9 * std::max(1.0, std::abs(t1 - t0));
  if (t < t0 - slack || t > t1 + slack) {
    throw DomainError("dense output requested outside the trajectory at t=" + std::to_string(t));
  }
  t = std::clamp(t, t0, t1);
  if (samples.size() == 1) return samples.front().q;
  const auto it = std::upper_bound(samples.begin(), samples.end(), t,
                                   [](double value, const Sample& s) { return value < s.t; });
  std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(it - samples.begin() - 1, 0));
  k = std::min(k, samples.size() - 2);
  const auto& a = samples[k];
  const auto& b = samples[k + 1];
  if (t == a.t) return a.q;
  if (t == b.t) return b.q;
  const double h = b.t - a.t;
  const double s = (t - a.t) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * a.q + ((s3 - 2 * s2 + s) * h) * a.qdot +
         (-2 * s3 + 3 * s2) * b.q + ((s3 - s2) * h) * b.qdot;
}

namespace {

struct FitResidual : Eigen::DenseFunctor<double> {
  FitResidual(const PhysicalSystem& system, const MeasurementSeries& window, double dt,
              Integrator method)
      : DenseFunctor<double>(2 * system.n(),
                             static_cast<int>(window.size()) * system.n()),
        system_(system),
        window_(window),
        dt_(dt),
        method_(method) {}

  int operator()(const InputType& x, ValueType& fvec) const {
    const int n = system_.n();
    State s{window_.time(0), x.head(n), x.tail(n)};
    const double span = window_.time(window_.size() - 1) - s.t;
    const double scale = 1.0 / window_.resolution.eps_q;
    try {
      const Trajectory traj = simulate(system_, s, span, dt_, method_);
      for (std::size_t k = 0; k < window_.size(); ++k) {
        fvec.segment(static_cast<Eigen::Index>(k) * n, n) =
            scale * (dense_position(traj, window_.time(k)) - window_.position(k));
      }
    } catch (const Error&) {
      fvec.setConstant(1e12);
    }
    return 0;
  }

 private:
  const PhysicalSystem& system_;
  const MeasurementSeries& window_;
  double dt_;
  Integrator method_;
};

// Position and velocity at the first reading from a local cubic least-squares fit.
State polynomial_guess(const MeasurementSeries& window) {
  const std::size_t count = std::min<std::size_t>(window.size(), 41);
  const int degree = static_cast<int>(std::min<std::size_t>(3, count - 1));
  const double t0 = window.time(0);
  const double span = std::max(window.time(count - 1) - t0, window.resolution.eps_t);
  MatrixXd vandermonde(static_cast<Eigen::Index>(count), degree + 1);
  MatrixXd rhs(static_cast<Eigen::Index>(count), window.samples.front().q.size());
  for (std::size_t k = 0; k < count; ++k) {
    const double tau = (window.time(k) - t0) / span;
    double power = 1.0;
    for (int d = 0; d <= degree; ++d) {
      vandermonde(static_cast<Eigen::Index>(k), d) = power;
      power *= tau;
    }
    rhs.row(static_cast<Eigen::Index>(k)) = window.position(k).transpose();
  }
  const MatrixXd coeffs = vandermonde.colPivHouseholderQr().solve(rhs);
  State s;
  s.t = t0;
  s.q = coeffs.row(0).transpose();
  s.qdot = degree >= 1 ? VectorXd(coeffs.row(1).transpose() / span)
                       : VectorXd::Zero(coeffs.cols());
  return s;
}

std::size_t first_at_or_after(const Trajectory& traj, double t) {
  for (std::size_t k = 0; k < traj.size(); ++k) {
    if (traj.samples[k].t >= t) return k;
  }
  return traj.size();
}

Trajectory slice(const Trajectory& traj, std::size_t begin, std::size_t end) {
  Trajectory out;
  out.meta = traj.meta;
  out.samples.assign(traj.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     traj.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

ExternalForce force_at(const Protocol& protocol) {
  ExternalForce force = protocol.force;
  if (auto* imp = std::get_if<Impulse>(&force.kind)) imp->time = protocol.t_f;
  return force;
}

double force_start(const ExternalForce& force) {
  if (const auto* imp = std::get_if<Impulse>(&force.kind)) return imp->time;
  return std::get<ForceWindow>(force.kind).t_on;
}

Trajectory interactive_run(const ReducedModel& model, const ExternalForce& force,
                           const std::vector<double>& times) {
  const double t_force = force_start(force);
  const std::size_t apply = [&] {
    for (std::size_t k = 0; k < times.size(); ++k) {
      if (times[k] >= t_force) return k;
    }
    return times.size();
  }();
  std::vector<double> before(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(apply));
  Trajectory traj = playback(model, before);
  traj.meta.integrator = "reduced-interactive";
  if (apply == times.size()) return traj;

  DriveState ds{model.drive_at(times[apply]), model.drive_rate_at(times[apply])};
  if (const auto* imp = std::get_if<Impulse>(&force.kind)) {
    ds = apply_generalized_impulse(model, ds, force.target, imp->dp);
  }
  const auto emit = [&](double t) {
    traj.samples.push_back({t, model.configuration(ds.s), model.tangent(ds.s) * ds.sdot});
  };
  emit(times[apply]);
  for (std::size_t k = apply + 1; k < times.size(); ++k) {
    double Q = 0.0;
    if (const auto* win = std::get_if<ForceWindow>(&force.kind)) {
      if (times[k - 1] >= win->t_on && times[k - 1] < win->t_off) {
        Q = project_generalized_force(model, force.target, win->force, ds.s);
      }
    }
    ds = reduced_step_interactive(model, ds, Q, times[k] - times[k - 1]);
    emit(times[k]);
  }
  return traj;
}

}  // namespace

State fit_newtonian_state(const PhysicalSystem& system, const MeasurementSeries& window, double dt,
                          Integrator method) {
  if (window.size() < 2) throw ConfigError("window", "state fit needs at least two readings");
  if (window.samples.front().q.size() != system.n()) {
    throw ConfigError("window", "readings do not match system coordinates");
  }
  const PhysicalSystem free_system = system.with_external({});
  const State guess = polynomial_guess(window);
  const int n = system.n();
  VectorXd x(2 * n);
  x << guess.q, guess.qdot;

  FitResidual residual(free_system, window, dt, method);
  Eigen::NumericalDiff<FitResidual> numeric(residual);
  Eigen::LevenbergMarquardt<Eigen::NumericalDiff<FitResidual>> lm(numeric);
  lm.setXtol(1e-13);
  lm.setFtol(1e-13);
  lm.setMaxfev(400 * (2 * n + 1));
  lm.minimize(x);
  return State{window.time(0), x.head(n), x.tail(n)};
}

Trajectory candidate_run(const Candidate& candidate, const Protocol& protocol,
                         const std::vector<double>& times) {
  if (times.empty()) throw ConfigError("times", "empty protocol grid");
  const ExternalForce force = force_at(protocol);
  const double duration = times.back() - times.front();
  const State& init = protocol.scenario.init;
  switch (candidate.kind) {
    case CandidateKind::real:
    case CandidateKind::copy: {
      const auto& system = std::get<PhysicalSystem>(candidate.payload);
      return simulate(system.with_external({force}), init, duration, protocol.dt,
                      protocol.integrator);
    }
    case CandidateKind::padded: {
      const auto& padded = std::get<PaddedSystem>(candidate.payload);
      const Trajectory full = simulate(padded.system.with_external({force}), padded.extend(init),
                                       duration, protocol.dt, protocol.integrator);
      return project_base(full, padded.base_n);
    }
    case CandidateKind::reduced_kinematic:
      return playback(std::get<ReducedModel>(candidate.payload), times);
    case CandidateKind::reduced_interactive:
      return interactive_run(std::get<ReducedModel>(candidate.payload), force, times);
  }
  throw ConfigError("candidate", "unknown candidate kind");
}

DistinguisherReport assess(const Assessment& plan, const Trajectory& reference,
                           const Trajectory& candidate_traj) {
  if (reference.size() != candidate_traj.size()) {
    throw ConfigError("trajectories", "reference and candidate grids differ");
  }
  if (plan.apply_index >= candidate_traj.size()) {
    throw ConfigError("apply_index", "force index beyond the recorded run");
  }
  if (candidate_traj.dim() != plan.system.n()) {
    throw ConfigError("candidate", "candidate coordinate count does not match the scenario");
  }
  DistinguisherReport report;
  report.n = plan.system.n();
  report.pass_mult = plan.pass_mult;
  report.fail_mult = plan.fail_mult;
  report.resolution = plan.resolution;

  const std::size_t ia = plan.apply_index;
  const double t_apply = candidate_traj.samples[ia].t;
  report.t_apply = t_apply;
  const double slack = 1e-9 * plan.dt;
  const std::size_t i0 = first_at_or_after(candidate_traj, t_apply - plan.pre_window - slack);
  const std::size_t ib = [&] {
    std::size_t k = ia;
    while (k + 1 < candidate_traj.size() &&
           candidate_traj.samples[k + 1].t <= t_apply + plan.post_window + slack) {
      ++k;
    }
    return k + 1;
  }();

  const MeasurementSeries ref_pre =
      measure(slice(reference, i0, ia + 1), plan.resolution, "reference");
  const MeasurementSeries cand_pre =
      measure(slice(candidate_traj, i0, ia + 1), plan.resolution, "candidate");
  report.pre_equal = observably_equal(ref_pre, cand_pre);
  report.pre_phase_failed = !report.pre_equal;

  // The observer's state at the force instant: estimated from the readings
  // taken before it, then the known impulse is added.
  const PhysicalSystem free_system = plan.system.with_external({});
  State start;
  if (plan.estimator == StateEstimator::two_point && cand_pre.size() >= 2) {
    start = two_point_state(cand_pre, cand_pre.size() - 2);
  } else {
    start = fit_newtonian_state(free_system, cand_pre, plan.dt, plan.integrator);
  }
  const double t_hat_apply = cand_pre.time(cand_pre.size() - 1);
  State at_force = state_at(
      simulate(free_system, start, t_hat_apply - start.t, plan.dt, plan.integrator)
          .samples.back());
  at_force.t = t_hat_apply;

  std::vector<ExternalForce> schedule;
  for (std::size_t k = 0; k < plan.forces.size(); ++k) {
    const auto& force = plan.forces[k];
    const auto* imp = std::get_if<Impulse>(&force.kind);
    if (k == 0 && imp) {
      const auto& body = plan.system.body(force.target);
      at_force.qdot.segment<3>(body.slot) += imp->dp / body.spec.mass;
    } else {
      schedule.push_back(force);
    }
  }
  const PhysicalSystem predictor = free_system.with_external(std::move(schedule));

  const MeasurementSeries cand_post =
      measure(slice(candidate_traj, ia, ib), plan.resolution, "candidate");
  const double t_hat_end = cand_post.time(cand_post.size() - 1);
  const Trajectory prediction = predict_newtonian(predictor, at_force, t_hat_end - t_hat_apply,
                                                  plan.dt, plan.integrator);
  report.times.reserve(cand_post.size());
  report.deviation.reserve(cand_post.size());
  for (std::size_t k = 0; k < cand_post.size(); ++k) {
    const double t_hat = cand_post.time(k);
    const VectorXd diff = cand_post.position(k) - dense_position(prediction, t_hat);
    const double d = diff.cwiseAbs().maxCoeff() / plan.resolution.eps_q;
    report.times.push_back(t_hat);
    report.deviation.push_back(d);
    report.d_max = std::max(report.d_max, d);
  }
  report.verdict = report.pre_equal ? classify(report.d_max, plan.pass_mult, plan.fail_mult)
                                    : Verdict::inconclusive;
  return report;
}

DistinguisherReport run_protocol(const Candidate& candidate, const Protocol& protocol) {
  const PhysicalSystem& system = protocol.scenario.system;
  if (candidate.observed_n() != system.n()) {
    throw ConfigError("candidate", "candidate and scenario coordinate counts differ");
  }
  if (!(protocol.pre_window > 0.0) || !(protocol.post_window > 0.0)) {
    throw ConfigError("protocol", "pre_window and post_window must be positive");
  }
  if (!(protocol.pass_mult < protocol.fail_mult)) {
    throw ConfigError("protocol", "pass_mult must be below fail_mult");
  }
  const State& init = protocol.scenario.init;
  const double duration = protocol.t_f + protocol.post_window - init.t;
  const std::vector<double> times = sample_times(init.t, duration, protocol.dt);

  const Trajectory reference =
      simulate(system.with_external({}), init, duration, protocol.dt, protocol.integrator);
  const Trajectory run = candidate_run(candidate, protocol, times);

  Assessment plan;
  plan.system = system.with_external({});
  plan.dt = protocol.dt;
  plan.integrator = protocol.integrator;
  plan.apply_index = first_at_or_after(run, force_start(force_at(protocol)));
  if (plan.apply_index >= run.size()) {
    throw ConfigError("t_f", "force time lies beyond the protocol window");
  }
  plan.forces = {force_at(protocol)};
  plan.pre_window = protocol.pre_window;
  plan.post_window = protocol.post_window;
  plan.resolution = protocol.resolution;
  plan.pass_mult = protocol.pass_mult;
  plan.fail_mult = protocol.fail_mult;
  plan.estimator = protocol.estimator;

  DistinguisherReport report = assess(plan, reference, run);
  report.candidate = candidate.kind;
  report.p = candidate.p;
  return report;
}

}  // namespace obsim
