#include "obsim/session.hpp"

#include <algorithm>
#include <cmath>

#include <boost/beast/core/detail/base64.hpp>
#include <json.hpp>

#include "obsim/trajectory_io.hpp"

namespace obsim {

namespace {

using nlohmann::json;

std::string base64(std::string_view bytes) {
  namespace b64 = boost::beast::detail::base64;
  std::string out(b64::encoded_size(bytes.size()), '\0');
  out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
  return out;
}

const char* hidden_label(CandidateKind kind) {
  return kind == CandidateKind::copy ? "real" : "simulation";
}

}  // namespace

std::string_view to_string(Phase phase) {
  switch (phase) {
    case Phase::running:
      return "running";
    case Phase::guessed:
      return "guessed";
    case Phase::revealed:
      return "revealed";
  }
  return "running";
}

std::shared_ptr<const SessionAssets> prepare_session_assets(const ScenarioConfig& config) {
  auto assets = std::make_shared<SessionAssets>();
  assets->config = config;
  const double per_tick = config.session.sim_per_tick > 0.0 ? config.session.sim_per_tick : config.dt;
  assets->steps_per_tick = std::max(1, static_cast<int>(std::lround(per_tick / config.dt)));
  const double span = 1.25 * config.session.horizon + 10.0 * config.dt;
  ScenarioConfig recording = config;
  recording.reduction.record_dt = config.dt;
  recording.reduction.knot_stride = 1;
  assets->model = std::make_shared<const ReducedModel>(reduce_scenario(recording, span));
  return assets;
}

Session::Session(std::shared_ptr<const SessionAssets> assets, std::uint64_t seed, std::string id)
    : assets_(std::move(assets)),
      id_(std::move(id)),
      registers_(std::max(1, assets_->config.render.grid.R),
                 std::max(1, assets_->config.render.grid.C), assets_->config.render.bits) {
  std::mt19937_64 rng(seed);
  hidden_ = (rng() & 1u) ? CandidateKind::reduced_interactive : CandidateKind::copy;
  state_ = assets_->config.scenario.init;
  samples_.push_back({state_.t, state_.q, state_.qdot});
  emit_state();
  emit_frame();
}

void Session::push(std::string message, bool droppable) {
  const std::size_t capacity = assets_->config.session.outbox_capacity;
  if (droppable && outbox_.size() >= capacity) {
    const auto victim = std::find_if(outbox_.begin(), outbox_.end(),
                                     [](const auto& entry) { return entry.second; });
    if (victim == outbox_.end()) {
      ++dropped_;
      return;
    }
    outbox_.erase(victim);
    ++dropped_;
  }
  outbox_.emplace_back(std::move(message), droppable);
}

std::optional<std::string> Session::pop_outbound() {
  if (outbox_.empty()) return std::nullopt;
  std::string out = std::move(outbox_.front().first);
  outbox_.pop_front();
  return out;
}

std::vector<std::string> Session::drain() {
  std::vector<std::string> out;
  while (auto msg = pop_outbound()) out.push_back(std::move(*msg));
  return out;
}

void Session::emit_state() {
  const auto& system = assets_->config.scenario.system;
  json bodies = json::array();
  for (const auto& body : system.bodies()) {
    const Vector3d p = detail::body_position<double>(body, state_.q);
    bodies.push_back({{"name", body.spec.name}, {"q", {p.x(), p.y(), p.z()}}});
  }
  push(json{{"type", "state"}, {"t", state_.t}, {"bodies", std::move(bodies)}}.dump(), true);
}

void Session::emit_frame() {
  const auto& grid = assets_->config.render.grid;
  const PixelFrame frame =
      render(assets_->config.scenario.system, state_.q, state_.t, grid, registers_);
  push(json{{"type", "frame"},
            {"t", state_.t},
            {"R", frame.R},
            {"C", frame.C},
            {"data", base64(encode_pgm(frame))}}
           .dump(),
       true);
}

void Session::error(const std::string& msg) {
  push(json{{"type", "error"}, {"msg", msg}}.dump(), false);
}

void Session::status() {
  push(json{{"type", "status"},
            {"phase", to_string(phase_)},
            {"t", state_.t},
            {"halted", halted_}}
           .dump(),
       false);
}

void Session::handle(std::string_view line) {
  json msg;
  try {
    msg = json::parse(line);
  } catch (const json::exception&) {
    error("malformed JSON");
    return;
  }
  if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
    error("message needs a string \"type\"");
    return;
  }
  const std::string type = msg["type"].get<std::string>();
  const auto only = [&msg](std::initializer_list<const char*> keys) {
    for (const auto& item : msg.items()) {
      if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return item.key() == k; })) {
        return false;
      }
    }
    return true;
  };
  if (type == "ping") {
    if (!only({"type"})) return error("ping takes no fields");
    status();
  } else if (type == "apply_force") {
    if (!only({"type", "body", "dp"}) || !msg.contains("body") || !msg["body"].is_string() ||
        !msg.contains("dp") || !msg["dp"].is_array() || msg["dp"].size() != 3 ||
        !std::all_of(msg["dp"].begin(), msg["dp"].end(),
                     [](const json& x) { return x.is_number(); })) {
      return error("apply_force needs {\"body\": str, \"dp\": [x, y, z]}");
    }
    const Vector3d dp(msg["dp"][0].get<double>(), msg["dp"][1].get<double>(),
                      msg["dp"][2].get<double>());
    on_force(msg["body"].get<std::string>(), dp);
  } else if (type == "guess") {
    if (!only({"type", "value"}) || !msg.contains("value") || !msg["value"].is_string()) {
      return error("guess needs a string \"value\"");
    }
    on_guess(msg["value"].get<std::string>());
  } else {
    error("unknown message type '" + type + "'");
  }
}

void Session::on_force(const std::string& body, const Vector3d& dp) {
  if (phase_ != Phase::running) return error("session is no longer running");
  if (halted_) return error("simulation has halted");
  if (!dp.allFinite()) return error("dp must be finite");
  const auto& system = assets_->config.scenario.system;
  const auto idx = system.find(body);
  if (!idx) return error("unknown body '" + body + "'");
  const auto& spec = system.bodies()[static_cast<std::size_t>(*idx)];
  if (spec.slot < 0) return error("fixed body '" + body + "' accepts no force");
  if (!(spec.spec.mass > 0.0)) return error("massless body '" + body + "' accepts no force");

  AppliedForce applied;
  applied.id = static_cast<int>(history_.size()) + 1;
  applied.body = body;
  applied.dp = dp;
  applied.applies_at = state_.t;
  applied.sample = samples_.size() - 1;
  history_.push_back(applied);
  pending_.push_back(history_.size() - 1);
  push(json{{"type", "ack"}, {"force_id", applied.id}, {"applies_at", applied.applies_at}}.dump(),
       false);
}

void Session::apply_pending() {
  if (pending_.empty()) return;
  const auto& system = assets_->config.scenario.system;
  const ReducedModel& model = *assets_->model;
  for (const std::size_t k : pending_) {
    const auto& force = history_[k];
    if (hidden_ == CandidateKind::copy) {
      const auto& body = system.body(force.body);
      state_.qdot.segment<3>(body.slot) += force.dp / body.spec.mass;
    } else {
      if (!engaged_) {
        drive_ = {model.drive_at(state_.t), model.drive_rate_at(state_.t)};
        engaged_ = true;
      }
      drive_ = apply_generalized_impulse(model, drive_, force.body, force.dp);
      state_.qdot = model.tangent(drive_.s) * drive_.sdot;
    }
  }
  pending_.clear();
  samples_.back().qdot = state_.qdot;
}

void Session::step_once() {
  const auto& cfg = assets_->config;
  ++step_index_;
  const double t_next = cfg.scenario.init.t + static_cast<double>(step_index_) * cfg.dt;
  if (hidden_ == CandidateKind::copy) {
    state_ = step<double>(cfg.scenario.system, state_, cfg.dt, cfg.integrator);
    if (!state_.q.allFinite() || !state_.qdot.allFinite()) {
      throw NumericError("non-finite state", samples_.size() - 1);
    }
  } else {
    const ReducedModel& model = *assets_->model;
    if (engaged_) {
      drive_ = reduced_step_interactive(model, drive_, 0.0, cfg.dt);
    } else {
      drive_ = {model.drive_at(t_next), model.drive_rate_at(t_next)};
    }
    state_.q = model.configuration(drive_.s);
    state_.qdot = model.tangent(drive_.s) * drive_.sdot;
  }
  state_.t = t_next;
  samples_.push_back({state_.t, state_.q, state_.qdot});
}

void Session::advance() {
  if (phase_ != Phase::running || halted_) {
    status();
    return;
  }
  ++ticks_;
  try {
    apply_pending();
    for (int k = 0; k < assets_->steps_per_tick; ++k) {
      const double horizon = assets_->config.session.horizon;
      if (state_.t + assets_->config.dt > horizon + 1e-9 * std::max(1.0, horizon)) {
        halted_ = true;
        break;
      }
      step_once();
    }
  } catch (const Error& e) {
    halted_ = true;
    error(std::string("simulation ended: ") + e.what());
    return;
  }
  emit_state();
  if (ticks_ % assets_->config.session.frame_every == 0) emit_frame();
  if (halted_) {
    error("simulation reached the session horizon");
  }
}

DistinguisherReport Session::build_report() const {
  const auto& cfg = assets_->config;
  Trajectory run;
  run.meta = {cfg.name, cfg.dt, std::string(to_string(cfg.integrator)),
              cfg.scenario.system.movable_names()};
  run.samples = samples_;
  const double duration = samples_.back().t - samples_.front().t;
  const Trajectory reference =
      simulate(cfg.scenario.system.with_external({}), cfg.scenario.init, duration, cfg.dt,
               cfg.integrator);

  Assessment plan;
  plan.system = cfg.scenario.system.with_external({});
  plan.dt = cfg.dt;
  plan.integrator = cfg.integrator;
  plan.resolution = cfg.observer;
  plan.pass_mult = cfg.protocol.pass_mult;
  plan.fail_mult = cfg.protocol.fail_mult;
  plan.estimator = cfg.protocol.estimator;
  const double t0 = samples_.front().t;
  if (!history_.empty()) {
    plan.apply_index = history_.front().sample;
    for (const auto& f : history_) plan.forces.push_back(make_impulse(f.body, f.dp, f.applies_at));
  } else {
    plan.apply_index = (samples_.size() - 1) / 2;
  }
  const double t_apply = samples_[plan.apply_index].t;
  plan.pre_window = t_apply - t0;
  plan.post_window = samples_.back().t - t_apply;
  if (cfg.protocol.pre_window > 0.0) plan.pre_window = std::min(plan.pre_window, cfg.protocol.pre_window);
  if (cfg.protocol.post_window > 0.0) {
    plan.post_window = std::min(plan.post_window, cfg.protocol.post_window);
  }
  DistinguisherReport report = assess(plan, reference, run);
  report.candidate = hidden_;
  report.p = hidden_ == CandidateKind::copy ? cfg.scenario.system.n() : 1;
  return report;
}

void Session::on_guess(const std::string& value) {
  if (phase_ != Phase::running) return error("a guess was already made");
  if (value != "real" && value != "simulation") return error("unknown guess value");
  phase_ = Phase::guessed;
  const bool correct = value == hidden_label(hidden_);
  json report;
  try {
    report = json::parse(report_to_json(build_report(), -1));
  } catch (const Error& e) {
    report = {{"verdict", to_string(Verdict::inconclusive)},
              {"note", std::string("not enough observations: ") + e.what()}};
  }
  phase_ = Phase::revealed;
  push(json{{"type", "reveal"},
            {"hidden", hidden_label(hidden_)},
            {"candidate", to_string(hidden_)},
            {"guess", value},
            {"correct", correct},
            {"report", std::move(report)}}
           .dump(),
       false);
}

Session start_session(const ScenarioConfig& config, std::uint64_t seed, std::string id) {
  return Session(prepare_session_assets(config), seed, std::move(id));
}

}  // namespace obsim
