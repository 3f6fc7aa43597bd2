#pragma once

#include <cstdint>
#include <deque>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "obsim/config.hpp"
#include "obsim/distinguisher.hpp"
#include "obsim/vrpipe.hpp"

namespace obsim {

enum class Phase { running, guessed, revealed };

std::string_view to_string(Phase phase);

/// Per-configuration data shared by every session: the parsed scenario and
/// the reduced model offered as the simulation candidate. The model is built
/// for every session regardless of the draw so start-up cost reveals nothing.
struct SessionAssets {
  ScenarioConfig config;
  std::shared_ptr<const ReducedModel> model;
  /// Integrator steps per server tick.
  int steps_per_tick = 1;
};

std::shared_ptr<const SessionAssets> prepare_session_assets(const ScenarioConfig& config);

struct AppliedForce {
  int id = 0;
  std::string body;
  Vector3d dp = Vector3d::Zero();
  double applies_at = 0.0;
  std::size_t sample = 0;
};

/// One blind trial. Inbound lines are handled in arrival order; replies and
/// streamed states/frames accumulate in a bounded outbox drained by the
/// transport. Frames and states are dropped oldest first when the outbox is
/// full; acks, reveals, statuses and errors are never dropped.
class Session {
 public:
  Session(std::shared_ptr<const SessionAssets> assets, std::uint64_t seed, std::string id);

  const std::string& id() const { return id_; }
  Phase phase() const { return phase_; }
  double clock() const { return samples_.back().t; }
  bool halted() const { return halted_; }
  const std::vector<AppliedForce>& history() const { return history_; }

  /// Validates and applies one inbound JSON message.
  void handle(std::string_view line);
  /// One server tick: advances the simulation and streams a state (and a
  /// frame every frame_every ticks). After the reveal only a status goes out.
  void advance();

  bool has_outbound() const { return !outbox_.empty(); }
  std::optional<std::string> pop_outbound();
  std::vector<std::string> drain();
  std::size_t dropped() const { return dropped_; }

  /// The hidden draw. Transports must never call this; tests and logs may.
  CandidateKind hidden_for_audit() const { return hidden_; }

 private:
  void push(std::string message, bool droppable);
  void emit_state();
  void emit_frame();
  void error(const std::string& msg);
  void status();
  void on_force(const std::string& body, const Vector3d& dp);
  void on_guess(const std::string& value);
  void apply_pending();
  void step_once();
  DistinguisherReport build_report() const;

  std::shared_ptr<const SessionAssets> assets_;
  std::string id_;
  CandidateKind hidden_ = CandidateKind::copy;
  Phase phase_ = Phase::running;
  bool halted_ = false;
  std::int64_t step_index_ = 0;
  long ticks_ = 0;

  State state_;
  bool engaged_ = false;
  DriveState drive_;
  std::vector<Sample> samples_;

  std::vector<AppliedForce> history_;
  std::vector<std::size_t> pending_;

  RegisterMatrix registers_;
  std::deque<std::pair<std::string, bool>> outbox_;
  std::size_t dropped_ = 0;
};

/// Starts a session from a parsed configuration.
Session start_session(const ScenarioConfig& config, std::uint64_t seed, std::string id = "s1");

}  // namespace obsim
