#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "obsim/config.hpp"

namespace obsim {

struct ServerOptions {
  std::string address = "127.0.0.1";
  /// 0 picks an ephemeral port; see Server::port().
  unsigned short port = 8765;
  /// Session k (0-based, in accept order) draws its candidate from seed + k.
  std::uint64_t seed = 0;
  int tick_ms = 50;
};

/// Blind-trial server. Each connection owns one session. A connection that
/// opens with an HTTP request is upgraded to WebSocket (one JSON message per
/// text frame); anything else is treated as newline-delimited JSON over TCP.
class Server {
 public:
  Server(const ScenarioConfig& config, ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and serves on a background thread.
  void start();
  /// Binds and serves on the calling thread until stop() or SIGINT/SIGTERM.
  void run();
  void stop();
  /// Bound port; valid after start() or once run() is serving.
  unsigned short port() const;
  std::size_t sessions_started() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace obsim
