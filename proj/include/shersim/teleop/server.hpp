#pragma once

#include <memory>
#include <string>

#include "shersim/teleop/session.hpp"

namespace shersim::teleop {

class PortBusyError : public Error {
 public:
  using Error::Error;
};

struct ServerOptions {
  std::string address = "127.0.0.1";
  unsigned short port = 8765;  // 0 picks a free port
  double tick_hz = 0.0;        // 0: real time, i.e. 1 / dt
  bool manual_ticks = false;   // caller drives session().tick() itself
  double duration = 0.0;       // s of sim time; 0 runs until stop()
};

/// WebSocket endpoint for one operator. A second concurrent client receives
/// an `session-busy` error and is closed; after a disconnect the session
/// keeps running (robots frozen) and accepts a new client.
class TeleopServer {
 public:
  /// Binds immediately; throws PortBusyError if the port is taken.
  TeleopServer(const Scenario& scenario, ServerOptions options, SessionOptions session = {});
  ~TeleopServer();
  TeleopServer(const TeleopServer&) = delete;
  TeleopServer& operator=(const TeleopServer&) = delete;

  unsigned short port() const;

  /// Starts connection handling and, unless manual_ticks, the tick loop.
  void start();
  /// False once the tick loop has ended or stop() was called.
  bool running() const;
  /// Blocks until the tick loop ends (duration reached or stop()).
  void wait();
  /// Says bye to the client and stops all threads. Idempotent.
  void stop();

  LiveSession& session();
  TrialLog take_log();

  struct Impl;  // defined in server.cpp

 private:
  std::unique_ptr<Impl> impl_;
};

}  // namespace shersim::teleop
