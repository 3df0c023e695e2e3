#pragma once

// Live session core, independent of any transport. The tick loop owns the
// World; connection code talks to it only through two bounded queues:
//   inputs    (connection -> loop): input messages and connect/disconnect
//   snapshots (loop -> connection): serialized state messages
// Inputs are latched at the tick boundary, last writer wins.

#include <functional>
#include <optional>
#include <string>
#include <variant>

#include "shersim/sim_engine.hpp"
#include "shersim/teleop/bounded_queue.hpp"
#include "shersim/teleop/protocol.hpp"

namespace shersim::teleop {

struct SessionOptions {
  int decimation = 10;              // publish every n-th tick
  double stale_after = 0.2;         // s of sim time without input before the pedal is forced to 0
  std::size_t input_capacity = 1024;
  std::size_t snapshot_capacity = 64;
};

struct ClientConnected {};
struct ClientDisconnected {};
using SessionEvent = std::variant<InputMessage, ClientConnected, ClientDisconnected>;

class LiveSession {
 public:
  LiveSession(const Scenario& scenario, SessionOptions options)
      : options_(options),
        world_(World::from_scenario(scenario)),
        inputs_(options.input_capacity),
        snapshots_(options.snapshot_capacity) {
    if (options_.decimation < 1) throw ContractViolation("decimation must be >= 1");
    if (!(options_.stale_after > 0.0)) throw ContractViolation("stale_after must be > 0");
    log_.meta.mode = scenario.mode;
    log_.meta.posture = scenario.posture;
    log_.meta.seed = scenario.seed;
    log_.meta.dt = scenario.dt;
  }

  // ---- connection side (any thread) ----

  void submit(const InputMessage& m) { inputs_.push(m); }
  void notify_connected() { inputs_.push(ClientConnected{}); }
  void notify_disconnected() { inputs_.push(ClientDisconnected{}); }
  std::optional<std::string> next_snapshot() { return snapshots_.try_pop(); }
  std::size_t pending_inputs() const { return inputs_.size(); }
  std::size_t dropped_snapshots() const { return snapshots_.dropped(); }

  /// Called after a snapshot is queued; must not block (e.g. post to an executor).
  void set_snapshot_callback(std::function<void()> cb) { on_snapshot_ = std::move(cb); }

  // ---- loop side (single thread) ----

  /// Latches pending inputs, applies the failsafe and advances one tick.
  TickRecord tick() {
    const double t = world_.clock();
    for (auto& ev : inputs_.drain()) {
      if (auto* m = std::get_if<InputMessage>(&ev)) {
        latch_[m->robot] = m->hand;
        last_input_[m->robot] = t;
        connected_ = true;
      } else if (std::holds_alternative<ClientConnected>(ev)) {
        connected_ = true;
      } else {
        // Freeze both robots until fresh input arrives.
        connected_ = false;
        latch_ = {};
        last_input_ = {};
      }
    }

    InputSample sample;
    sample.t = t;
    for (int i = 0; i < kRobotCount; ++i) {
      sample.hands[i] = latch_[i];
      const bool fresh = last_input_[i] && t - *last_input_[i] <= options_.stale_after + 1e-9;
      if (!connected_ || !fresh) sample.hands[i].pedal = 0.0;
    }

    TickRecord rec = step(world_, sample);
    if (rec.tick % options_.decimation == 0) {
      snapshots_.push(state_message(rec).dump());
      if (on_snapshot_) on_snapshot_();
    }
    log_.ticks.push_back(rec);
    return rec;
  }

  const World& world() const { return world_; }
  const TrialLog& log() const { return log_; }
  bool connected() const { return connected_; }

  /// Final log with completion metadata; the session should not tick afterwards.
  TrialLog take_log() {
    TrialLog out = std::move(log_);
    log_ = {};
    out.meta.completion = world_.progress.completed ? CompletionReason::completed : CompletionReason::trace_end;
    if (world_.progress.completed) out.meta.completion_time = world_.progress.completion_time;
    out.meta.pin_order.clear();
    for (int pin : world_.progress.order) out.meta.pin_order.push_back(world_.scenario.task.names[pin]);
    return out;
  }

  const SessionOptions& options() const { return options_; }

 private:
  SessionOptions options_;
  World world_;
  TrialLog log_;
  BoundedQueue<SessionEvent> inputs_;
  BoundedQueue<std::string> snapshots_;
  std::function<void()> on_snapshot_;

  std::array<HandInput, kRobotCount> latch_{};
  std::array<std::optional<double>, kRobotCount> last_input_{};
  bool connected_ = false;
};

}  // namespace shersim::teleop
