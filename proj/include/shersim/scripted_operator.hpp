#pragma once

// Scripted stand-in for a human operator. Each hand
// steers its tool tip through a list of eye-frame targets by pivoting about
// its own port, reading only its own tool and the eye. The master map is
// assumed to be identity; a mis-specified map in the scenario therefore
// reaches the robot as an unmodelled rotation, as it would for a person.
//
// In cooperative mode the velocity command is converted to the handle wrench
// that the admittance law maps back onto it.
//
// Every command update is recorded; replaying trace() through TraceSource
// reproduces the run tick for tick.

#include <array>
#include <vector>

#include "shersim/sim_engine.hpp"

namespace shersim {

struct OperatorOptions {
  double tip_gain = 4.0;          // 1/s, tip position error to tip velocity
  double max_tip_speed = 0.002;   // m/s
  double pivot_gain = 10.0;       // 1/s, shaft re-centring on the port
  double tolerance = 0.00025;     // m, target reached
  double inset = 0.00025;         // m, targets on the retina are pulled this far inwards
  double update_period = 0.0;     // s between command updates (held in between); 0 updates every tick
};

class ScriptedOperator final : public InputSource {
 public:
  /// `targets[h]` are eye-frame offsets from the eye centre for hand h.
  ScriptedOperator(const World& world, std::array<std::vector<Vec3>, kRobotCount> targets, OperatorOptions opts = {})
      : world_(world), targets_(std::move(targets)), opts_(opts) {}

  /// The vessel tour for the dominant hand: the pins in `order`, then back to
  /// the vessel intersection.
  static std::vector<Vec3> vessel_tour(const VesselTask& task, const std::vector<int>& order) {
    std::vector<Vec3> out;
    for (int pin : order) out.push_back(task.pins.at(pin));
    out.push_back(task.start);
    return out;
  }

  InputSample sample(double t) override {
    if (!recorded_.empty() && t < recorded_.back().t + opts_.update_period - 1e-9) return recorded_.back();
    InputSample s;
    s.t = t;
    for (int h = 0; h < kRobotCount; ++h) s.hands[h] = steer(h);
    if (done() && !done_at_) done_at_ = t;
    recorded_.push_back(s);
    return s;
  }

  /// Ends right after the idle sample emitted once every target is reached.
  bool exhausted(double t) const override { return done_at_ && t > *done_at_ + 1e-9; }

  bool done() const {
    for (int h = 0; h < kRobotCount; ++h)
      if (next_[h] < targets_[h].size()) return false;
    return true;
  }

  const std::vector<InputSample>& recorded() const { return recorded_; }

  /// recorded() plus, if the run ended inside a hold, a copy of the held
  /// sample stamped `t_last` so a replay covers the same ticks.
  std::vector<InputSample> trace(double t_last) const {
    std::vector<InputSample> out = recorded_;
    if (!out.empty() && t_last > out.back().t + 1e-9) {
      InputSample closing = out.back();
      closing.t = t_last;
      out.push_back(closing);
    }
    return out;
  }

 private:
  Vec3 target_world(int h) const {
    const EyePhantom& eye = world_.scene;
    Vec3 off = targets_[h][next_[h]];
    const double r = off.norm();
    // Points on (or beyond) the retina are approached from inside.
    if (r > eye.radius - opts_.inset) off *= (eye.radius - opts_.inset) / r;
    return eye.to_world(off);
  }

  HandInput steer(int h) {
    HandInput in;
    const std::size_t n = targets_[h].size();
    if (next_[h] >= n) return in;  // finished: pedal released

    const RobotConfig& cfg = world_.scenario.robots[h];
    const ToolState& tool = world_.robots[h].tool;
    const Mat3& rb = tool.pose.rotation;

    Vec3 goal = target_world(h);
    while ((goal - tool.tip).norm() <= opts_.tolerance) {
      if (++next_[h] >= n) return in;
      goal = target_world(h);
    }

    const Vec3 port = world_.scene.port_world(cfg.port);
    const double s_port = (port - tool.pose.translation).dot(tool.shaft_dir);
    const double lever = std::max(cfg.shaft_length - s_port, 0.001);

    Vec3 u = rb.transpose() * (opts_.tip_gain * (goal - tool.tip));
    if (u.norm() > opts_.max_tip_speed) u *= opts_.max_tip_speed / u.norm();

    // Rotate about the port so the tip moves laterally by u.xy, insert by u.z.
    Vec6 cmd = Vec6::Zero();
    const double wy = u.x() / lever, wx = -u.y() / lever;
    cmd[0] = -wy * s_port;
    cmd[1] = wx * s_port;
    cmd[2] = u.z();
    cmd[3] = wx;
    cmd[4] = wy;

    // Translate the shaft back onto the port to relieve the sclera.
    const Vec3 offset = rb.transpose() * (detail::closest_on_shaft(tool, port) - port);
    cmd[0] -= opts_.pivot_gain * offset.x();
    cmd[1] -= opts_.pivot_gain * offset.y();

    if (world_.scenario.mode == ControlMode::bmac) {
      for (int k = 0; k < 6; ++k) cmd[k] = cfg.admittance[k] > 0.0 ? cmd[k] / cfg.admittance[k] : 0.0;
    }
    in.command = cmd;
    in.pedal = 1.0;
    in.clutch = true;
    return in;
  }

  const World& world_;
  std::array<std::vector<Vec3>, kRobotCount> targets_;
  OperatorOptions opts_;
  std::array<std::size_t, kRobotCount> next_{};
  std::optional<double> done_at_;
  std::vector<InputSample> recorded_;
};

}  // namespace shersim
