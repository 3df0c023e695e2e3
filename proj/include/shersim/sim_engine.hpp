#pragma once

// Deterministic fixed-step world loop for a two-robot vessel-following trial.
//
// Stage order inside one tick, per robot (right, then left):
//   sense -> noise -> switching policy -> adaptive law -> master map or
//   admittance -> pedal/clutch gate -> hybrid blend -> body Jacobian ->
//   joint-velocity optimizer -> velocity plant -> joint integration -> FK
// then the eye rotates under both port forces and task progress is checked
// against the dominant (right) tool tip.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "shersim/controllers.hpp"
#include "shersim/eye_scene.hpp"
#include "shersim/joint_pipeline.hpp"
#include "shersim/kinematics.hpp"
#include "shersim/scenario.hpp"

namespace shersim {

/// One hand's input for a tick: master velocity (BMAT) or handle wrench (BMAC).
struct HandInput {
  Vec6 command = Vec6::Zero();
  double pedal = 0.0;
  bool clutch = false;  // true: motion streams to the robot
};

struct InputSample {
  double t = 0.0;
  std::array<HandInput, kRobotCount> hands{};
};

struct RobotRuntime {
  JointState joints;
  VelocityPlant plant;
  std::array<AfcAxisState, 2> afc{};
  RigidTransform g_sb;  // robot-frame FK at the current joints
  ToolState tool;
};

struct TaskProgress {
  std::array<bool, kPinCount> touched{};
  std::vector<int> order;
  bool completed = false;
  double completion_time = std::numeric_limits<double>::quiet_NaN();

  bool all_touched() const {
    for (bool b : touched)
      if (!b) return false;
    return true;
  }
};

struct World {
  Scenario scenario;
  EyePhantom scene;
  std::array<RobotRuntime, kRobotCount> robots;
  TaskProgress progress;
  std::int64_t tick = 0;
  std::mt19937_64 rng;

  /// clock = tick * dt, never accumulated.
  double clock() const { return static_cast<double>(tick) * scenario.dt; }

  static World from_scenario(const Scenario& s) {
    s.validate();
    World w;
    w.scenario = s;
    w.scene = s.scene;
    w.rng.seed(s.seed);
    for (int i = 0; i < kRobotCount; ++i) {
      const RobotConfig& cfg = s.robots[i];
      RobotRuntime& r = w.robots[i];
      r.joints.theta = cfg.initial_theta;
      r.plant = cfg.plant;
      r.plant.velocity.setZero();
      for (int a = 0; a < 2; ++a) r.afc[a] = AfcAxisState::initial(cfg.afc[a]);
      r.g_sb = forward_kinematics(cfg.model, r.joints.theta);
      r.tool = ToolState::from_pose(cfg.base * r.g_sb, cfg.shaft_length);
    }
    return w;
  }
};

struct RobotTick {
  Vec5 theta = Vec5::Zero();
  Vec5 theta_dot = Vec5::Zero();
  Vec6 x_spatial = Vec6::Zero();  // actual end-effector twist in robot {S}
  Vec6 x_des = Vec6::Zero();      // commanded body velocity
  ScleraForceReading reading;     // as seen by the controller (noisy)
  bool delta_x = false;
  bool delta_y = false;
  double f_dx = 0.0;
  double f_dy = 0.0;
  double pedal = 0.0;
  bool clutch = false;
  Vec3 tip = Vec3::Zero();  // world, after the tick
  Vec6 input = Vec6::Zero();
};

struct TickRecord {
  std::int64_t tick = 0;
  double t = 0.0;
  std::array<RobotTick, kRobotCount> robots{};
  std::vector<std::string> events;
};

enum class CompletionReason { completed, trace_end, timeout };

inline std::string_view to_string(CompletionReason r) {
  switch (r) {
    case CompletionReason::completed: return "completed";
    case CompletionReason::trace_end: return "trace_end";
    case CompletionReason::timeout: return "timeout";
  }
  return "unknown";
}

struct TrialMetadata {
  ControlMode mode = ControlMode::bmat;
  std::string posture;
  std::string scenario_hash;
  std::uint64_t seed = 0;
  double dt = 0.001;
  CompletionReason completion = CompletionReason::trace_end;
  std::optional<double> completion_time;
  std::vector<std::string> pin_order;
};

struct TrialLog {
  TrialMetadata meta;
  std::vector<TickRecord> ticks;
};

namespace detail {

inline void require_finite(bool ok, const char* stage, int robot) {
  if (!ok) throw NumericalFault(stage, std::string("robot ") + std::string(kRobotNames[robot]));
}

}  // namespace detail

/// Advances the world by one tick using `input` (already aligned to the
/// current tick) and returns the tick's record.
inline TickRecord step(World& world, const InputSample& input) {
  const Scenario& sc = world.scenario;
  const double dt = sc.dt;
  const double t = world.clock();

  TickRecord rec;
  rec.tick = world.tick;
  rec.t = t;

  for (int i = 0; i < kRobotCount; ++i) {
    const RobotConfig& cfg = sc.robots[i];
    RobotRuntime& rt = world.robots[i];
    const HandInput& hand = input.hands[i];
    RobotTick& out = rec.robots[i];

    detail::require_finite(hand.command.allFinite() && std::isfinite(hand.pedal), "input", i);

    const ScleraForceReading truth = sense(world.scene, rt.tool, cfg.port, i == kRight ? &sc.task : nullptr, t);
    const ScleraForceReading reading = add_sensor_noise(truth, sc.noise, world.rng);
    detail::require_finite(std::isfinite(reading.fsx) && std::isfinite(reading.fsy) &&
                               std::isfinite(reading.tip_force) && std::isfinite(reading.insertion_depth),
                           "sense", i);

    Vec2 x_a = Vec2::Zero();
    const std::array<double, 2> lateral = {reading.fsx, reading.fsy};
    for (int a = 0; a < 2; ++a) {
      rt.afc[a] = switching_policy(cfg.afc[a], rt.afc[a], lateral[a], t);
      if (rt.afc[a].active) {
        const AfcOutput afc = afc_axis_velocity(cfg.afc[a], rt.afc[a], lateral[a], t, dt);
        x_a[a] = afc.velocity;
        rt.afc[a] = afc.state;
      }
    }
    detail::require_finite(x_a.allFinite() && std::isfinite(rt.afc[0].alpha) && std::isfinite(rt.afc[1].alpha),
                           "adaptive-force", i);

    const BodyVelocity kinematic = sc.mode == ControlMode::bmat
                                       ? map_master_to_body(cfg.master_map, BodyVelocity(hand.command))
                                       : admittance_command(hand.command, cfg.admittance);
    const BodyVelocity gated = pedal_scale(kinematic, hand.clutch ? hand.pedal : 0.0);
    const BodyVelocity x_des = hybrid_command(rt.afc[0].active, rt.afc[1].active, cfg.scaling, gated, x_a);
    detail::require_finite(x_des.is_finite(), "hybrid-command", i);

    const Mat65 jac = body_jacobian(cfg.model, rt.joints.theta);
    detail::require_finite(jac.allFinite(), "body-jacobian", i);
    const Vec5 qd_des = solve_joint_velocities(jac, x_des, cfg.model.limits, rt.joints.theta, dt, cfg.optimizer);
    detail::require_finite(qd_des.allFinite(), "joint-optimizer", i);

    auto [plant, qd] = track_joint_velocity(rt.plant, qd_des, dt);
    rt.plant = plant;
    out.x_spatial = spatial_velocity(rt.g_sb, BodyVelocity(Vec6(jac * qd)));
    rt.joints.theta = integrate_joints(rt.joints.theta, qd, cfg.model.limits, dt);
    rt.plant.velocity = qd;
    rt.joints.theta_dot = qd;
    detail::require_finite(rt.joints.theta.allFinite(), "joint-integration", i);

    rt.g_sb = forward_kinematics(cfg.model, rt.joints.theta);
    rt.tool = ToolState::from_pose(cfg.base * rt.g_sb, cfg.shaft_length);
    detail::require_finite(rt.tool.tip.allFinite(), "forward-kinematics", i);

    out.theta = rt.joints.theta;
    out.theta_dot = qd;
    out.x_des = x_des.value;
    out.reading = reading;
    out.delta_x = rt.afc[0].active;
    out.delta_y = rt.afc[1].active;
    out.f_dx = rt.afc[0].active ? rt.afc[0].f_d : 0.0;
    out.f_dy = rt.afc[1].active ? rt.afc[1].f_d : 0.0;
    out.pedal = hand.pedal;
    out.clutch = hand.clutch;
    out.tip = rt.tool.tip;
    out.input = hand.command;
  }

  std::array<Vec3, kPortCount> port_forces{Vec3::Zero(), Vec3::Zero()};
  for (int i = 0; i < kRobotCount; ++i) {
    const RobotConfig& cfg = sc.robots[i];
    port_forces[cfg.port] += port_force_world(world.scene, world.robots[i].tool, cfg.port);
  }
  world.scene = step_eye_dynamics(world.scene, port_forces, dt);
  detail::require_finite(world.scene.orientation.allFinite(), "eye-dynamics", kRight);

  TaskProgress& prog = world.progress;
  if (!prog.completed) {
    const ToolState& tool = world.robots[kRight].tool;
    if (const auto pin = check_pin_touch(world.scene, tool, sc.task); pin && !prog.touched[*pin]) {
      prog.touched[*pin] = true;
      prog.order.push_back(*pin);
      rec.events.push_back("touch:" + sc.task.names[*pin]);
    }
    if (prog.all_touched() && at_start_point(world.scene, tool, sc.task)) {
      prog.completed = true;
      prog.completion_time = t;
      rec.events.emplace_back("return");
    }
  }

  ++world.tick;
  return rec;
}

/// Supplies the input for each tick.
class InputSource {
 public:
  virtual ~InputSource() = default;
  virtual InputSample sample(double t) = 0;
  virtual bool exhausted(double t) const = 0;
};

/// Zero-order hold over a recorded trace. Before the first sample the hands
/// are idle (pedal 0, clutch released).
class TraceSource final : public InputSource {
 public:
  explicit TraceSource(std::vector<InputSample> samples) : samples_(std::move(samples)) {}

  InputSample sample(double t) override {
    while (cursor_ + 1 < samples_.size() && samples_[cursor_ + 1].t <= t + kTimeSlack) ++cursor_;
    if (samples_.empty() || samples_[cursor_].t > t + kTimeSlack) {
      InputSample idle;
      idle.t = t;
      return idle;
    }
    return samples_[cursor_];
  }

  bool exhausted(double t) const override { return samples_.empty() || t > samples_.back().t + kTimeSlack; }

 private:
  static constexpr double kTimeSlack = 1e-9;
  std::vector<InputSample> samples_;
  std::size_t cursor_ = 0;
};

/// Runs until the task completes, the source is exhausted or `max_duration`
/// elapses. Throws NumericalFault on a non-finite value.
inline TrialLog run_trial(World& world, InputSource& source, double max_duration) {
  TrialLog log;
  const Scenario& sc = world.scenario;
  log.meta.mode = sc.mode;
  log.meta.posture = sc.posture;
  log.meta.seed = sc.seed;
  log.meta.dt = sc.dt;

  const auto max_ticks = static_cast<std::int64_t>(std::ceil(max_duration / sc.dt - 1e-9));
  log.meta.completion = CompletionReason::timeout;
  while (true) {
    const double t = world.clock();
    if (source.exhausted(t)) {
      log.meta.completion = CompletionReason::trace_end;
      break;
    }
    if (world.tick >= max_ticks) {
      log.meta.completion = CompletionReason::timeout;
      break;
    }
    log.ticks.push_back(step(world, source.sample(t)));
    if (world.progress.completed) {
      log.meta.completion = CompletionReason::completed;
      log.meta.completion_time = world.progress.completion_time;
      break;
    }
  }
  for (int pin : world.progress.order) log.meta.pin_order.push_back(sc.task.names[pin]);
  return log;
}

}  // namespace shersim
