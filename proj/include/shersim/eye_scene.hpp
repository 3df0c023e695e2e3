#pragma once

// Compliant eye phantom and virtual force sensing. Lengths are SI inside the
// scene; readings are reported in mN and mm.

#include <array>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "shersim/kinematics.hpp"

namespace shersim {

inline constexpr int kPortCount = 2;
inline constexpr int kPinCount = 4;

struct EyePhantom {
  Vec3 center = Vec3::Zero();
  double radius = 0.012;
  Mat3 orientation = Mat3::Identity();  // eye frame in world
  std::array<Vec3, kPortCount> ports;   // unit directions, eye frame
  double rot_stiffness = 0.2;           // N m / rad
  double rot_damping = 0.02;            // N m s / rad
  double sclera_stiffness = 100.0;      // N/m
  double retina_stiffness = 500.0;      // N/m

  /// Ports 35 deg either side of the eye's +z pole in the x-z plane; index 0 is
  /// the right (dominant) hand's sclerotomy.
  static EyePhantom standard() {
    EyePhantom e;
    const double a = deg_to_rad(35.0);
    e.ports = {Vec3(std::sin(a), 0.0, std::cos(a)), Vec3(-std::sin(a), 0.0, std::cos(a))};
    return e;
  }

  Vec3 to_world(const Vec3& offset_eye) const { return center + orientation * offset_eye; }
  Vec3 port_world(int port) const { return to_world(radius * ports.at(port)); }

  void validate() const {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw ContractViolation("eye radius must be > 0");
    if (!(rot_stiffness >= 0.0) || !(sclera_stiffness >= 0.0) || !(retina_stiffness >= 0.0))
      throw ContractViolation("eye stiffnesses must be >= 0");
    if (!(rot_damping > 0.0)) throw ContractViolation("eye rotational damping must be > 0");
    for (const auto& p : ports)
      if (std::abs(p.norm() - 1.0) > 1e-9) throw ContractViolation("port directions must be unit-norm");
  }
};

struct ToolState {
  RigidTransform pose;  // world pose of the body frame {B}
  Vec3 shaft_dir = Vec3::UnitZ();
  Vec3 tip = Vec3::Zero();

  static ToolState from_pose(const RigidTransform& pose, double shaft_length) {
    ToolState t;
    t.pose = pose;
    t.shaft_dir = pose.rotation.col(2);
    t.tip = pose.translation + shaft_length * t.shaft_dir;
    return t;
  }
};

struct ScleraForceReading {
  double fsx = 0.0;              // mN, body x
  double fsy = 0.0;              // mN, body y
  double norm = 0.0;             // mN
  double tip_force = 0.0;        // mN
  double insertion_depth = 0.0;  // mm
  double timestamp = 0.0;        // s
  bool engaged = false;
};

/// Vessel-following layout: four pins and the vessel intersection, as offsets
/// from the eye centre in the eye frame.
struct VesselTask {
  std::array<Vec3, kPinCount> pins;
  std::array<std::string, kPinCount> names = {"red", "green", "blue", "yellow"};
  Vec3 start = Vec3::Zero();
  double capture_radius = 0.0005;

  /// Pins 15 deg (about 3 mm) from the posterior pole at 90 deg azimuth spacing; the start
  /// point is the pole itself.
  static VesselTask standard(double radius) {
    VesselTask t;
    const double polar = deg_to_rad(15.0);
    for (int i = 0; i < kPinCount; ++i) {
      const double az = deg_to_rad(90.0 * i);
      t.pins[i] = radius * Vec3(std::sin(polar) * std::cos(az), std::sin(polar) * std::sin(az), -std::cos(polar));
    }
    t.start = Vec3(0.0, 0.0, -radius);
    return t;
  }
};

namespace detail {

/// Point on the shaft line closest to `point`.
inline Vec3 closest_on_shaft(const ToolState& tool, const Vec3& point) {
  return tool.tip + (point - tool.tip).dot(tool.shaft_dir) * tool.shaft_dir;
}

inline double signed_depth(const EyePhantom& scene, const ToolState& tool, int port) {
  return (tool.tip - scene.port_world(port)).dot(tool.shaft_dir);
}

}  // namespace detail

/// Force (N, world frame) the tool exerts on the sclera at its port: a lateral
/// spring on the shaft's offset from the sclerotomy. Zero when retracted.
inline Vec3 port_force_world(const EyePhantom& scene, const ToolState& tool, int port) {
  if (detail::signed_depth(scene, tool, port) < 0.0) return Vec3::Zero();
  const Vec3 p = scene.port_world(port);
  return scene.sclera_stiffness * (detail::closest_on_shaft(tool, p) - p);
}

/// Lateral sclera force resolved on the tool body x/y axes. A shaft offset of
/// +1 mm along body x at k_s = 100 N/m reads fsx = +100 mN.
inline ScleraForceReading sclera_force(const EyePhantom& scene, const ToolState& tool, int port) {
  ScleraForceReading r;
  if (detail::signed_depth(scene, tool, port) < 0.0) return r;
  r.engaged = true;
  const Vec3 f_body = tool.pose.rotation.transpose() * port_force_world(scene, tool, port);
  r.fsx = 1000.0 * f_body.x();
  r.fsy = 1000.0 * f_body.y();
  r.norm = std::hypot(r.fsx, r.fsy);
  return r;
}

/// Signed distance (mm) from the port to the tip along the shaft, or nullopt
/// when the tool is retracted out of the port.
inline std::optional<double> insertion_depth(const EyePhantom& scene, const ToolState& tool, int port) {
  const double d = detail::signed_depth(scene, tool, port);
  if (d < 0.0) return std::nullopt;
  return 1000.0 * d;
}

/// Tip contact force (mN): retina sphere penetration or pin capture-sphere
/// penetration, whichever is deeper.
inline double tip_contact_force(const EyePhantom& scene, const ToolState& tool, const VesselTask* task = nullptr) {
  double penetration = std::max(0.0, (tool.tip - scene.center).norm() - scene.radius);
  if (task != nullptr) {
    for (const auto& pin : task->pins) {
      const double d = (tool.tip - scene.to_world(pin)).norm();
      penetration = std::max(penetration, task->capture_radius - d);
    }
  }
  return 1000.0 * scene.retina_stiffness * penetration;
}

/// Full virtual-sensor reading for one tool.
inline ScleraForceReading sense(const EyePhantom& scene, const ToolState& tool, int port, const VesselTask* task,
                                double t) {
  ScleraForceReading r = sclera_force(scene, tool, port);
  r.timestamp = t;
  if (r.engaged) {
    r.insertion_depth = *insertion_depth(scene, tool, port);
    r.tip_force = tip_contact_force(scene, tool, task);
  }
  return r;
}

/// First-order viscoelastic rotation of the globe about its fixed centre.
/// `port_forces` are the forces the tools exert on the sclera (N, world).
inline EyePhantom step_eye_dynamics(const EyePhantom& scene, const std::array<Vec3, kPortCount>& port_forces,
                                    double dt) {
  if (!(dt > 0.0)) throw ContractViolation("step_eye_dynamics requires dt > 0");
  Vec3 torque = Vec3::Zero();
  for (int i = 0; i < kPortCount; ++i) torque += (scene.port_world(i) - scene.center).cross(port_forces[i]);
  const Eigen::AngleAxisd dev(scene.orientation);
  const Vec3 deviation = dev.angle() * dev.axis();
  const Vec3 omega = (torque - scene.rot_stiffness * deviation) / scene.rot_damping;
  EyePhantom next = scene;
  const double angle = omega.norm() * dt;
  if (angle > 0.0) {
    next.orientation = Eigen::AngleAxisd(angle, omega.normalized()).toRotationMatrix() * scene.orientation;
  }
  return next;
}

struct SensorNoise {
  double force_sigma = 2.0;   // mN
  double depth_sigma = 0.05;  // mm
};

/// Zero-mean Gaussian noise on every channel of an engaged reading; the norm is
/// recomputed from the noisy components.
template <class Engine>
ScleraForceReading add_sensor_noise(const ScleraForceReading& reading, const SensorNoise& noise, Engine& rng) {
  if (!reading.engaged) return reading;
  ScleraForceReading out = reading;
  auto draw = [&rng](double sigma) {
    if (sigma <= 0.0) return 0.0;
    std::normal_distribution<double> dist(0.0, sigma);
    return dist(rng);
  };
  out.fsx += draw(noise.force_sigma);
  out.fsy += draw(noise.force_sigma);
  out.tip_force += draw(noise.force_sigma);
  out.insertion_depth += draw(noise.depth_sigma);
  out.norm = std::hypot(out.fsx, out.fsy);
  return out;
}

/// Lowest-id pin whose capture sphere contains the tip.
inline std::optional<int> check_pin_touch(const EyePhantom& scene, const ToolState& tool, const VesselTask& task) {
  for (int i = 0; i < kPinCount; ++i) {
    if ((tool.tip - scene.to_world(task.pins[i])).norm() <= task.capture_radius) return i;
  }
  return std::nullopt;
}

inline bool at_start_point(const EyePhantom& scene, const ToolState& tool, const VesselTask& task) {
  return (tool.tip - scene.to_world(task.start)).norm() <= task.capture_radius;
}

}  // namespace shersim
