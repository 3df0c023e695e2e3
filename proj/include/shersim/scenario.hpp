#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "shersim/controllers.hpp"
#include "shersim/eye_scene.hpp"
#include "shersim/joint_pipeline.hpp"
#include "shersim/kinematics.hpp"

namespace shersim {

/// BMAT: master-device velocities drive the robots. BMAC: handle wrenches
/// through admittance (cooperative, hand-over-hand).
enum class ControlMode { bmat, bmac };

inline std::string_view to_string(ControlMode m) { return m == ControlMode::bmat ? "BMAT" : "BMAC"; }

inline constexpr int kRobotCount = 2;
inline constexpr int kRight = 0;  // dominant hand
inline constexpr int kLeft = 1;   // non-dominant hand
inline constexpr std::array<std::string_view, kRobotCount> kRobotNames = {"right", "left"};

struct RobotConfig {
  RobotModel model = RobotModel::sher_default();
  RigidTransform base;          // robot {S} in world
  double shaft_length = 0.03;   // handle origin to tip along body z, m
  int port = 0;
  Vec5 initial_theta = Vec5::Zero();
  std::array<AfcGains, 2> afc{};  // x, y
  MotionScaling scaling;
  MasterBodyMap master_map;
  Vec6 admittance = (Vec6() << 0.01, 0.01, 0.01, 0.1, 0.1, 0.1).finished();  // (m/s)/N, (rad/s)/(N m)
  OptimizerOptions optimizer;
  VelocityPlant plant = VelocityPlant::for_limits(JointLimits::sher_default());

  void validate() const {
    model.validate();
    if (!base.is_valid()) throw ContractViolation("robot base must be a proper rigid transform");
    if (!(shaft_length > 0.0)) throw ContractViolation("shaft length must be > 0");
    if (port < 0 || port >= kPortCount) throw ContractViolation("port index out of range");
    if (!model.limits.contains(initial_theta)) throw ContractViolation("initial joint position outside limits");
    for (const auto& g : afc) g.validate();
    scaling.validate();
    master_map.validate();
    if (!admittance.allFinite() || (admittance.array() < 0.0).any())
      throw ContractViolation("admittance gains must be >= 0");
    if (!(optimizer.damping >= 0.0) || (optimizer.weights.array() < 0.0).any())
      throw ContractViolation("optimizer damping and weights must be >= 0");
    plant.validate();
  }
};

/// Base transform placing the home tool pose radially through `port`, with the
/// tip `depth` metres past the sclerotomy. `roll` spins the body x/y axes
/// about the shaft.
inline RigidTransform mount_at_port(const RobotModel& model, const EyePhantom& scene, int port, double shaft_length,
                                    double depth, double roll = 0.0) {
  const Vec3 port_w = scene.port_world(port);
  const Vec3 z = (scene.center - port_w).normalized();
  const Vec3 ref = std::abs(z.dot(Vec3::UnitY())) < 0.9 ? Vec3::UnitY() : Vec3::UnitX();
  const Vec3 x = ref.cross(z).normalized();
  Mat3 r;
  r.col(0) = x;
  r.col(1) = z.cross(x);
  r.col(2) = z;
  r = r * Eigen::AngleAxisd(roll, Vec3::UnitZ()).toRotationMatrix();
  RigidTransform tool_home{r, port_w - (shaft_length - depth) * z};
  return tool_home * model.home.inverse();
}

struct Scenario {
  ControlMode mode = ControlMode::bmat;
  std::string posture = "sitting";
  double dt = 0.001;
  std::uint64_t seed = 0;
  double max_duration = 120.0;
  EyePhantom scene = EyePhantom::standard();
  SensorNoise noise;
  VesselTask task = VesselTask::standard(0.012);
  std::array<RobotConfig, kRobotCount> robots;

  /// Default two-robot setup; both tools start 6 mm past their ports.
  static Scenario standard() {
    Scenario s;
    for (int i = 0; i < kRobotCount; ++i) {
      RobotConfig& r = s.robots[i];
      r.port = i;
      r.base = mount_at_port(r.model, s.scene, i, r.shaft_length, 0.006);
    }
    return s;
  }

  void validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt)) throw ContractViolation("dt must be > 0");
    if (!(max_duration >= 0.0)) throw ContractViolation("max_duration must be >= 0");
    scene.validate();
    if (!(noise.force_sigma >= 0.0) || !(noise.depth_sigma >= 0.0))
      throw ContractViolation("noise sigmas must be >= 0");
    if (!(task.capture_radius > 0.0)) throw ContractViolation("capture radius must be > 0");
    for (const auto& r : robots) r.validate();
  }
};

}  // namespace shersim
