#pragma once

// Screw-theoretic kinematics of a 3P-2R Steady-Hand Eye Robot: joint twists,
// product-of-exponentials forward kinematics, the SE(3) adjoint and the body
// Jacobian. Twists and body velocities are stacked linear-first: (v, w).

#include <array>
#include <cmath>
#include <numbers>
#include <variant>

#include <Eigen/Dense>

#include "shersim/errors.hpp"

namespace shersim {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec5 = Eigen::Matrix<double, 5, 1>;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;
using Mat65 = Eigen::Matrix<double, 6, 5>;

inline constexpr int kJointCount = 5;
inline constexpr double kUnitTolerance = 1e-12;

inline Mat3 skew(const Vec3& a) {
  Mat3 m;
  m << 0.0, -a.z(), a.y(),
       a.z(), 0.0, -a.x(),
       -a.y(), a.x(), 0.0;
  return m;
}

inline double deg_to_rad(double deg) { return deg * std::numbers::pi / 180.0; }

/// Six-vector (linear, angular). Base for Twist and BodyVelocity.
struct SpatialVector {
  Vec6 value = Vec6::Zero();

  SpatialVector() = default;
  explicit SpatialVector(const Vec6& v) : value(v) {}
  SpatialVector(const Vec3& lin, const Vec3& ang) { value << lin, ang; }

  auto linear() { return value.head<3>(); }
  auto angular() { return value.tail<3>(); }
  Vec3 linear() const { return value.head<3>(); }
  Vec3 angular() const { return value.tail<3>(); }

  bool is_finite() const { return value.allFinite(); }
};

/// Joint screw axis, the 6-vector form of xi.
struct Twist : SpatialVector {
  using SpatialVector::SpatialVector;

  /// 4x4 lift into se(3).
  Mat4 hat() const {
    Mat4 m = Mat4::Zero();
    m.topLeftCorner<3, 3>() = skew(angular());
    m.topRightCorner<3, 1>() = linear();
    return m;
  }
};

/// Body-frame end-effector velocity (m/s, rad/s).
struct BodyVelocity : SpatialVector {
  using SpatialVector::SpatialVector;

  friend BodyVelocity operator*(double s, const BodyVelocity& b) { return BodyVelocity(Vec6(s * b.value)); }
  friend BodyVelocity operator+(const BodyVelocity& a, const BodyVelocity& b) {
    return BodyVelocity(Vec6(a.value + b.value));
  }
};

struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_translation(const Vec3& p) { return {Mat3::Identity(), p}; }
  static RigidTransform from_rotation(const Mat3& r) { return {r, Vec3::Zero()}; }
  static RigidTransform from_matrix(const Mat4& m) {
    return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
  }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
  }

  RigidTransform inverse() const {
    const Mat3 rt = rotation.transpose();
    return {rt, -rt * translation};
  }

  Vec3 apply(const Vec3& point) const { return rotation * point + translation; }

  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
  }

  bool is_valid(double tol = 1e-10) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    return (rotation.transpose() * rotation - Mat3::Identity()).cwiseAbs().maxCoeff() <= tol &&
           std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

struct PrismaticAxis {
  Vec3 v;  // unit direction in {S} at home
};

struct RevoluteAxis {
  Vec3 omega;  // unit rotation axis in {S} at home
  Vec3 q;      // any point on the axis (m)
};

using JointAxis = std::variant<PrismaticAxis, RevoluteAxis>;

inline bool is_prismatic(const JointAxis& a) { return std::holds_alternative<PrismaticAxis>(a); }

inline void validate_axis(const JointAxis& axis) {
  const Vec3& dir = std::visit(
      [](const auto& a) -> const Vec3& {
        if constexpr (std::is_same_v<std::decay_t<decltype(a)>, PrismaticAxis>) {
          return a.v;
        } else {
          return a.omega;
        }
      },
      axis);
  if (!dir.allFinite() || std::abs(dir.norm() - 1.0) > kUnitTolerance) {
    throw InvalidAxisError("joint axis direction must have unit norm (got |d| = " +
                           std::to_string(dir.norm()) + ")");
  }
  if (const auto* r = std::get_if<RevoluteAxis>(&axis); r && !r->q.allFinite()) {
    throw InvalidAxisError("revolute axis point must be finite");
  }
}

inline Twist make_twist(const JointAxis& axis) {
  validate_axis(axis);
  if (const auto* p = std::get_if<PrismaticAxis>(&axis)) {
    return Twist(p->v, Vec3::Zero());
  }
  const auto& r = std::get<RevoluteAxis>(axis);
  return Twist(Vec3(-r.omega.cross(r.q)), r.omega);
}

/// Closed-form exponential exp(xi^ theta). Handles non-unit angular parts by
/// rescaling; small rotation angles fall back to a second-order expansion.
inline RigidTransform exp_twist(const Twist& xi, double theta) {
  const Vec3 v = xi.linear();
  const Vec3 w = xi.angular();
  const double wn = w.norm();
  if (wn == 0.0) {
    return RigidTransform::from_translation(v * theta);
  }
  const double angle = wn * theta;
  const Vec3 axis = w / wn;
  const Vec3 vs = v / wn;
  if (std::abs(angle) < 1e-9) {
    const Mat3 k = skew(axis);
    RigidTransform g;
    g.rotation = Mat3::Identity() + angle * k;
    g.translation = angle * vs + 0.5 * angle * angle * axis.cross(vs);
    return g;
  }
  const Mat3 k = skew(axis);
  const Mat3 r = Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * k * k;
  RigidTransform g;
  g.rotation = r;
  g.translation = (Mat3::Identity() - r) * axis.cross(vs) + axis * axis.dot(vs) * angle;
  return g;
}

struct JointLimits {
  Vec5 pos_min;
  Vec5 pos_max;
  Vec5 vel_max;

  /// +-50 mm translation, +-30 deg rotation, 50 mm/s and 0.5 rad/s.
  static JointLimits sher_default() {
    const double rot = deg_to_rad(30.0);
    JointLimits l;
    l.pos_min << -0.05, -0.05, -0.05, -rot, -rot;
    l.pos_max << 0.05, 0.05, 0.05, rot, rot;
    l.vel_max << 0.05, 0.05, 0.05, 0.5, 0.5;
    return l;
  }

  bool contains(const Vec5& theta, double tol = 0.0) const {
    return ((theta - pos_min).array() >= -tol).all() && ((pos_max - theta).array() >= -tol).all();
  }

  void validate() const {
    if (!pos_min.allFinite() || !pos_max.allFinite() || !vel_max.allFinite())
      throw ContractViolation("joint limits must be finite");
    if (!(pos_min.array() < pos_max.array()).all())
      throw ContractViolation("joint limits require pos_min < pos_max");
    if (!(vel_max.array() > 0.0).all()) throw ContractViolation("joint limits require vel_max > 0");
  }
};

struct RobotModel {
  std::array<JointAxis, kJointCount> axes;
  RigidTransform home;  // g_SB(0)
  JointLimits limits = JointLimits::sher_default();

  /// X, Y, Z slides, yaw about z through (0,0,0.1), pitch about y through
  /// (0,0,0.15). The home frame is pitched 90 deg so the tool shaft (body z)
  /// lies along +x of {S}; a shaft parallel to the yaw axis would make
  /// pivoting about the body x axis singular at home.
  static RobotModel sher_default() {
    RobotModel m;
    m.axes = {PrismaticAxis{Vec3::UnitX()}, PrismaticAxis{Vec3::UnitY()}, PrismaticAxis{Vec3::UnitZ()},
              RevoluteAxis{Vec3::UnitZ(), Vec3(0.0, 0.0, 0.1)},
              RevoluteAxis{Vec3::UnitY(), Vec3(0.0, 0.0, 0.15)}};
    m.home.rotation = Eigen::AngleAxisd(std::numbers::pi / 2.0, Vec3::UnitY()).toRotationMatrix();
    m.home.translation = Vec3(0.0, 0.0, 0.2);
    return m;
  }

  void validate() const {
    for (int i = 0; i < kJointCount; ++i) {
      validate_axis(axes[i]);
      const bool want_prismatic = i < 3;
      if (is_prismatic(axes[i]) != want_prismatic) {
        throw InvalidAxisError("axis " + std::to_string(i + 1) + " must be " +
                               (want_prismatic ? "prismatic" : "revolute"));
      }
    }
    if (!home.is_valid()) throw InvalidAxisError("home transform is not a proper rigid transform");
    limits.validate();
  }

  std::array<Twist, kJointCount> twists() const {
    std::array<Twist, kJointCount> out;
    for (int i = 0; i < kJointCount; ++i) out[i] = make_twist(axes[i]);
    return out;
  }
};

struct JointState {
  Vec5 theta = Vec5::Zero();
  Vec5 theta_dot = Vec5::Zero();
};

inline RigidTransform forward_kinematics(const RobotModel& model, const Vec5& theta) {
  RigidTransform g;
  for (int i = 0; i < kJointCount; ++i) g = g * exp_twist(make_twist(model.axes[i]), theta[i]);
  return g * model.home;
}

/// [R, p^R; 0, R]
inline Mat6 adjoint(const RigidTransform& g) {
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = g.rotation;
  ad.topRightCorner<3, 3>() = skew(g.translation) * g.rotation;
  ad.bottomRightCorner<3, 3>() = g.rotation;
  return ad;
}

/// Ad_g^{-1} = Ad_{g^{-1}} without forming the inverse transform.
inline Mat6 adjoint_inverse(const RigidTransform& g) {
  const Mat3 rt = g.rotation.transpose();
  Mat6 ad = Mat6::Zero();
  ad.topLeftCorner<3, 3>() = rt;
  ad.topRightCorner<3, 3>() = -rt * skew(g.translation);
  ad.bottomRightCorner<3, 3>() = rt;
  return ad;
}

/// Column i is Ad^{-1}(exp(xi_i th_i) ... exp(xi_5 th_5) g_SB(0)) xi_i.
inline Mat65 body_jacobian(const RobotModel& model, const Vec5& theta) {
  Mat65 j;
  RigidTransform tail = model.home;
  for (int i = kJointCount - 1; i >= 0; --i) {
    const Twist xi = make_twist(model.axes[i]);
    tail = exp_twist(xi, theta[i]) * tail;
    j.col(i) = adjoint_inverse(tail) * xi.value;
  }
  return j;
}

inline BodyVelocity end_effector_velocity(const RobotModel& model, const Vec5& theta, const Vec5& theta_dot) {
  return BodyVelocity(Vec6(body_jacobian(model, theta) * theta_dot));
}

/// Body velocity expressed in the spatial frame.
inline Vec6 spatial_velocity(const RigidTransform& g, const BodyVelocity& vb) { return adjoint(g) * vb.value; }

/// Rotation from a JSON-friendly axis/angle pair.
inline Mat3 axis_angle(const Vec3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

inline bool is_rotation(const Mat3& r, double tol = 1e-10) {
  return RigidTransform::from_rotation(r).is_valid(tol);
}

}  // namespace shersim
