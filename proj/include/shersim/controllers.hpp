#pragma once

// High-level control: the adaptive sclera-force law, the per-axis hybrid
// kinematic/force switching with hysteresis, master-to-body velocity mapping
// with motion scaling, cooperative admittance and pedal scaling.
//
// Units: forces in mN, linear velocities in m/s, compliance alpha in m/mN.

#include <algorithm>
#include <cmath>

#include "shersim/kinematics.hpp"

namespace shersim {

/// Gains for one lateral axis (x or y) of the adaptive force controller.
struct AfcGains {
  double threshold = 100.0;    // T_s, mN
  double safe_limit = 120.0;   // mN
  double force_gain = 1e-4;    // K_f, (m/s)/mN
  double adaptation_gain = 1e-7;  // Gamma
  double alpha0 = 0.0;         // initial compliance estimate, m/mN

  /// Force level at or below which an active axis hands back to kinematic control.
  double release_level() const { return 0.75 * threshold; }

  void validate() const {
    if (!(threshold > 0.0) || !(threshold < safe_limit))
      throw ContractViolation("AFC gains require 0 < T_s < safe_limit");
    if (!(force_gain > 0.0)) throw ContractViolation("AFC gains require K_f > 0");
    if (!(adaptation_gain > 0.0)) throw ContractViolation("AFC gains require Gamma > 0");
    if (!std::isfinite(alpha0)) throw ContractViolation("AFC alpha0 must be finite");
  }
};

struct AfcAxisState {
  bool active = false;       // Delta_i
  double t_activation = 0.0;  // s
  double sign = 1.0;         // sign(F_si) when activated
  double alpha = 0.0;        // compliance estimate, m/mN
  double f_d = 0.0;          // mN, meaningful only while active
  double f_d_dot = 0.0;      // mN/s

  static AfcAxisState initial(const AfcGains& g) {
    AfcAxisState s;
    s.alpha = g.alpha0;
    return s;
  }
};

struct DesiredForce {
  double f_d;
  double f_d_dot;
};

/// Exponentially decaying reference from +-T_s towards +-T_s/2 with unit rate.
inline DesiredForce desired_force_trajectory(const AfcGains& gains, const AfcAxisState& state, double t) {
  if (!state.active) throw ContractViolation("desired_force_trajectory called on an inactive axis");
  const double half = 0.5 * gains.threshold * state.sign;
  const double decay = std::exp(-(t - state.t_activation));
  return {half * (decay + 1.0), -half * decay};
}

struct AfcOutput {
  double velocity;  // m/s along the body axis
  AfcAxisState state;
};

/// Adaptive velocity X_A = alpha f_d' - K_f (F - f_d) with an explicit Euler
/// step of alpha' = -Gamma f_d' (F - f_d).
inline AfcOutput afc_axis_velocity(const AfcGains& gains, const AfcAxisState& state, double force, double t,
                                   double dt) {
  const DesiredForce ref = desired_force_trajectory(gains, state, t);
  const double error = force - ref.f_d;
  AfcOutput out{state.alpha * ref.f_d_dot - gains.force_gain * error, state};
  out.state.f_d = ref.f_d;
  out.state.f_d_dot = ref.f_d_dot;
  out.state.alpha = state.alpha - gains.adaptation_gain * ref.f_d_dot * error * dt;
  return out;
}

/// One evaluation of the hybrid switching policy for a single axis. Activation
/// on |F| >= T_s, release on |F| <= 0.75 T_s. Alpha survives deactivation.
inline AfcAxisState switching_policy(const AfcGains& gains, const AfcAxisState& state, double force, double t) {
  AfcAxisState next = state;
  const double magnitude = std::abs(force);
  if (!state.active) {
    if (magnitude >= gains.threshold) {
      next.active = true;
      next.t_activation = t;
      next.sign = force >= 0.0 ? 1.0 : -1.0;
    }
  } else if (magnitude <= gains.release_level()) {
    next.active = false;
  }
  return next;
}

/// K = diag(kappa_1..kappa_6), indexed like BodyVelocity.
struct MotionScaling {
  Vec6 kappa = Vec6::Ones();

  void validate() const {
    if (!kappa.allFinite() || (kappa.array() < 0.0).any())
      throw ContractViolation("motion scaling entries must be >= 0");
  }
};

/// Rotation of master-device axes onto the robot body axes.
struct MasterBodyMap {
  Mat3 rotation = Mat3::Identity();

  void validate() const {
    if (!is_rotation(rotation)) throw ContractViolation("master-body map must be a proper rotation");
  }
};

/// Blends the kinematic and adaptive commands per axis:
/// x, y channels: (1 - Delta) kappa x_o + Delta X_A; the rest: kappa x_o.
inline BodyVelocity hybrid_command(bool delta_x, bool delta_y, const MotionScaling& scaling,
                                   const BodyVelocity& x_o_b, const Vec2& x_a) {
  Vec6 out = scaling.kappa.cwiseProduct(x_o_b.value);
  const double dx = delta_x ? 1.0 : 0.0;
  const double dy = delta_y ? 1.0 : 0.0;
  out[0] = (1.0 - dx) * scaling.kappa[0] * x_o_b.value[0] + dx * x_a[0];
  out[1] = (1.0 - dy) * scaling.kappa[1] * x_o_b.value[1] + dy * x_a[1];
  return BodyVelocity(out);
}

inline BodyVelocity map_master_to_body(const MasterBodyMap& map, const BodyVelocity& x_o) {
  return BodyVelocity(Vec3(map.rotation * x_o.linear()), Vec3(map.rotation * x_o.angular()));
}

/// Cooperative mode: diagonal admittance from handle wrench (N, N m) to body velocity.
inline BodyVelocity admittance_command(const Vec6& handle_wrench, const Vec6& admittance_gain) {
  return BodyVelocity(Vec6(admittance_gain.cwiseProduct(handle_wrench)));
}

/// Pedal authority over the kinematic command; 0 freezes, 1 passes through.
inline BodyVelocity pedal_scale(const BodyVelocity& cmd, double pedal) {
  return std::clamp(pedal, 0.0, 1.0) * cmd;
}

}  // namespace shersim
