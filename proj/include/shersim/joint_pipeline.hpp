#pragma once

// Mid-level joint-velocity optimizer and the low-level velocity-tracking
// plant standing in for the joint servo controllers.

#include <algorithm>
#include <cmath>
#include <utility>

#include "shersim/kinematics.hpp"

namespace shersim {

struct OptimizerOptions {
  double damping = 1e-3;            // lambda
  Vec6 weights = Vec6::Ones();      // per-channel task weights
  int max_iterations = 64;
};

struct JointBox {
  Vec5 lower;
  Vec5 upper;
};

/// Velocity box implied by |qd| <= vel_max and q + qd dt staying in
/// [pos_min, pos_max]. Always contains zero when q is within its limits.
inline JointBox joint_velocity_box(const JointLimits& limits, const Vec5& theta, double dt) {
  JointBox box;
  for (int i = 0; i < kJointCount; ++i) {
    const double lo = std::min(0.0, (limits.pos_min[i] - theta[i]) / dt);
    const double hi = std::max(0.0, (limits.pos_max[i] - theta[i]) / dt);
    box.lower[i] = std::max(-limits.vel_max[i], lo);
    box.upper[i] = std::min(limits.vel_max[i], hi);
  }
  return box;
}

struct QuadraticObjective {
  Eigen::Matrix<double, 5, 5> hessian;  // J^T W J + lambda^2 I
  Vec5 linear;                          // J^T W v
  double constant;                      // v^T W v

  double operator()(const Vec5& x) const { return x.dot(hessian * x) - 2.0 * linear.dot(x) + constant; }
};

/// ||W^(1/2) (J qd - v)||^2 + lambda^2 ||qd||^2 in expanded form.
inline QuadraticObjective joint_velocity_objective(const Mat65& jacobian, const BodyVelocity& v_des,
                                                   const OptimizerOptions& opts) {
  const Vec6 w = opts.weights;
  const Mat65 wj = w.asDiagonal() * jacobian;
  QuadraticObjective q;
  q.hessian = jacobian.transpose() * wj + opts.damping * opts.damping * Eigen::Matrix<double, 5, 5>::Identity();
  q.linear = wj.transpose() * v_des.value;
  q.constant = v_des.value.dot(w.asDiagonal() * v_des.value);
  return q;
}

namespace detail {

/// Primal active-set method for min 1/2 x'Hx - b'x on a box, H SPD.
/// Starts from the feasible point clamp(0) and terminates at the KKT point.
inline Vec5 solve_box_qp(const Eigen::Matrix<double, 5, 5>& h, const Vec5& b, const JointBox& box,
                         int max_iterations) {
  enum class Bound { free, lower, upper };
  std::array<Bound, kJointCount> state;
  state.fill(Bound::free);
  Vec5 x = Vec5::Zero().cwiseMax(box.lower).cwiseMin(box.upper);

  for (int iter = 0; iter < max_iterations; ++iter) {
    std::array<int, kJointCount> free_idx{};
    int n_free = 0;
    for (int i = 0; i < kJointCount; ++i)
      if (state[i] == Bound::free) free_idx[n_free++] = i;

    // Unconstrained minimiser over the free subspace with bound variables fixed.
    Vec5 target = x;
    if (n_free > 0) {
      Eigen::MatrixXd hff(n_free, n_free);
      Eigen::VectorXd rhs(n_free);
      for (int a = 0; a < n_free; ++a) {
        rhs[a] = b[free_idx[a]];
        for (int i = 0; i < kJointCount; ++i)
          if (state[i] != Bound::free) rhs[a] -= h(free_idx[a], i) * x[i];
        for (int c = 0; c < n_free; ++c) hff(a, c) = h(free_idx[a], free_idx[c]);
      }
      const Eigen::VectorXd sol = hff.llt().solve(rhs);
      for (int a = 0; a < n_free; ++a) target[free_idx[a]] = sol[a];
    }

    // Walk towards the subspace minimiser, stopping at the first blocking bound.
    double step = 1.0;
    int blocking = -1;
    Bound blocking_side = Bound::free;
    for (int a = 0; a < n_free; ++a) {
      const int i = free_idx[a];
      const double d = target[i] - x[i];
      if (d > 0.0 && target[i] > box.upper[i]) {
        const double s = (box.upper[i] - x[i]) / d;
        if (s < step) { step = s; blocking = i; blocking_side = Bound::upper; }
      } else if (d < 0.0 && target[i] < box.lower[i]) {
        const double s = (box.lower[i] - x[i]) / d;
        if (s < step) { step = s; blocking = i; blocking_side = Bound::lower; }
      }
    }
    if (blocking >= 0) {
      for (int a = 0; a < n_free; ++a) {
        const int i = free_idx[a];
        x[i] += step * (target[i] - x[i]);
      }
      state[blocking] = blocking_side;
      x[blocking] = blocking_side == Bound::upper ? box.upper[blocking] : box.lower[blocking];
      continue;
    }
    x = target;

    // Release the bound with the most negative multiplier, if any.
    const Vec5 grad = h * x - b;
    int release = -1;
    double worst = 0.0;
    for (int i = 0; i < kJointCount; ++i) {
      double violation = 0.0;
      if (state[i] == Bound::lower && grad[i] < 0.0) violation = -grad[i];
      if (state[i] == Bound::upper && grad[i] > 0.0) violation = grad[i];
      if (violation > worst) { worst = violation; release = i; }
    }
    if (release < 0) break;
    state[release] = Bound::free;
  }
  return x.cwiseMax(box.lower).cwiseMin(box.upper);
}

}  // namespace detail

/// Box-constrained damped least squares for the joint velocities realising
/// `v_des`. The result always satisfies the velocity and position-step limits.
inline Vec5 solve_joint_velocities(const Mat65& jacobian, const BodyVelocity& v_des, const JointLimits& limits,
                                   const Vec5& theta, double dt, const OptimizerOptions& opts = {}) {
  if (!(dt > 0.0)) throw ContractViolation("solve_joint_velocities requires dt > 0");
  if (!jacobian.allFinite() || !v_des.is_finite() || !theta.allFinite())
    throw NumericalFault("solve_joint_velocities", "non-finite Jacobian, target or joint position");
  const QuadraticObjective q = joint_velocity_objective(jacobian, v_des, opts);
  return detail::solve_box_qp(q.hessian, q.linear, joint_velocity_box(limits, theta, dt), opts.max_iterations);
}

struct VelocityPlant {
  double time_constant = 0.02;  // s
  Vec5 rate_limit = Vec5::Constant(0.5);  // per-joint |d qd/dt| bound
  Vec5 velocity = Vec5::Zero();

  /// tau = 20 ms, rate limit = 10 x vel_max per second.
  static VelocityPlant for_limits(const JointLimits& limits) {
    VelocityPlant p;
    p.rate_limit = 10.0 * limits.vel_max;
    return p;
  }

  void validate() const {
    if (!(time_constant > 0.0)) throw ContractViolation("plant time constant must be > 0");
    if (!(rate_limit.array() > 0.0).all()) throw ContractViolation("plant rate limits must be > 0");
  }
};

/// Exact discretisation of a first-order lag, followed by a per-joint rate clamp.
inline std::pair<VelocityPlant, Vec5> track_joint_velocity(const VelocityPlant& plant, const Vec5& desired,
                                                           double dt) {
  if (!(dt > 0.0)) throw ContractViolation("track_joint_velocity requires dt > 0");
  const double blend = -std::expm1(-dt / plant.time_constant);
  Vec5 change = blend * (desired - plant.velocity);
  const Vec5 max_change = plant.rate_limit * dt;
  change = change.cwiseMax(-max_change).cwiseMin(max_change);
  VelocityPlant next = plant;
  next.velocity = plant.velocity + change;
  return {next, next.velocity};
}

/// Euler integration with a hard stop at the joint limits; a joint that hits
/// its stop has its velocity zeroed.
inline Vec5 integrate_joints(const Vec5& theta, Vec5& theta_dot, const JointLimits& limits, double dt) {
  Vec5 next = theta + theta_dot * dt;
  for (int i = 0; i < kJointCount; ++i) {
    if (next[i] > limits.pos_max[i]) {
      next[i] = limits.pos_max[i];
      theta_dot[i] = 0.0;
    } else if (next[i] < limits.pos_min[i]) {
      next[i] = limits.pos_min[i];
      theta_dot[i] = 0.0;
    }
  }
  return next;
}

}  // namespace shersim
