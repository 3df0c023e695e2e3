#pragma once

#include <random>

#include "shersim/shersim.hpp"

namespace testing_support {

using namespace shersim;

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v(n(rng), n(rng), n(rng));
  return v.normalized();
}

inline RigidTransform random_transform(std::mt19937_64& rng, double reach = 0.2) {
  std::uniform_real_distribution<double> u(-reach, reach);
  std::uniform_real_distribution<double> ang(-3.0, 3.0);
  return {axis_angle(random_unit(rng), ang(rng)), Vec3(u(rng), u(rng), u(rng))};
}

inline Vec5 random_theta(std::mt19937_64& rng, const JointLimits& lim) {
  Vec5 th;
  for (int i = 0; i < kJointCount; ++i) {
    std::uniform_real_distribution<double> u(lim.pos_min[i], lim.pos_max[i]);
    th[i] = u(rng);
  }
  return th;
}

/// A 3P-2R chain with random axis placements, for properties that must hold
/// for any valid geometry rather than just the default one.
inline RobotModel random_model(std::mt19937_64& rng) {
  RobotModel m = RobotModel::sher_default();
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (int i = 0; i < 3; ++i) m.axes[i] = PrismaticAxis{random_unit(rng)};
  for (int i = 3; i < 5; ++i) m.axes[i] = RevoluteAxis{random_unit(rng), Vec3(u(rng), u(rng), u(rng))};
  m.home = random_transform(rng);
  return m;
}

}  // namespace testing_support
