#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "support.hpp"

using namespace shersim;
using namespace testing_support;

namespace {

constexpr double kShaft = 0.03;

/// Tool with orientation `r` whose shaft is `depth` past `port`, displaced
/// laterally by `offset_body` (body frame, z component ignored).
ToolState tool_through(const Vec3& port, const Mat3& r, double depth, const Vec3& offset_body = Vec3::Zero()) {
  ToolState t;
  t.pose.rotation = r;
  t.shaft_dir = r.col(2);
  const Vec3 lateral = r * Vec3(offset_body.x(), offset_body.y(), 0.0);
  t.tip = port + depth * t.shaft_dir + lateral;
  t.pose.translation = t.tip - kShaft * t.shaft_dir;
  return t;
}

Mat3 inward(const EyePhantom& e, int port) {
  // any rotation whose z-axis points from the port towards the centre
  const Vec3 z = (e.center - e.port_world(port)).normalized();
  const Vec3 x = z.unitOrthogonal();
  Mat3 r;
  r.col(0) = x;
  r.col(1) = z.cross(x);
  r.col(2) = z;
  return r;
}

}  // namespace

TEST(ScleraForce, ZeroWhenShaftPassesThroughPort) {
  const EyePhantom e = EyePhantom::standard();
  const ToolState t = tool_through(e.port_world(0), inward(e, 0), 0.006);
  const ScleraForceReading r = sclera_force(e, t, 0);
  EXPECT_TRUE(r.engaged);
  EXPECT_NEAR(r.fsx, 0.0, 1e-12);
  EXPECT_NEAR(r.fsy, 0.0, 1e-12);
}

TEST(ScleraForce, OneMillimetreBodyXDeviationGivesHundredMilliNewton) {
  const EyePhantom e = EyePhantom::standard();
  const ToolState t = tool_through(e.port_world(0), inward(e, 0), 0.006, Vec3(0.001, 0, 0));
  const ScleraForceReading r = sclera_force(e, t, 0);
  EXPECT_NEAR(r.fsx, 100.0, 1e-9);
  EXPECT_NEAR(r.fsy, 0.0, 1e-9);
  EXPECT_NEAR(r.norm, 100.0, 1e-9);
}

TEST(ScleraForce, DoublingDeviationDoublesNorm) {
  const EyePhantom e = EyePhantom::standard();
  const Mat3 r = inward(e, 1);
  const Vec3 off(0.0004, -0.0003, 0);
  const double n1 = sclera_force(e, tool_through(e.port_world(1), r, 0.004, off), 1).norm;
  const double n2 = sclera_force(e, tool_through(e.port_world(1), r, 0.004, 2.0 * off), 1).norm;
  EXPECT_NEAR(n2, 2.0 * n1, 1e-9);
}

TEST(ScleraForce, StiffnessScalesLinearly) {
  EyePhantom e = EyePhantom::standard();
  e.sclera_stiffness = 500.0;
  const ToolState t = tool_through(e.port_world(0), inward(e, 0), 0.006, Vec3(0, 0.0002, 0));
  EXPECT_NEAR(sclera_force(e, t, 0).fsy, 100.0, 1e-9);
}

TEST(ScleraForce, RetractedToolIsDisengagedWithZeroForce) {
  const EyePhantom e = EyePhantom::standard();
  const ToolState t = tool_through(e.port_world(0), inward(e, 0), -0.002, Vec3(0.001, 0, 0));
  const ScleraForceReading r = sclera_force(e, t, 0);
  EXPECT_FALSE(r.engaged);
  EXPECT_EQ(r.fsx, 0.0);
  EXPECT_EQ(r.fsy, 0.0);
  EXPECT_FALSE(insertion_depth(e, t, 0).has_value());
}

TEST(ScleraForce, NormMatchesComponentsForRandomPoses) {
  std::mt19937_64 rng(3);
  EyePhantom e = EyePhantom::standard();
  std::uniform_real_distribution<double> off(-0.002, 0.002);
  for (int k = 0; k < 200; ++k) {
    e.orientation = axis_angle(random_unit(rng), 0.3 * off(rng) / 0.002);
    const int port = k % 2;
    const Mat3 r = axis_angle(random_unit(rng), 0.2) * inward(e, port);
    const ToolState t = tool_through(e.port_world(port), r, 0.005, Vec3(off(rng), off(rng), 0));
    const ScleraForceReading s = sclera_force(e, t, port);
    EXPECT_NEAR(s.norm * s.norm, s.fsx * s.fsx + s.fsy * s.fsy, 1e-9);
  }
}

TEST(ScleraForce, InvariantUnderCommonWorldRotation) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> off(-0.001, 0.001);
  for (int k = 0; k < 50; ++k) {
    EyePhantom e = EyePhantom::standard();
    e.center = Vec3(0.01, -0.02, 0.03);
    const ToolState t = tool_through(e.port_world(0), inward(e, 0), 0.004, Vec3(off(rng), off(rng), 0));
    const ScleraForceReading a = sclera_force(e, t, 0);

    const RigidTransform q = random_transform(rng);
    EyePhantom e2 = e;
    e2.center = q.rotation * e.center + q.translation;
    e2.orientation = q.rotation * e.orientation;
    ToolState t2 = t;
    t2.pose.rotation = q.rotation * t.pose.rotation;
    t2.pose.translation = q.rotation * t.pose.translation + q.translation;
    t2.shaft_dir = q.rotation * t.shaft_dir;
    t2.tip = q.rotation * t.tip + q.translation;
    const ScleraForceReading b = sclera_force(e2, t2, 0);
    EXPECT_NEAR(a.fsx, b.fsx, 1e-9);
    EXPECT_NEAR(a.fsy, b.fsy, 1e-9);
  }
}

TEST(InsertionDepth, ZeroAtPortAndTwelveMillimetresPast) {
  const EyePhantom e = EyePhantom::standard();
  const Mat3 r = inward(e, 0);
  EXPECT_NEAR(*insertion_depth(e, tool_through(e.port_world(0), r, 0.0), 0), 0.0, 1e-12);
  EXPECT_NEAR(*insertion_depth(e, tool_through(e.port_world(0), r, 0.012), 0), 12.0, 1e-9);
}

TEST(InsertionDepth, RetractionDecreasesDepthMonotonically) {
  const EyePhantom e = EyePhantom::standard();
  const Mat3 r = inward(e, 1);
  double previous = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= 100; ++k) {
    const double d = 0.010 - 0.0001 * k;
    const auto depth = insertion_depth(e, tool_through(e.port_world(1), r, d, Vec3(0.0003, 0, 0)), 1);
    ASSERT_TRUE(depth.has_value());
    EXPECT_LT(*depth, previous);
    previous = *depth;
  }
}

TEST(TipContact, NoForceAtCentre) {
  const EyePhantom e = EyePhantom::standard();
  ToolState t;
  t.tip = e.center;
  EXPECT_EQ(tip_contact_force(e, t), 0.0);
}

TEST(TipContact, RetinaPenetrationTimesStiffness) {
  const EyePhantom e = EyePhantom::standard();
  ToolState t;
  t.tip = e.center + (e.radius + 0.0001) * Vec3(0, 0, -1);
  EXPECT_NEAR(tip_contact_force(e, t), 50.0, 1e-9);
  t.tip = e.center + e.radius * Vec3(0, 0, -1);
  EXPECT_NEAR(tip_contact_force(e, t), 0.0, 1e-9);
}

TEST(TipContact, PinCaptureSphereCountsAsContact) {
  const EyePhantom e = EyePhantom::standard();
  const VesselTask task = VesselTask::standard(e.radius);
  ToolState t;
  const Vec3 pin = e.to_world(task.pins[2]);
  t.tip = pin + 0.0003 * (e.center - pin).normalized();
  // inside the globe, 0.2 mm into the 0.5 mm capture sphere
  EXPECT_NEAR(tip_contact_force(e, t, &task), 100.0, 1e-9);
  EXPECT_NEAR(tip_contact_force(e, t), 0.0, 1e-12);
}

TEST(PinTouch, NoneAtCentreAndExactHit) {
  const EyePhantom e = EyePhantom::standard();
  const VesselTask task = VesselTask::standard(e.radius);
  ToolState t;
  t.tip = e.center;
  EXPECT_FALSE(check_pin_touch(e, t, task).has_value());
  t.tip = e.to_world(task.pins[2]);
  EXPECT_EQ(check_pin_touch(e, t, task), 2);
}

TEST(PinTouch, EquidistantPinsResolveToLowestId) {
  const EyePhantom e = EyePhantom::standard();
  VesselTask task = VesselTask::standard(e.radius);
  const Vec3 p(0.0, 0.0, -0.008);
  task.pins[3] = p + Vec3(0.0002, 0, 0);
  task.pins[1] = p - Vec3(0.0002, 0, 0);
  ToolState t;
  t.tip = e.to_world(p);
  EXPECT_EQ(check_pin_touch(e, t, task), 1);
}

TEST(PinTouch, StandardPinsAreOnTheRetinaNearThePole) {
  const VesselTask task = VesselTask::standard(0.012);
  for (const Vec3& pin : task.pins) {
    EXPECT_NEAR(pin.norm(), 0.012, 1e-12);
    EXPECT_LT(pin.z(), 0.0);
  }
  EXPECT_NEAR(task.start.norm(), 0.012, 1e-12);
}

TEST(EyeDynamics, EquilibriumStaysPut) {
  const EyePhantom e = EyePhantom::standard();
  const EyePhantom n = step_eye_dynamics(e, {Vec3::Zero(), Vec3::Zero()}, 0.001);
  EXPECT_EQ(n.orientation, e.orientation);
}

TEST(EyeDynamics, RadialForcesProduceNoRotation) {
  EyePhantom e = EyePhantom::standard();
  const Vec3 f0 = 0.7 * (e.port_world(0) - e.center).normalized();
  const Vec3 f1 = -0.4 * (e.port_world(1) - e.center).normalized();
  for (int k = 0; k < 100; ++k) e = step_eye_dynamics(e, {f0, f1}, 0.001);
  EXPECT_LT((e.orientation - Mat3::Identity()).norm(), 1e-12);
}

TEST(EyeDynamics, CentreIsBitIdenticalAfterManySteps) {
  EyePhantom e = EyePhantom::standard();
  e.center = Vec3(0.0123, -0.0456, 0.0789);
  const Vec3 c = e.center;
  for (int k = 0; k < 5000; ++k) e = step_eye_dynamics(e, {Vec3(0, 0.3, 0), Vec3(0.1, 0, 0.2)}, 0.001);
  EXPECT_EQ(e.center.x(), c.x());
  EXPECT_EQ(e.center.y(), c.y());
  EXPECT_EQ(e.center.z(), c.z());
}

TEST(EyeDynamics, RejectsNonPositiveStep) {
  EXPECT_THROW(step_eye_dynamics(EyePhantom::standard(), {Vec3::Zero(), Vec3::Zero()}, 0.0), ContractViolation);
}

namespace {

// Ports on the +/-x axes with tangential forces +/-f along y: the rotation
// stays about z and obeys c * th' = 2 R f cos(th) - k th.
EyePhantom couple_scene() {
  EyePhantom e = EyePhantom::standard();
  e.ports = {Vec3::UnitX(), -Vec3::UnitX()};
  return e;
}

double rk4_couple_angle(const EyePhantom& e, double f, double t_end) {
  auto rhs = [&](double th) { return (2.0 * e.radius * f * std::cos(th) - e.rot_stiffness * th) / e.rot_damping; };
  const int n = 200000;
  const double h = t_end / n;
  double th = 0.0;
  for (int i = 0; i < n; ++i) {
    const double k1 = rhs(th), k2 = rhs(th + 0.5 * h * k1), k3 = rhs(th + 0.5 * h * k2), k4 = rhs(th + h * k3);
    th += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
  }
  return th;
}

double simulate_couple(double f, double t_end, double dt) {
  EyePhantom e = couple_scene();
  const int n = static_cast<int>(std::lround(t_end / dt));
  for (int i = 0; i < n; ++i) e = step_eye_dynamics(e, {Vec3(0, f, 0), Vec3(0, -f, 0)}, dt);
  return Eigen::AngleAxisd(e.orientation).angle() * Eigen::AngleAxisd(e.orientation).axis().z();
}

}  // namespace

TEST(EyeDynamics, ConstantCoupleFollowsFirstOrderOde) {
  const double f = 1.0, t_end = 0.5;
  const double oracle = rk4_couple_angle(couple_scene(), f, t_end);
  EXPECT_NEAR(simulate_couple(f, t_end, 1e-4), oracle, 1e-4);
  // converged to the static balance 2 R f cos(th) = k th
  const double late = simulate_couple(f, 2.0, 1e-4);
  const EyePhantom e = couple_scene();
  EXPECT_NEAR(2.0 * e.radius * f * std::cos(late), e.rot_stiffness * late, 1e-6);
}

TEST(EyeDynamics, HalvingStepHalvesError) {
  const double f = 1.0, t_end = 0.3;
  const double oracle = rk4_couple_angle(couple_scene(), f, t_end);
  const double e1 = std::abs(simulate_couple(f, t_end, 2e-3) - oracle);
  const double e2 = std::abs(simulate_couple(f, t_end, 1e-3) - oracle);
  EXPECT_GT(e1, 0.0);
  EXPECT_NEAR(e1 / e2, 2.0, 0.3);
}

TEST(SensorNoiseTest, ZeroSigmaLeavesReadingUnchanged) {
  ScleraForceReading r;
  r.engaged = true;
  r.fsx = 12.5;
  r.fsy = -3.0;
  r.norm = std::hypot(12.5, -3.0);
  r.insertion_depth = 6.0;
  std::mt19937_64 rng(1);
  const ScleraForceReading n = add_sensor_noise(r, SensorNoise{0.0, 0.0}, rng);
  EXPECT_EQ(n.fsx, r.fsx);
  EXPECT_EQ(n.fsy, r.fsy);
  EXPECT_EQ(n.norm, r.norm);
  EXPECT_EQ(n.insertion_depth, r.insertion_depth);
}

TEST(SensorNoiseTest, SameSeedSameSequence) {
  ScleraForceReading r;
  r.engaged = true;
  std::mt19937_64 a(42), b(42);
  for (int k = 0; k < 100; ++k) {
    const auto x = add_sensor_noise(r, SensorNoise{}, a);
    const auto y = add_sensor_noise(r, SensorNoise{}, b);
    ASSERT_EQ(x.fsx, y.fsx);
    ASSERT_EQ(x.fsy, y.fsy);
    ASSERT_EQ(x.insertion_depth, y.insertion_depth);
  }
}

TEST(SensorNoiseTest, SampleMeanAndSpreadMatchModel) {
  ScleraForceReading r;
  r.engaged = true;
  r.fsx = 40.0;
  r.insertion_depth = 5.0;
  std::mt19937_64 rng(2024);
  const int n = 100000;
  double sum = 0, sq = 0, dsum = 0;
  for (int k = 0; k < n; ++k) {
    const auto x = add_sensor_noise(r, SensorNoise{}, rng);
    sum += x.fsx;
    sq += (x.fsx - 40.0) * (x.fsx - 40.0);
    dsum += x.insertion_depth;
    ASSERT_NEAR(x.norm, std::hypot(x.fsx, x.fsy), 1e-12);
  }
  EXPECT_NEAR(sum / n, 40.0, 3.0 * 2.0 / std::sqrt(n));
  EXPECT_NEAR(dsum / n, 5.0, 3.0 * 0.05 / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(sq / n), 2.0, 0.05);
}

TEST(SensorNoiseTest, DisengagedReadingStaysClean) {
  ScleraForceReading r;
  std::mt19937_64 rng(9);
  const auto x = add_sensor_noise(r, SensorNoise{}, rng);
  EXPECT_EQ(x.fsx, 0.0);
  EXPECT_EQ(x.norm, 0.0);
}
