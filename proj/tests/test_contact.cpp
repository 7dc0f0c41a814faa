#include <gtest/gtest.h>

#include <cmath>

#include "holoarm/drop.hpp"

using namespace holoarm;

namespace {

// Kelvin-Voigt contact of a point mass landing at v0 on stiffness k and
// damping c: force k x + c x' over time, finely integrated.
double kelvin_voigt_force_at(double t_query, double m, double k, double c, double v0, double g) {
  double x = 0.0, v = v0;
  const double h = 1e-8;
  for (double t = 0.0; t < t_query; t += h) {
    const double f = k * x + c * v;
    v += (g - f / m) * h;
    x += v * h;
  }
  return k * x + c * v;
}

const double kHeights[] = {1.0, 1.5, 3.0};

}  // namespace

TEST(Contact, NormalForceLaw) {
  ContactParams p;
  EXPECT_DOUBLE_EQ(contact_force(0.001, 0.0, p), 20.0);
  EXPECT_DOUBLE_EQ(contact_force(0.001, 0.2, p), 20.0 + 10.0);
  EXPECT_DOUBLE_EQ(contact_force(0.001, -1.0, p), 0.0);  // never pulls
  EXPECT_DOUBLE_EQ(contact_force(0.0, 0.0, p), 0.0);
  EXPECT_THROW(contact_force(-1e-6, 0.0, p), ContractError);
  EXPECT_THROW(contact_force(std::nan(""), 0.0, p), NumericalError);
}

TEST(Contact, GroundPenetrationOfPointAndTiltedRing) {
  Primitive pt;
  pt.center = Vec3(0.3, -0.2, -0.004);
  const auto pen = ground_penetration(pt, 0.0);
  ASSERT_TRUE(pen.has_value());
  EXPECT_NEAR(pen->depth, 0.004, 1e-15);
  EXPECT_EQ(pen->normal, Vec3::UnitZ());

  Primitive ring;
  ring.radius = 0.087;
  const double tilt = deg2rad(20.0);
  ring.axis = Vec3(std::sin(tilt), 0.0, std::cos(tilt));
  ring.center = Vec3(0.0, 0.0, 0.02);
  const auto rp = ground_penetration(ring, 0.0);
  ASSERT_TRUE(rp.has_value());
  EXPECT_NEAR(rp->depth, 0.087 * std::sin(tilt) - 0.02, 1e-12);

  pt.center.z() = 0.01;
  EXPECT_FALSE(ground_penetration(pt, 0.0).has_value());
}

TEST(Contact, WallPenetrationFromSideFace) {
  const WallBox box{Vec3(-0.05, 0.24, -5.0), Vec3(0.05, 5.0, 5.0)};
  Primitive ring;
  ring.radius = 0.087;
  ring.center = Vec3(0.0, 0.20, 1.0);
  const auto pen = box_penetration(ring, box);
  ASSERT_TRUE(pen.has_value());
  EXPECT_NEAR(pen->depth, 0.087 - 0.04, 1e-12);
  EXPECT_NEAR(pen->normal.y(), -1.0, 1e-12);
  ring.center.y() = 0.10;
  EXPECT_FALSE(box_penetration(ring, box).has_value());
}

TEST(Contact, FrictionIsCappedByCoulomb) {
  ContactParams p;
  const Penetration pen{0.005, Vec3::UnitZ(), Vec3::Zero()};
  const Vec3 slow = penetration_force(pen, Vec3(0.01, 0.0, 0.0), p);
  EXPECT_NEAR(slow.z(), 100.0, 1e-12);
  EXPECT_NEAR(slow.x(), -p.c_t * 0.01, 1e-12);
  const Vec3 fast = penetration_force(pen, Vec3(0.0, 3.0, 0.0), p);
  EXPECT_NEAR(fast.y(), -p.mu * 100.0, 1e-12);
}

TEST(Contact, GapWallsLeaveTheOpening) {
  GapGeometry g;
  g.width = 0.48;
  const auto walls = g.walls();
  ASSERT_EQ(walls.size(), 2u);
  EXPECT_NEAR(walls[0].min.y() - walls[1].max.y(), 0.48, 1e-12);
  EXPECT_NEAR(walls[0].max.x() - walls[0].min.x(), g.thickness, 1e-12);
}

TEST(Drop, ImpactSpeedMatchesFreeFall) {
  for (double h : kHeights) {
    for (bool compliant : {true, false}) {
      DropConfig d;
      d.height = h;
      d.compliant = compliant;
      const ImpactEvent e = drop_test(d);
      EXPECT_NEAR(e.impact_speed, std::sqrt(2.0 * d.vehicle.gravity * h), 0.005 * std::sqrt(2.0 * 9.81 * h));
    }
  }
}

TEST(Drop, RigidPeakBracketedByPointMassContact) {
  // Rigid and level: all eight primitives land together, so the body is a
  // point mass on 8 k_n and 8 c_n in parallel. The force peaks at touchdown
  // (c v0); the recorded peak is the first sample, up to two steps later.
  DropConfig d;
  d.compliant = false;
  const double k = 8.0 * d.contact.k_n, c = 8.0 * d.contact.c_n;
  for (double h : kHeights) {
    d.height = h;
    const ImpactEvent e = drop_test(d);
    const double upper = kelvin_voigt_force_at(0.0, d.mass, k, c, e.impact_speed, d.vehicle.gravity);
    const double lower = kelvin_voigt_force_at(2.0 * d.dt, d.mass, k, c, e.impact_speed, d.vehicle.gravity);
    EXPECT_LE(e.peak_force, upper * 1.001) << "h=" << h;
    EXPECT_GE(e.peak_force, lower * 0.999) << "h=" << h;
  }
}

TEST(Drop, ImpulseBalancesMomentumChange) {
  for (bool compliant : {false, true}) {
    DropConfig d;
    d.height = 1.5;
    d.compliant = compliant;
    const ImpactEvent e = drop_test(d);
    const double expect = d.mass * (e.impact_speed + e.rebound_speed) + d.mass * d.vehicle.gravity * e.contact_duration;
    EXPECT_NEAR(e.impulse, expect, 0.02 * expect) << (compliant ? "compliant" : "rigid");
  }
}

TEST(Drop, CompliantSofterLongerAndMonotone) {
  double last_c = 0.0, last_r = 0.0;
  for (double h : kHeights) {
    DropConfig d;
    d.height = h;
    const ImpactEvent c = drop_test(d);
    d.compliant = false;
    const ImpactEvent r = drop_test(d);
    EXPECT_LT(c.peak_force, r.peak_force);
    EXPECT_GT(c.contact_duration, r.contact_duration);
    const double ratio = c.peak_force / r.peak_force;
    EXPECT_GE(ratio, 0.5);
    EXPECT_LE(ratio, 0.9);
    EXPECT_GT(c.peak_force, last_c);
    EXPECT_GT(r.peak_force, last_r);
    last_c = c.peak_force;
    last_r = r.peak_force;
  }
}

TEST(Drop, RejectsBadConfig) {
  DropConfig d;
  d.height = 0.0;
  EXPECT_THROW(drop_test(d), ContractError);
  d.height = 1.0;
  d.dt = 0.01;
  EXPECT_THROW(drop_test(d), ContractError);
  d.dt = 5e-5;
  d.max_time = 0.1;  // 1 m fall takes 0.45 s
  EXPECT_THROW(drop_test(d), ContractError);
}
