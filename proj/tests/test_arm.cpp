#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "holoarm/arm.hpp"
#include "oracles.hpp"

using namespace holoarm;

namespace {

struct Measured {
  Channel channel;
  double peak;
  double time;
};

// Release tests of the physical arm.
const Measured kMeasured[] = {{Channel::lateral, 32.0, 0.72},
                              {Channel::up, 28.0, 0.27},
                              {Channel::down, 19.0, 0.62},
                              {Channel::axial, 3.66, 0.75}};

double resimulated(const ArmParams& p, const Measured& m) {
  const RecoveryTrace tr = simulate_release(p, m.channel, m.peak, 3.0);
  return recovery_time(tr, default_threshold(m.channel, m.peak)).value_or(-1.0);
}

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("holoarm_test_" + name);
}

}  // namespace

TEST(Arm, BuiltInTargetsMatchMeasurements) {
  const auto& targets = measured_recovery_targets();
  ASSERT_EQ(targets.size(), 4u);
  for (size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(targets[i].channel, kMeasured[i].channel);
    EXPECT_DOUBLE_EQ(targets[i].peak_deflection, kMeasured[i].peak);
    EXPECT_DOUBLE_EQ(targets[i].recovery_time, kMeasured[i].time);
  }
}

TEST(Arm, DefaultsReproduceRecoveryTimes) {
  const ArmParams p;
  for (const Measured& m : kMeasured) {
    EXPECT_NEAR(resimulated(p, m), m.time, 0.10 * m.time) << to_string(m.channel);
  }
}

TEST(Arm, FitRoundTripWithinTenPercent) {
  for (const Measured& m : kMeasured) {
    const FitResult r = fit_arm_params({m.peak, m.time, m.channel}, ArmParams{});
    ArmParams p;
    set_channel(p, m.channel, r.k, r.c);
    EXPECT_NEAR(resimulated(p, m), m.time, 0.10 * m.time) << to_string(m.channel);
    EXPECT_GE(r.zeta, 0.5);
    EXPECT_LE(r.zeta, 1.2);
  }
}

TEST(Arm, FitAgreesWithClosedFormGridSearch) {
  const ArmParams base;
  for (const Measured& m : kMeasured) {
    const FitResult r = fit_arm_params({m.peak, m.time, m.channel}, base);
    const double j = m.channel == Channel::axial ? base.mass_eff : base.inertia_eff;
    const double band = (m.channel == Channel::axial ? 0.01 * m.peak : 1.0) / m.peak;
    const oracle::GridHit g = oracle::grid_search(j, band, m.time, 0.8);
    EXPECT_LE(std::abs(std::log(r.k / g.k)), g.log_step_k * 1.0001) << to_string(m.channel);
    EXPECT_LE(std::abs(std::log(r.c / g.c)), g.log_step_c * 1.0001) << to_string(m.channel);
  }
}

TEST(Arm, ReleaseMatchesClosedFormOscillator) {
  const ArmParams p;
  const RecoveryTrace tr = simulate_release(p, Channel::lateral, 20.0, 1.0, 1e-3, 10);
  for (size_t i = 0; i < tr.values.size(); i += 7) {
    const double x = 20.0 * oracle::oscillator(tr.timestamps[i], p.k_lat, p.c_lat, p.inertia_eff);
    EXPECT_NEAR(tr.values[i], x, 1e-6) << "t=" << tr.timestamps[i];
  }
}

TEST(Arm, RecoveryTimeInterpolatesLinearly) {
  RecoveryTrace tr;
  tr.timestamps = {0.0, 0.1, 0.2, 0.3, 0.4};
  tr.values = {2.0, 10.0, 6.0, 2.0, 0.0};
  // Peak at t=0.1; |v| crosses 3 between 0.2 (6) and 0.3 (2): 0.2 + 0.1*3/4.
  EXPECT_NEAR(*recovery_time(tr, 3.0), 0.275 - 0.1, 1e-12);
  RecoveryTrace stuck;
  stuck.timestamps = {0.0, 1.0};
  stuck.values = {5.0, 4.0};
  EXPECT_FALSE(recovery_time(stuck, 1.0).has_value());
  EXPECT_THROW(recovery_time(tr, -1.0), ContractError);
}

TEST(Arm, DefaultThresholds) {
  EXPECT_DOUBLE_EQ(default_threshold(Channel::lateral, 32.0), 1.0);
  EXPECT_DOUBLE_EQ(default_threshold(Channel::down, 19.0), 1.0);
  EXPECT_NEAR(default_threshold(Channel::axial, 3.66), 0.0366, 1e-15);
}

TEST(Arm, TraceCsvRoundTripAndErrors) {
  const auto path = temp_file("trace.csv");
  const RecoveryTrace tr = simulate_release(ArmParams{}, Channel::up, 28.0, 0.5, 1e-3, 10);
  write_trace(path, tr);
  const RecoveryTrace back = load_trace(path, Channel::up);
  ASSERT_EQ(back.values.size(), tr.values.size());
  for (size_t i = 0; i < tr.values.size(); ++i) EXPECT_NEAR(back.values[i], tr.values[i], 1e-8 * 28.0);

  EXPECT_THROW(load_trace(temp_file("does_not_exist.csv"), Channel::up), IoError);
  const auto bad = temp_file("bad.csv");
  std::ofstream(bad) << "time,angle\n0,1\n";
  try {
    load_trace(bad, Channel::up);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1);
  }
  std::filesystem::remove(path);
  std::filesystem::remove(bad);
}

TEST(Arm, EnergyNeverIncreasesDuringRelease) {
  const ArmParams p;
  ArmState s;
  s.beta_lat = deg2rad(30.0);
  s.beta_vert = deg2rad(-15.0);
  s.s_ax = 0.003;
  double e = arm_energy(s, p);
  for (int i = 0; i < 3000; ++i) {
    s = arm_step(s, ArmLoad{}, p, 1e-3);
    const double e1 = arm_energy(s, p);
    EXPECT_LE(e1, e + 1e-15);
    e = e1;
  }
  EXPECT_LT(e, 1e-6);
}

TEST(Arm, HardStopsClampAndKillOutwardRate) {
  const ArmParams p;
  ArmState s;
  s.beta_lat = deg2rad(40.0);
  s.rate_lat = 2.0;
  s.s_ax = 0.01;
  s.rate_ax = 0.1;
  const ArmState c = apply_hard_stops(s, p);
  EXPECT_DOUBLE_EQ(c.beta_lat, p.bend_limit);
  EXPECT_DOUBLE_EQ(c.rate_lat, 0.0);
  EXPECT_DOUBLE_EQ(c.s_ax, p.axial_travel_max);
  EXPECT_DOUBLE_EQ(c.rate_ax, 0.0);
}

TEST(Arm, FitErrorPaths) {
  EXPECT_THROW(fit_arm_params({32.0, 0.0, Channel::lateral}, ArmParams{}), ContractError);
  EXPECT_THROW(fit_arm_params({0.5, 0.7, Channel::lateral}, ArmParams{}), ContractError);
  EXPECT_THROW(fit_arm_params({32.0, 1e-4, Channel::lateral}, ArmParams{}), FitInfeasible);
  EXPECT_THROW(parse_channel("sideways"), ContractError);
}
