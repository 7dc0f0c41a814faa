#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>

#include "holoarm/io.hpp"
#include "holoarm/scenarios.hpp"

using namespace holoarm;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("holoarm_test_" + name);
}

ScenarioConfig config_for(ScenarioKind kind) {
  ScenarioConfig c;
  c.kind = kind;
  return c;
}

}  // namespace

TEST(Scenario, NamesRoundTrip) {
  for (ScenarioKind k : all_scenario_kinds()) EXPECT_EQ(parse_scenario_kind(to_string(k)), k);
  EXPECT_EQ(all_scenario_kinds().size(), 5u);
  EXPECT_THROW(parse_scenario_kind("loop"), ContractError);
}

TEST(Scenario, LemniscateDerivativesMatchFiniteDifferences) {
  LemniscateParams p;
  p.period = 7.0;
  const double h = 1e-5;
  for (double t : {0.0, 0.9, 2.3, 5.1}) {
    const ControlTarget c = lemniscate_target(t, p);
    const Vec3 up = lemniscate_reference(t + h, p.period, p.a, p.b, p.altitude);
    const Vec3 dn = lemniscate_reference(t - h, p.period, p.a, p.b, p.altitude);
    const Vec3 mid = lemniscate_reference(t, p.period, p.a, p.b, p.altitude);
    EXPECT_LT((c.position - mid).norm(), 1e-15);
    EXPECT_LT((c.velocity - (up - dn) / (2.0 * h)).norm(), 1e-8);
    EXPECT_LT((c.acceleration - (up - 2.0 * mid + dn) / (h * h)).norm(), 1e-4);
  }
  // Figure eight: crosses the centre twice per period.
  EXPECT_LT((lemniscate_reference(3.5, 7.0) - Vec3(0.0, 0.0, 1.0)).norm(), 1e-12);
  EXPECT_THROW(lemniscate_reference(0.0, 0.0), ContractError);
}

TEST(Scenario, LemniscateCsvReproducesReportedError) {
  ScenarioConfig cfg = config_for(ScenarioKind::lemniscate);
  cfg.lemniscate.measured_periods = 1;
  PdController pd(cfg.sim.vehicle);
  const RunResult r = run_scenario(pd, cfg);
  ASSERT_FALSE(r.crashed);
  const double duration = (cfg.lemniscate.warmup_periods + 1) * cfg.lemniscate.period;
  EXPECT_EQ(r.samples.size(), static_cast<size_t>(std::lround(duration * cfg.control_rate)) + 1);

  const auto path = temp_file("lemniscate.csv");
  write_timeseries_csv(path, r);
  const CsvTable t = read_csv(path);
  const auto time = t.numbers("t_s");
  const auto x = t.numbers("x_m"), y = t.numbers("y_m"), z = t.numbers("z_m");
  double sum = 0.0;
  int n = 0;
  for (size_t i = 0; i < time.size(); ++i) {
    if (time[i] < cfg.lemniscate.period - 1e-9) continue;
    const Vec3 ref = lemniscate_reference(time[i], cfg.lemniscate.period);
    sum += (Vec3(x[i], y[i], z[i]) - ref).norm();
    ++n;
  }
  EXPECT_NEAR(sum / n, r.metric("mean_error_m"), 1e-6);
  EXPECT_LT(r.metric("mean_error_m"), 0.1);
  std::filesystem::remove(path);
}

TEST(Scenario, PayloadThrustToWeight) {
  ScenarioConfig cfg = config_for(ScenarioKind::payload_circle);
  cfg.payload.laps = 1;
  PdController pd(cfg.sim.vehicle);
  const RunResult r = run_scenario(pd, cfg);
  const double m = cfg.sim.vehicle.mass + cfg.payload.mass;
  EXPECT_NEAR(r.metric("thrust_to_weight"), 4.0 * cfg.sim.vehicle.max_thrust() / (m * cfg.sim.vehicle.gravity), 1e-12);
  EXPECT_FALSE(r.crashed);

  cfg.payload.mass = 3.0;
  const RunResult heavy = run_scenario(pd, cfg);
  EXPECT_TRUE(heavy.crashed);
  EXPECT_FALSE(heavy.success);
}

TEST(Scenario, DisturbanceRecoversAndZeroPushIsQuiet) {
  ScenarioConfig cfg = config_for(ScenarioKind::hover_disturbance);
  PdController pd(cfg.sim.vehicle);
  const RunResult r = run_scenario(pd, cfg);
  EXPECT_TRUE(r.success);
  EXPECT_GE(r.metric("recovery_time_s_0"), 0.0);
  const double pushed = r.metric("peak_yaw_rate_rad_s");

  cfg.disturbance.impulses[0].force = Vec3::Zero();
  const RunResult quiet = run_scenario(pd, cfg);
  EXPECT_LT(quiet.metric("peak_yaw_rate_rad_s"), 0.01 * pushed);
  EXPECT_EQ(quiet.metric("recovery_time_s_0"), 0.0);
}

TEST(Scenario, WideGapIsContactFree) {
  ScenarioConfig cfg = config_for(ScenarioKind::narrow_gap);
  cfg.gap.width = 1.2;
  PdController pd(cfg.sim.vehicle);
  const RunResult r = run_scenario(pd, cfg);
  EXPECT_TRUE(r.success);
  EXPECT_EQ(r.metric("peak_contact_N"), 0.0);
  EXPECT_NEAR(r.metric("cross_time_s"), -cfg.gap.start_x / cfg.gap.approach_speed, 0.5);
}

TEST(Scenario, NarrowGapCompliantPassesRigidDoesNot) {
  ScenarioConfig cfg = config_for(ScenarioKind::narrow_gap);
  PdController pd(cfg.sim.vehicle);
  const RunResult soft = run_scenario(pd, cfg);
  EXPECT_TRUE(soft.success) << soft.message;
  EXPECT_GT(soft.metric("peak_contact_N"), 0.0);
  EXPECT_GT(soft.metric("max_beta_lat_deg"), 1.0);
  cfg.sim.compliant = false;
  const RunResult rigid = run_scenario(pd, cfg);
  EXPECT_FALSE(rigid.success);
  EXPECT_EQ(rigid.metric("max_beta_lat_deg"), 0.0);
}

TEST(Scenario, DropSuiteRowsAndCsv) {
  const RunResult r = run_drop_suite(config_for(ScenarioKind::drop_suite));
  ASSERT_EQ(r.drops.size(), 6u);
  EXPECT_TRUE(r.success);
  for (size_t i = 0; i < 6; i += 2) {
    EXPECT_EQ(r.drops[i].config, "compliant");
    EXPECT_EQ(r.drops[i + 1].config, "rigid");
    EXPECT_EQ(r.drops[i].height, r.drops[i + 1].height);
    EXPECT_DOUBLE_EQ(r.metric("peak_ratio_" + format_number(r.drops[i].height)),
                     r.drops[i].event.peak_force / r.drops[i + 1].event.peak_force);
  }
  const auto path = temp_file("drop.csv");
  write_drop_csv(path, r.drops);
  const CsvTable t = read_csv(path);
  ASSERT_EQ(t.rows.size(), 6u);
  const auto peaks = t.numbers("peak_N");
  for (size_t i = 0; i < 6; ++i) EXPECT_NEAR(peaks[i], r.drops[i].event.peak_force, 1e-8 * peaks[i]);
  std::filesystem::remove(path);
}

TEST(Scenario, RejectsBadConfigAndMissingMetric) {
  ScenarioConfig cfg = config_for(ScenarioKind::lemniscate);
  cfg.lemniscate.period = -1.0;
  EXPECT_THROW(cfg.validate(), ContractError);
  cfg = config_for(ScenarioKind::narrow_gap);
  cfg.gap.width = 0.0;
  PdController pd(cfg.sim.vehicle);
  EXPECT_THROW(run_scenario(pd, cfg), ContractError);
  RunResult r;
  EXPECT_THROW(r.metric("nope"), ContractError);
}
