#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "holoarm/cli.hpp"
#include "holoarm/config.hpp"
#include "holoarm/io.hpp"

using namespace holoarm;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path d = fs::temp_directory_path() / ("holoarm_cli_" + name);
  fs::remove_all(d);
  return d;
}

int run(std::vector<std::string> args, std::string* err_text = nullptr) {
  args.insert(args.begin(), "holoarm");
  std::ostringstream out, err;
  const int code = cli_run(args, out, err);
  if (err_text) *err_text = err.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST(Config, EmptyTextGivesDefaults) {
  const ExperimentConfig c = parse_config("# nothing here\n\n");
  EXPECT_DOUBLE_EQ(c.vehicle.mass, 0.970);
  EXPECT_DOUBLE_EQ(c.vehicle.motor_time_constant, 0.04);
  EXPECT_EQ(c.seed, 1u);
  EXPECT_TRUE(c.compliant);
  EXPECT_EQ(lines_of(resolved_echo(c)).size(), config_keys().size());
}

TEST(Config, OverrideChangesExactlyOneEchoLine) {
  const auto base = lines_of(resolved_echo(parse_config("")));
  const auto changed = lines_of(resolved_echo(parse_config("contact.mu = 0.7  # friction\n")));
  ASSERT_EQ(base.size(), changed.size());
  int diffs = 0;
  for (size_t i = 0; i < base.size(); ++i) {
    if (base[i] != changed[i]) {
      ++diffs;
      EXPECT_EQ(changed[i], "contact.mu = 0.7");
    }
  }
  EXPECT_EQ(diffs, 1);
  EXPECT_NE(config_hash(parse_config("")), config_hash(parse_config("contact.mu = 0.7")));
}

TEST(Config, EchoReparsesToSameHash) {
  const ExperimentConfig c = parse_config("mass = 1.1\narm.bend_limit_deg = 25\ndrop.heights = 0.5,2\n");
  EXPECT_EQ(config_hash(parse_config(resolved_echo(c))), config_hash(c));
  EXPECT_EQ(config_hash(c), sha256_hex(resolved_echo(c)));
}

TEST(Config, ErrorsNameTheKeyOrLine) {
  try {
    parse_config("mass = -1\n");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.key(), "mass");
  }
  try {
    parse_config("# header\nsim.dt = 0.001\nwingspan = 3\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(parse_config("mass 1.0\n"), ParseError);
  EXPECT_THROW(parse_config("mass = 1.0\nmass = 1.1\n"), ParseError);
  EXPECT_THROW(parse_config("train.num_envs = 2.5\n"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/holoarm.cfg"), IoError);
}

TEST(Sha256, KnownDigest) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Csv, ParsesAndRejectsRaggedRows) {
  const CsvTable t = parse_csv("a,b\n1,2\n3,4\n");
  EXPECT_EQ(t.numbers("b"), (std::vector<double>{2.0, 4.0}));
  EXPECT_THROW(t.column("c"), ContractError);
  try {
    parse_csv("a,b\n1,2\n3\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3);
  }
  EXPECT_THROW(parse_csv("a\nx\n").numbers("a"), ParseError);
}

TEST(Svg, DeterministicAndRejectsEmpty) {
  Plot p;
  p.title = "error";
  p.series.push_back({"run", {0.0, 1.0, 2.0}, {0.1, 0.3, 0.2}, false});
  const std::string a = render_svg(p), b = render_svg(p);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.rfind("<svg", 0), 0u);
  EXPECT_NE(a.find("</svg>"), std::string::npos);
  EXPECT_NE(a.find("run"), std::string::npos);
  Plot empty;
  EXPECT_THROW(render_svg(empty), ContractError);
}

TEST(Manifest, RoundTrip) {
  ExperimentManifest m;
  m.config_hash = sha256_hex("x");
  m.seed = 42;
  m.subcommand = "drop";
  m.arguments = {"--heights", "1,2"};
  m.scenarios = {"drop_suite"};
  m.output_dir = "out";
  m.started = utc_timestamp();
  m.finished = m.started;
  m.resolved_config = "seed = 42\n";
  m.outputs = {"drop_summary.csv"};
  const fs::path dir = fresh_dir("manifest");
  write_manifest(dir, m);
  const ExperimentManifest back = read_manifest(dir / "manifest.json");
  EXPECT_EQ(manifest_json(back), manifest_json(m));
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.arguments, m.arguments);
  fs::remove_all(dir);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run({}), kExitContract);
  EXPECT_EQ(run({"--help"}), kExitOk);
  EXPECT_EQ(run({"--bogus", "drop"}), kExitContract);
  EXPECT_EQ(run({"drop", "--heights", "abc"}), kExitContract);
  const fs::path d = fresh_dir("codes");
  EXPECT_EQ(run({"--out", d.string(), "--config", "/nonexistent/x.cfg", "drop"}), kExitIo);
  EXPECT_EQ(run({"--out", d.string(), "--set", "mass=-1", "drop"}), kExitContract);
  EXPECT_EQ(run({"--out", d.string(), "eval", "--policy", "/nonexistent/policy.txt"}), kExitIo);
  EXPECT_EQ(run({"--out", fresh_dir("empty_report").string(), "report"}), kExitIo);
  fs::remove_all(d);
}

TEST(Cli, SeedPrecedence) {
  const fs::path d = fresh_dir("seed");
  fs::create_directories(d);
  std::ofstream(d / "c.cfg") << "seed = 9\n";
  const std::string cfg = (d / "c.cfg").string();
  auto seed_of = [&](std::vector<std::string> args) {
    EXPECT_EQ(run(args), kExitOk);
    return read_manifest(d / "manifest.json").seed;
  };
  ::unsetenv("HOLOARM_SEED");
  EXPECT_EQ(seed_of({"--out", d.string(), "--no-plots", "drop", "--heights", "0.2"}), 1u);
  EXPECT_EQ(seed_of({"--out", d.string(), "--no-plots", "--config", cfg, "drop", "--heights", "0.2"}), 9u);
  ::setenv("HOLOARM_SEED", "17", 1);
  EXPECT_EQ(seed_of({"--out", d.string(), "--no-plots", "--config", cfg, "drop", "--heights", "0.2"}), 17u);
  EXPECT_EQ(seed_of({"--out", d.string(), "--no-plots", "--seed", "5", "drop", "--heights", "0.2"}), 5u);
  ::unsetenv("HOLOARM_SEED");
  fs::remove_all(d);
}

TEST(Cli, FitFromTraceFile) {
  const fs::path d = fresh_dir("fit");
  fs::create_directories(d);
  const RecoveryTrace tr = simulate_release(ArmParams{}, Channel::lateral, 32.0, 3.0);
  write_trace(d / "trace.csv", tr);
  ASSERT_EQ(run({"--out", d.string(), "fit", "--trace", (d / "trace.csv").string(), "--channel", "lateral"}), kExitOk);
  const CsvTable t = read_csv(d / "fit.csv");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_NEAR(t.numbers("achieved_time_s")[0], t.numbers("target_time_s")[0], 0.1 * t.numbers("target_time_s")[0]);
  EXPECT_NEAR(t.numbers("target_time_s")[0], 0.72, 0.072);
  EXPECT_TRUE(fs::exists(d / "fit.cfg"));
  EXPECT_TRUE(fs::exists(d / "fit_lateral.svg"));
  EXPECT_TRUE(fs::exists(d / "manifest.json"));
  EXPECT_NO_THROW(parse_config(slurp(d / "fit.cfg")));
  fs::remove_all(d);
}

TEST(Cli, DropSuiteAndReport) {
  const fs::path d = fresh_dir("suite");
  ASSERT_EQ(run({"--out", d.string(), "scenario", "--kind", "drop_suite"}), kExitOk);
  const CsvTable t = read_csv(d / "drop_summary.csv");
  EXPECT_EQ(t.header, (std::vector<std::string>{"config", "height_m", "peak_N", "duration_s", "impulse_Ns", "broke"}));
  EXPECT_EQ(t.rows.size(), 6u);
  const std::string echo = slurp(d / "resolved_config.txt");
  EXPECT_EQ(read_manifest(d / "manifest.json").config_hash, sha256_hex(echo));
  ASSERT_EQ(run({"--out", d.string(), "report"}), kExitOk);
  EXPECT_TRUE(fs::exists(d / "report_summary.csv"));
  EXPECT_TRUE(fs::exists(d / "report_manifest.json"));
  fs::remove_all(d);
}
