#include "holoarm/cli.hpp"

#include <charconv>
#include <cstdlib>
#include <iostream>
#include <map>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "holoarm/config.hpp"
#include "holoarm/io.hpp"

namespace holoarm {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out = "holoarm_out";
  std::vector<std::string> overrides;

  // fit
  std::string trace;
  std::string channel;
  std::optional<double> peak;
  std::optional<double> time;
  std::optional<double> threshold;
  bool defaults = false;
  // train / eval / scenario
  std::optional<long> steps;
  std::string policy;
  std::optional<int> episodes;
  std::optional<double> offset;
  std::string kind = "all";
  bool rigid = false;
  bool no_plots = false;
  // drop
  std::vector<double> heights;
};

struct Run {
  std::ostream& out;
  std::ostream& err;
  Options opt;
  ExperimentConfig cfg;
  fs::path dir;
  ExperimentManifest manifest;

  fs::path file(const std::string& name) {
    manifest.outputs.push_back(name);
    return dir / name;
  }
};

std::string arm_suffix(Channel c) {
  switch (c) {
    case Channel::lateral: return "lat";
    case Channel::up: return "up";
    case Channel::down: return "down";
    case Channel::axial: return "ax";
  }
  return "";
}

std::uint64_t parse_seed(const std::string& text, const std::string& source) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc() || ptr != text.data() + text.size()) {
    throw ContractError(source + ": expected a non-negative integer seed, got '" + text + "'");
  }
  return v;
}

ExperimentConfig resolve_config(const Options& opt) {
  ExperimentConfig cfg = opt.config.empty() ? ExperimentConfig{} : load_config(opt.config);
  for (const std::string& kv : opt.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ContractError("--set expects key=value, got '" + kv + "'");
    auto strip = [](std::string s) {
      s.erase(0, s.find_first_not_of(' '));
      s.erase(s.find_last_not_of(' ') + 1);
      return s;
    };
    const std::string key = strip(kv.substr(0, eq));
    const auto keys = config_keys();
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) throw ConfigError(key, "unknown key");
    set_config_value(cfg, key, strip(kv.substr(eq + 1)));
  }
  if (opt.seed) {
    cfg.seed = *opt.seed;
  } else if (const char* env = std::getenv("HOLOARM_SEED")) {
    cfg.seed = parse_seed(env, "HOLOARM_SEED");
  }
  cfg.validate();
  return cfg;
}

std::unique_ptr<FlightController> make_controller(const Run& run) {
  if (run.opt.policy.empty()) return std::make_unique<PdController>(run.cfg.vehicle);
  return std::make_unique<PolicyController>(load_policy(run.opt.policy), true, run.cfg.vehicle);
}

std::string controller_name(const Run& run) { return run.opt.policy.empty() ? "pd" : "policy"; }

// ---------------------------------------------------------------------------

void cmd_fit(Run& run) {
  const Options& o = run.opt;
  std::vector<FitTarget> targets;
  std::map<Channel, RecoveryTrace> measured;
  if (o.defaults) {
    require(o.trace.empty() && !o.peak && !o.time, "fit: --defaults cannot be combined with a target");
    targets = measured_recovery_targets();
  } else {
    require(!o.channel.empty(), "fit: --channel is required unless --defaults is given");
    const Channel ch = parse_channel(o.channel);
    if (!o.trace.empty()) {
      require(!o.peak && !o.time, "fit: give either --trace or --peak/--time");
      RecoveryTrace tr = load_trace(o.trace, ch);
      tr.validate();
      double peak = 0.0;
      for (double v : tr.values) peak = std::max(peak, std::abs(v));
      const double thr = o.threshold.value_or(default_threshold(ch, peak));
      const auto rt = recovery_time(tr, thr);
      if (!rt) throw ContractError(fmt::format("fit: trace never settles within {} of rest", thr));
      targets.push_back({peak, *rt, ch});
      measured[ch] = std::move(tr);
    } else {
      require(o.peak && o.time, "fit: needs --trace, both --peak and --time, or --defaults");
      targets.push_back({*o.peak, *o.time, ch});
    }
  }

  ArmParams arm = run.cfg.arm;
  std::string table = "channel,peak,target_time_s,k,c,omega_rad_s,zeta,achieved_time_s\n";
  std::string cfg_text;
  for (const FitTarget& t : targets) {
    FitResult r;
    try {
      r = fit_arm_params(t, run.cfg.arm);
    } catch (const FitInfeasible& e) {
      throw ContractError(std::string("fit: ") + e.what());
    }
    set_channel(arm, t.channel, r.k, r.c);
    table += fmt::format("{},{},{},{},{},{},{},{}\n", to_string(t.channel), format_number(t.peak_deflection),
                         format_number(t.recovery_time), format_number(r.k), format_number(r.c),
                         format_number(r.omega), format_number(r.zeta), format_number(r.achieved_time));
    const std::string s = arm_suffix(t.channel);
    cfg_text += fmt::format("arm.k_{} = {}\narm.c_{} = {}\n", s, fmt::format("{:.11g}", r.k), s,
                            fmt::format("{:.11g}", r.c));
    run.out << fmt::format("{:<8} peak {:>6} target {:.3f} s  k {:.6g}  c {:.6g}  achieved {:.3f} s\n",
                           to_string(t.channel), format_number(t.peak_deflection), t.recovery_time, r.k, r.c,
                           r.achieved_time);

    const std::string name = std::string(to_string(t.channel));
    const double duration = std::max(2.0, 3.0 * t.recovery_time);
    const RecoveryTrace sim = simulate_release(arm, t.channel, t.peak_deflection, duration, 1e-3, 5);
    write_trace(run.file("fit_" + name + ".csv"), sim);
    if (!o.no_plots) {
      Plot p = recovery_plot(sim, default_threshold(t.channel, t.peak_deflection));
      p.series[0].label = "fitted";
      if (auto it = measured.find(t.channel); it != measured.end()) {
        p.series.push_back({"measured", it->second.timestamps, it->second.values, true});
      }
      emit_plot(run.file("fit_" + name + ".svg"), p);
    }
  }
  write_text(run.file("fit.csv"), table);
  write_text(run.file("fit.cfg"), cfg_text);
  run.out << cfg_text;
}

void cmd_train(Run& run) {
  PpoConfig ppo = run.cfg.ppo();
  if (run.opt.steps) {
    require(*run.opt.steps >= 0, "train: --steps must be >= 0");
    ppo.total_steps = *run.opt.steps;
  }
  std::string log = "iter,steps,mean_return,eval_err_m\n";
  const TrainResult result = train(ppo, [&](const TrainLogRow& row) {
    log += fmt::format("{},{},{},{}\n", row.iter, row.steps, format_number(row.mean_return),
                       format_number(row.eval_err_m));
    if (ppo.eval_every > 0 && row.iter % ppo.eval_every == 0) {
      run.out << fmt::format("iter {:>5}  steps {:>9}  eval error {:.4f} m\n", row.iter, row.steps, row.eval_err_m);
    }
  });
  write_text(run.file("train_log.csv"), log);
  if (result.diverged) throw NumericalError("train: " + result.message);
  save_policy(run.file("policy.txt"), result.policy);

  PolicyController controller(result.policy, true, run.cfg.vehicle);
  const EvalMetrics m = evaluate(controller, run.cfg.env(), run.cfg.eval.episodes, run.cfg.eval.seed,
                                 run.cfg.eval.offset);
  write_text(run.file("eval.csv"),
             fmt::format("controller,episodes,mean_error_m,max_error_m,success_rate,crash_rate\npolicy,{},{},{},{},{}\n",
                         m.episodes, format_number(m.mean_error), format_number(m.max_error),
                         format_number(m.success_rate), format_number(m.crash_rate)));
  run.out << fmt::format("policy: mean error {:.4f} m over {} episodes, crash rate {:.2f}\n", m.mean_error,
                         m.episodes, m.crash_rate);
}

void cmd_eval(Run& run) {
  const int episodes = run.opt.episodes.value_or(run.cfg.eval.episodes);
  const double offset = run.opt.offset.value_or(run.cfg.eval.offset);
  require(episodes >= 1, "eval: --episodes must be >= 1");
  require(offset >= 0.0, "eval: --offset must be >= 0");
  auto controller = make_controller(run);
  const EvalMetrics m = evaluate(*controller, run.cfg.env(), episodes, run.cfg.eval.seed, offset);
  write_text(run.file("eval.csv"),
             fmt::format("controller,episodes,mean_error_m,max_error_m,success_rate,crash_rate\n{},{},{},{},{},{}\n",
                         controller_name(run), m.episodes, format_number(m.mean_error), format_number(m.max_error),
                         format_number(m.success_rate), format_number(m.crash_rate)));
  run.out << fmt::format("{}: mean error {:.4f} m, max {:.4f} m, success {:.2f}, crash {:.2f}\n",
                         controller_name(run), m.mean_error, m.max_error, m.success_rate, m.crash_rate);
}

void cmd_scenario(Run& run) {
  std::vector<ScenarioKind> kinds;
  if (run.opt.kind == "all") {
    kinds = all_scenario_kinds();
  } else {
    kinds.push_back(parse_scenario_kind(run.opt.kind));
  }
  std::string summary = "scenario,controller,compliant,success,crashed,saturated,mean_error_m,max_error_m,message\n";
  bool flight = false;
  for (ScenarioKind kind : kinds) {
    ScenarioConfig sc = run.cfg.scenario_config(kind);
    if (run.opt.rigid) sc.sim.compliant = false;
    const std::string name = to_string(kind);
    run.manifest.scenarios.push_back(name);
    if (kind == ScenarioKind::drop_suite) {
      const RunResult r = run_drop_suite(sc);
      write_drop_csv(run.file("drop_summary.csv"), r.drops);
      write_metrics_csv(run.file(name + "_metrics.csv"), r);
      run.out << fmt::format("{:<18} {}\n", name, r.success ? "compliant below rigid" : "trend violated");
      continue;
    }
    flight = true;
    auto controller = make_controller(run);
    const RunResult r = run_scenario(*controller, sc);
    write_timeseries_csv(run.file(name + ".csv"), r);
    write_metrics_csv(run.file(name + "_metrics.csv"), r);
    if (!run.opt.no_plots && !r.samples.empty()) {
      emit_plot(run.file(name + "_overhead.svg"), overhead_plot(r));
      emit_plot(run.file(name + "_error.svg"), error_plot(r));
      emit_plot(run.file(name + "_force.svg"), force_plot(r));
    }
    std::string message = r.message;
    std::replace(message.begin(), message.end(), ',', ';');
    summary += fmt::format("{},{},{},{},{},{},{},{},{}\n", name, controller_name(run), sc.sim.compliant ? 1 : 0,
                           r.success ? 1 : 0, r.crashed ? 1 : 0, r.saturated ? 1 : 0,
                           format_number(r.metric("mean_error_m")), format_number(r.metric("max_error_m")),
                           message);
    run.out << fmt::format("{:<18} {}  mean error {:.4f} m{}\n", name, r.success ? "ok    " : "FAILED",
                           r.metric("mean_error_m"), message.empty() ? "" : "  (" + message + ")");
  }
  if (flight) write_text(run.file("summary.csv"), summary);
}

void cmd_drop(Run& run) {
  ScenarioConfig sc = run.cfg.scenario_config(ScenarioKind::drop_suite);
  if (!run.opt.heights.empty()) sc.drop_heights = run.opt.heights;
  sc.validate();
  run.manifest.scenarios.push_back("drop_suite");
  std::vector<DropRow> rows;
  for (double h : sc.drop_heights) {
    Plot p;
    p.kind = PlotKind::force_time;
    p.title = fmt::format("drop from {} m", format_number(h));
    p.x_label = "time since contact (s)";
    for (bool compliant : {true, false}) {
      DropConfig d = sc.drop;
      d.height = h;
      d.compliant = compliant;
      std::vector<std::array<double, 2>> trace;
      const ImpactEvent e = drop_test(d, &trace);
      rows.push_back({compliant ? "compliant" : "rigid", h, e});
      Series s{compliant ? "compliant" : "rigid", {}, {}, !compliant};
      for (const auto& [t, f] : trace) {
        s.x.push_back(t);
        s.y.push_back(f);
      }
      p.series.push_back(std::move(s));
      run.out << fmt::format("h {:>4} m  {:<9}  peak {:8.2f} N  duration {:.4f} s\n", format_number(h),
                             compliant ? "compliant" : "rigid", e.peak_force, e.contact_duration);
    }
    if (!run.opt.no_plots) emit_plot(run.file(fmt::format("drop_force_{}m.svg", format_number(h))), p);
  }
  write_drop_csv(run.file("drop_summary.csv"), rows);
}

RunResult result_from_csv(ScenarioKind kind, const CsvTable& t) {
  RunResult r;
  r.kind = kind;
  const auto time = t.numbers("t_s");
  const auto x = t.numbers("x_m"), y = t.numbers("y_m"), z = t.numbers("z_m");
  const auto rx = t.numbers("ref_x_m"), ry = t.numbers("ref_y_m"), rz = t.numbers("ref_z_m");
  const auto err = t.numbers("error_m");
  const auto force = t.numbers("contact_N");
  for (size_t i = 0; i < time.size(); ++i) {
    Sample s;
    s.t = time[i];
    s.position = Vec3(x[i], y[i], z[i]);
    s.reference = Vec3(rx[i], ry[i], rz[i]);
    s.error = err[i];
    s.contact_force = force[i];
    r.samples.push_back(s);
  }
  return r;
}

void cmd_report(Run& run) {
  require(fs::is_directory(run.dir), "report: no such directory " + run.dir.string());
  std::string table = "name,samples,mean_error_m,max_error_m,peak_force_N\n";
  int found = 0;
  for (ScenarioKind kind : all_scenario_kinds()) {
    const std::string name = to_string(kind);
    const fs::path csv = run.dir / (name + ".csv");
    if (kind == ScenarioKind::drop_suite || !fs::exists(csv)) continue;
    const RunResult r = result_from_csv(kind, read_csv(csv));
    if (r.samples.empty()) continue;
    ++found;
    double sum = 0.0, worst = 0.0, peak = 0.0;
    for (const Sample& s : r.samples) {
      sum += s.error;
      worst = std::max(worst, s.error);
      peak = std::max(peak, s.contact_force);
    }
    table += fmt::format("{},{},{},{},{}\n", name, r.samples.size(), format_number(sum / r.samples.size()),
                         format_number(worst), format_number(peak));
    run.manifest.scenarios.push_back(name);
    if (!run.opt.no_plots) {
      emit_plot(run.file(name + "_overhead.svg"), overhead_plot(r));
      emit_plot(run.file(name + "_error.svg"), error_plot(r));
      emit_plot(run.file(name + "_force.svg"), force_plot(r));
    }
  }
  if (const fs::path drops = run.dir / "drop_summary.csv"; fs::exists(drops)) {
    const CsvTable t = read_csv(drops);
    const auto h = t.numbers("height_m"), peak = t.numbers("peak_N");
    const int cfg_col = t.column("config");
    Series comp{"compliant", {}, {}, false}, rigid{"rigid", {}, {}, true};
    for (size_t i = 0; i < t.rows.size(); ++i) {
      Series& s = t.rows[i][cfg_col] == "rigid" ? rigid : comp;
      s.x.push_back(h[i]);
      s.y.push_back(peak[i]);
      table += fmt::format("drop_{}_{}m,1,,,{}\n", t.rows[i][cfg_col], format_number(h[i]), format_number(peak[i]));
    }
    ++found;
    run.manifest.scenarios.push_back("drop_suite");
    if (!run.opt.no_plots) {
      Plot p;
      p.kind = PlotKind::force_time;
      p.title = "drop peak force";
      p.x_label = "drop height (m)";
      p.y_label = "peak force (N)";
      p.series = {comp, rigid};
      emit_plot(run.file("drop_peaks.svg"), p);
    }
  }
  for (Channel ch : {Channel::lateral, Channel::up, Channel::down, Channel::axial}) {
    const fs::path trace = run.dir / ("fit_" + std::string(to_string(ch)) + ".csv");
    if (!fs::exists(trace)) continue;
    const RecoveryTrace tr = load_trace(trace, ch);
    double peak = 0.0;
    for (double v : tr.values) peak = std::max(peak, std::abs(v));
    ++found;
    if (!run.opt.no_plots) {
      emit_plot(run.file("fit_" + std::string(to_string(ch)) + ".svg"),
                recovery_plot(tr, default_threshold(ch, peak)));
    }
  }
  if (found == 0) throw IoError("report: no results found in " + run.dir.string());
  write_text(run.file("report_summary.csv"), table);
  run.out << fmt::format("report: {} result sets summarised in {}\n", found, (run.dir / "report_summary.csv").string());
}

void add_globals(CLI::App& app, Options& o) {
  app.add_option("--seed", o.seed, "Random seed (falls back to HOLOARM_SEED, then the config)");
  app.add_option("--config", o.config, "key = value configuration file");
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_option("--set", o.overrides, "Override one config key, key=value (repeatable)");
  app.add_flag("--no-plots", o.no_plots, "Skip SVG output");
}

}  // namespace

int cli_run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Compliant-arm quadrotor simulator, trainer and experiment runner", "holoarm"};
  app.fallthrough();
  Options o;
  add_globals(app, o);

  auto* fit = app.add_subcommand("fit", "Fit arm stiffness and damping to release recoveries");
  fit->add_option("--trace", o.trace, "Recovery trace CSV (t_s,value)");
  fit->add_option("--channel", o.channel, "lateral, up, down or axial");
  fit->add_option("--peak", o.peak, "Release deflection (deg, or mm for axial)");
  fit->add_option("--time", o.time, "Recovery time to match (s)");
  fit->add_option("--threshold", o.threshold, "Recovered band for --trace (deg or mm)");
  fit->add_flag("--defaults", o.defaults, "Refit all four channels to the built-in measurements");

  auto* tr = app.add_subcommand("train", "Train the hover policy");
  tr->add_option("--steps", o.steps, "Environment steps (overrides train.total_steps)");

  auto* ev = app.add_subcommand("eval", "Evaluate a controller on randomized hover episodes");
  ev->add_option("--policy", o.policy, "Policy checkpoint; the PD baseline when omitted");
  ev->add_option("--episodes", o.episodes, "Episode count (overrides eval.episodes)");
  ev->add_option("--offset", o.offset, "Initial offset radius in m (overrides eval.offset)");

  auto* sc = app.add_subcommand("scenario", "Run one scenario or all of them");
  sc->add_option("--kind", o.kind, "hover_disturbance, lemniscate, payload_circle, narrow_gap, drop_suite or all")
      ->capture_default_str();
  sc->add_option("--policy", o.policy, "Policy checkpoint; the PD baseline when omitted");
  sc->add_flag("--rigid", o.rigid, "Lock the arms");

  auto* dr = app.add_subcommand("drop", "Drop compliant and rigid airframes onto the ground");
  dr->add_option("--heights", o.heights, "Drop heights in m")->delimiter(',');

  auto* rp = app.add_subcommand("report", "Summary CSV and plots from the results in --out");
  app.require_subcommand(1);

  if (args.size() <= 1) {
    err << app.help();
    return kExitContract;
  }
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitContract;
  }

  CLI::App* sub = app.get_subcommands().front();
  try {
    Run run{out, err, o, resolve_config(o), fs::path(o.out), {}};
    std::error_code ec;
    fs::create_directories(run.dir, ec);
    if (ec || !fs::is_directory(run.dir)) throw IoError("cannot create output directory " + run.dir.string());
    run.manifest.seed = run.cfg.seed;
    run.manifest.subcommand = sub->get_name();
    run.manifest.arguments.assign(args.begin() + 1, args.end());
    run.manifest.output_dir = run.dir.string();
    run.manifest.resolved_config = resolved_echo(run.cfg);
    run.manifest.config_hash = config_hash(run.cfg);
    run.manifest.started = utc_timestamp();

    if (sub == fit) cmd_fit(run);
    else if (sub == tr) cmd_train(run);
    else if (sub == ev) cmd_eval(run);
    else if (sub == sc) cmd_scenario(run);
    else if (sub == dr) cmd_drop(run);
    else if (sub == rp) cmd_report(run);

    run.manifest.finished = utc_timestamp();
    if (sub == rp) {
      write_manifest(run.dir, run.manifest, "report_manifest.json");
    } else {
      write_text(run.dir / "resolved_config.txt", run.manifest.resolved_config);
      write_manifest(run.dir, run.manifest);
    }
    return kExitOk;
  } catch (const IoError& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    err << "I/O error: " << e.what() << '\n';
    return kExitIo;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitContract;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kExitContract;
  } catch (const ContractError& e) {
    err << "error: " << e.what() << '\n';
    return kExitContract;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitContract;
  }
}

int cli_run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return cli_run(args, std::cout, std::cerr);
}

}  // namespace holoarm
