#include <iostream>

#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "holoarm/cli.hpp"
#include "holoarm/config.hpp"
#include "holoarm/io.hpp"

namespace py = pybind11;
using namespace holoarm;

namespace {

ExperimentConfig config_from(const std::map<std::string, std::string>& overrides) {
  ExperimentConfig cfg;
  for (const auto& [k, v] : overrides) set_config_value(cfg, k, v);
  cfg.validate();
  return cfg;
}

py::dict metrics_dict(const RunResult& r) {
  py::dict d;
  for (const auto& [k, v] : r.metrics) d[py::str(k)] = v;
  return d;
}

py::dict event_dict(const ImpactEvent& e) {
  py::dict d;
  d["peak_force"] = e.peak_force;
  d["contact_duration"] = e.contact_duration;
  d["impulse"] = e.impulse;
  d["broke"] = e.broke;
  return d;
}

std::unique_ptr<FlightController> controller_for(const std::optional<std::string>& policy,
                                                 const VehicleParams& vehicle) {
  if (!policy) return std::make_unique<PdController>(vehicle);
  return std::make_unique<PolicyController>(load_policy(*policy), true, vehicle);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Compliant-arm quadrotor simulation core";
  m.attr("__version__") = kVersion;

  py::register_exception<ContractError>(m, "ContractError", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<VehicleParams>(m, "VehicleParams")
      .def(py::init<>())
      .def_readwrite("mass", &VehicleParams::mass)
      .def_readwrite("motor_time_constant", &VehicleParams::motor_time_constant)
      .def_readwrite("thrust_coeffs", &VehicleParams::thrust_coeffs)
      .def_readwrite("inertia_diag", &VehicleParams::inertia_diag)
      .def_readwrite("yaw_torque_coeff", &VehicleParams::yaw_torque_coeff)
      .def_readwrite("gravity", &VehicleParams::gravity)
      .def("max_thrust", &VehicleParams::max_thrust);

  py::class_<ArmParams>(m, "ArmParams")
      .def(py::init<>())
      .def_readwrite("k_lat", &ArmParams::k_lat)
      .def_readwrite("c_lat", &ArmParams::c_lat)
      .def_readwrite("k_up", &ArmParams::k_up)
      .def_readwrite("c_up", &ArmParams::c_up)
      .def_readwrite("k_down", &ArmParams::k_down)
      .def_readwrite("c_down", &ArmParams::c_down)
      .def_readwrite("k_ax", &ArmParams::k_ax)
      .def_readwrite("c_ax", &ArmParams::c_ax)
      .def_readwrite("inertia_eff", &ArmParams::inertia_eff)
      .def_readwrite("mass_eff", &ArmParams::mass_eff);

  m.def("motor_thrust", [](double cmd) { return motor_thrust(cmd, VehicleParams{}); }, py::arg("command"));
  m.def("hover_command", [](const VehicleParams& v) { return hover_command(v); },
        py::arg("vehicle") = VehicleParams{});

  m.def(
      "simulate",
      [](const std::vector<std::array<double, 4>>& commands, double dt, bool compliant, std::array<double, 3> start) {
        SimConfig cfg;
        cfg.dt = dt;
        cfg.compliant = compliant;
        SimState init;
        init.body.position = Vec3(start[0], start[1], start[2]);
        VehicleSim sim(cfg, init);
        std::vector<std::array<double, 11>> out;
        for (const auto& c : commands) {
          sim.step(c);
          const SimState& s = sim.state();
          out.push_back({s.time, s.body.position.x(), s.body.position.y(), s.body.position.z(),
                         s.body.velocity.x(), s.body.velocity.y(), s.body.velocity.z(), s.body.attitude.w(),
                         s.body.attitude.x(), s.body.attitude.y(), s.body.attitude.z()});
        }
        return out;
      },
      py::arg("commands"), py::arg("dt") = 2.5e-3, py::arg("compliant") = true,
      py::arg("start") = std::array<double, 3>{0.0, 0.0, 1.0},
      "Steps the vehicle with one motor command row per step. Rows: t, position, velocity, quaternion wxyz.");

  m.def(
      "fit_arm",
      [](const std::string& channel, double peak, double recovery) {
        const FitResult r = fit_arm_params({peak, recovery, parse_channel(channel)}, ArmParams{});
        py::dict d;
        d["k"] = r.k;
        d["c"] = r.c;
        d["omega"] = r.omega;
        d["zeta"] = r.zeta;
        d["achieved_time"] = r.achieved_time;
        return d;
      },
      py::arg("channel"), py::arg("peak"), py::arg("recovery_time"));

  m.def(
      "release_recovery",
      [](const std::string& channel, double peak, const std::optional<ArmParams>& params) {
        const Channel ch = parse_channel(channel);
        const RecoveryTrace tr = simulate_release(params.value_or(ArmParams{}), ch, peak, 5.0);
        return recovery_time(tr, default_threshold(ch, peak));
      },
      py::arg("channel"), py::arg("peak"), py::arg("params") = std::nullopt,
      "Recovery time (s) to the default band after releasing one arm DOF from `peak`.");

  m.def(
      "drop_test",
      [](double height, bool compliant) {
        DropConfig d;
        d.height = height;
        d.compliant = compliant;
        return event_dict(drop_test(d));
      },
      py::arg("height"), py::arg("compliant") = true);

  m.def(
      "run_scenario",
      [](const std::string& kind, const std::optional<std::string>& policy, bool rigid,
         const std::map<std::string, std::string>& overrides) {
        const ExperimentConfig cfg = config_from(overrides);
        ScenarioConfig sc = cfg.scenario_config(parse_scenario_kind(kind));
        if (rigid) sc.sim.compliant = false;
        auto controller = controller_for(policy, cfg.vehicle);
        RunResult r;
        {
          py::gil_scoped_release release;
          r = run_scenario(*controller, sc);
        }
        py::dict d;
        d["kind"] = to_string(r.kind);
        d["success"] = r.success;
        d["crashed"] = r.crashed;
        d["saturated"] = r.saturated;
        d["message"] = r.message;
        d["metrics"] = metrics_dict(r);
        std::vector<double> t, err;
        for (const Sample& s : r.samples) {
          t.push_back(s.t);
          err.push_back(s.error);
        }
        d["t"] = t;
        d["error"] = err;
        py::list drops;
        for (const DropRow& row : r.drops) {
          py::dict e = event_dict(row.event);
          e["config"] = row.config;
          e["height"] = row.height;
          drops.append(e);
        }
        d["drops"] = drops;
        return d;
      },
      py::arg("kind"), py::arg("policy") = std::nullopt, py::arg("rigid") = false,
      py::arg("overrides") = std::map<std::string, std::string>{});

  m.def(
      "evaluate",
      [](const std::optional<std::string>& policy, int episodes, std::uint64_t seed, double offset) {
        const ExperimentConfig cfg;
        auto controller = controller_for(policy, cfg.vehicle);
        EvalMetrics e;
        {
          py::gil_scoped_release release;
          e = evaluate(*controller, cfg.env(), episodes, seed, offset);
        }
        py::dict d;
        d["episodes"] = e.episodes;
        d["mean_error"] = e.mean_error;
        d["max_error"] = e.max_error;
        d["success_rate"] = e.success_rate;
        d["crash_rate"] = e.crash_rate;
        return d;
      },
      py::arg("policy") = std::nullopt, py::arg("episodes") = 20, py::arg("seed") = 777, py::arg("offset") = 0.3);

  m.def(
      "train",
      [](long steps, std::uint64_t seed, const std::optional<std::filesystem::path>& save_to,
         const std::map<std::string, std::string>& overrides) {
        ExperimentConfig cfg = config_from(overrides);
        cfg.seed = seed;
        PpoConfig ppo = cfg.ppo();
        ppo.total_steps = steps;
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(ppo);
        }
        if (save_to) save_policy(*save_to, r.policy);
        py::list log;
        for (const TrainLogRow& row : r.log) log.append(py::make_tuple(row.iter, row.steps, row.mean_return, row.eval_err_m));
        py::dict d;
        d["best_eval_err"] = r.best_eval_err;
        d["diverged"] = r.diverged;
        d["log"] = log;
        return d;
      },
      py::arg("steps"), py::arg("seed") = 1, py::arg("save_to") = std::nullopt,
      py::arg("overrides") = std::map<std::string, std::string>{});

  m.def("config_keys", &config_keys);
  m.def(
      "resolved_config",
      [](const std::string& text) { return resolved_echo(parse_config(text)); }, py::arg("text") = "");
  m.def(
      "config_hash", [](const std::string& text) { return config_hash(parse_config(text)); }, py::arg("text") = "");
  m.def(
      "cli",
      [](const std::vector<std::string>& args) {
        std::vector<std::string> full{"holoarm"};
        full.insert(full.end(), args.begin(), args.end());
        py::gil_scoped_release release;
        return cli_run(full, std::cout, std::cerr);
      },
      py::arg("args"), "Runs the command-line front end; returns the exit code.");
}
