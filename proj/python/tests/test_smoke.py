import json

import pytest

import holoarm


def test_version_and_keys():
    assert holoarm.__version__
    keys = holoarm.config_keys()
    assert "mass" in keys and "gap.width" in keys


def test_hover_command_balances_weight():
    v = holoarm.VehicleParams()
    u = holoarm.hover_command(v)
    assert 4 * holoarm.motor_thrust(u) == pytest.approx(v.mass * v.gravity, rel=1e-9)


def test_free_fall():
    dt = 2.5e-3
    rows = holoarm.simulate([[0.0] * 4] * 400, dt=dt, start=[0.0, 0.0, 10.0])
    t, z = rows[-1][0], rows[-1][3]
    assert t == pytest.approx(1.0)
    assert z - 10.0 == pytest.approx(-0.5 * 9.81 * t * t, abs=1e-6)


def test_fit_round_trip():
    fit = holoarm.fit_arm("lateral", 32.0, 0.72)
    arm = holoarm.ArmParams()
    arm.k_lat, arm.c_lat = fit["k"], fit["c"]
    assert holoarm.release_recovery("lateral", 32.0, arm) == pytest.approx(0.72, rel=0.02)


def test_drop_compliant_softer():
    c = holoarm.drop_test(1.0, compliant=True)
    r = holoarm.drop_test(1.0, compliant=False)
    assert c["peak_force"] < r["peak_force"]
    assert c["contact_duration"] > r["contact_duration"]


def test_scenario_lemniscate_pd():
    res = holoarm.run_scenario("lemniscate")
    assert res["success"] and not res["crashed"]
    assert res["metrics"]["mean_error_m"] < 0.23
    assert len(res["t"]) == len(res["error"]) > 0


def test_scenario_override_and_bad_key():
    res = holoarm.run_scenario("narrow_gap", overrides={"gap.width": "0.6"})
    assert res["metrics"]["gap_width_m"] == pytest.approx(0.6)
    with pytest.raises(ValueError):
        holoarm.run_scenario("lemniscate", overrides={"mass": "-1"})
    with pytest.raises(ValueError):
        holoarm.run_scenario("not_a_scenario")


def test_config_hash_stable():
    assert holoarm.config_hash("") == holoarm.config_hash("# only a comment\n")
    assert holoarm.config_hash("") != holoarm.config_hash("mass = 1.0\n")
    echo = holoarm.resolved_config("gap.width = 0.5\n")
    assert "gap.width = 0.5" in echo.splitlines()


def test_train_short_is_deterministic(tmp_path):
    a = holoarm.train(8192, seed=3, save_to=tmp_path / "a.txt", overrides={"train.eval_every": "1", "train.eval_episodes": "1"})
    b = holoarm.train(8192, seed=3, save_to=tmp_path / "b.txt", overrides={"train.eval_every": "1", "train.eval_episodes": "1"})
    assert repr(a["log"]) == repr(b["log"])
    assert (tmp_path / "a.txt").read_bytes() == (tmp_path / "b.txt").read_bytes()


def test_cli_exit_codes(tmp_path):
    assert holoarm.cli([]) == 1
    assert holoarm.cli(["--no-such-flag"]) == 1
    assert holoarm.cli(["eval", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == 2
    out = tmp_path / "drop"
    assert holoarm.cli(["scenario", "--kind", "drop_suite", "--out", str(out), "--no-plots"]) == 0
    rows = (out / "drop_summary.csv").read_text().strip().splitlines()
    assert len(rows) == 7
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["subcommand"] == "scenario" and len(manifest["config_hash"]) == 64
