import math
from dataclasses import replace

import numpy as np
import pytest

from softreach.harness import (
    LOG_FIELDS,
    METRIC_FIELDS,
    Scenario,
    _settling_time,
    load_config,
    run,
    run_reaching_suite,
    scenario_from_config,
    write_summary_csv,
)
from softreach.kinematics import JointAngles, forward_kinematics
from softreach.plots import PANELS, emit_plots
from softreach.sensing import NoiseModel
from softreach.trajectory import plan, setpoint


def scenario(label, **kw):
    return replace(Scenario(), spec=setpoint(label), **kw)


@pytest.fixture(scope="module")
def p1():
    return run(scenario("P1"))


@pytest.fixture(scope="module")
def p2():
    return run(scenario("P2"))


class TestRun:
    def test_row_count_and_clock(self, p1):
        log, _ = p1
        assert len(log) == 501
        np.testing.assert_allclose(np.diff(log["t"]), 0.02, rtol=0, atol=1e-12)
        assert log["t"][0] == 0.0 and log["t"][-1] == pytest.approx(10.0)

    def test_p1_shoulder_idle_elbow_converges(self, p1):
        log, m = p1
        assert np.all(log["pwm_s"] == 0.0)
        assert math.degrees(m.ss_error_e) < 2.0

    def test_p2_elbow_pinned(self, p2):
        log, m = p2
        ceiling = 16.11 / 36.88 * 100
        assert math.degrees(m.ss_error_e) == pytest.approx(90.0 - ceiling, abs=1.0)
        assert m.ss_saturation_e == 1.0
        assert m.saturation_failure("elbow")
        assert not m.saturation_failure("shoulder")

    def test_starts_at_rest(self, p1):
        log, _ = p1
        assert log["theta_s_true"][0] == pytest.approx(math.pi / 2, abs=1e-15)
        assert log["theta_e_true"][0] == 0.0

    def test_wrist_is_fk_of_true_angles(self, p2):
        log, _ = p2
        for k in range(0, 501, 7):
            p = forward_kinematics(Scenario().geometry, JointAngles(log["theta_s_true"][k], log["theta_e_true"][k]))
            assert abs(p.x - log["x"][k]) <= 1e-12
            assert abs(p.y - log["y"][k]) <= 1e-12
            assert abs(p.z - log["z"][k]) <= 1e-12

    def test_desired_columns_follow_plan(self, p2):
        log, _ = p2
        pl = plan(Scenario().geometry, setpoint("P2"))
        for k in range(0, 501, 11):
            q, _ = pl.desired(log["t"][k])
            assert (log["theta_s_des"][k], log["theta_e_des"][k]) == (q.theta_s, q.theta_e)

    def test_metrics_in_range(self, p1, p2):
        for _, m in (p1, p2):
            d = m.as_dict()
            assert set(d) == set(METRIC_FIELDS)
            assert all(v >= 0 for v in d.values())
            assert 0 <= m.saturation_s <= 1 and 0 <= m.saturation_e <= 1

    def test_noise_free_measurement_is_exact(self, p1):
        log, _ = p1
        np.testing.assert_allclose(log["theta_e_meas"], log["theta_e_true"], atol=1e-9)

    def test_causal_prefix(self):
        noise = NoiseModel(sigma_deg=0.5)
        short, _ = run(scenario("P5", noise=noise, total_time=4.0, seed=3))
        long, _ = run(scenario("P5", noise=noise, total_time=10.0, seed=3))
        for f in LOG_FIELDS:
            np.testing.assert_array_equal(short[f], long[f][: len(short)])

    def test_sensor_delay_shifts_measurement(self):
        log, _ = run(scenario("P3", sensor_delay=1, total_time=2.0))
        np.testing.assert_allclose(log["theta_s_meas"][1:], log["theta_s_true"][:-1], atol=1e-9)

    @pytest.mark.parametrize("kw", [dict(rate_hz=0.0), dict(sensor_delay=2), dict(total_time=0.5)])
    def test_invalid_scenario(self, kw):
        with pytest.raises(ValueError):
            run(scenario("P1", **kw))


class TestDeterminism:
    def test_byte_identical_csv(self, tmp_path):
        scn = scenario("P4", noise=NoiseModel(sigma_deg=0.5), seed=11)
        a = run(scn)[0].to_csv(tmp_path / "a.csv").read_bytes()
        b = run(scn)[0].to_csv(tmp_path / "b.csv").read_bytes()
        assert a == b
        c = run(replace(scn, seed=12))[0].to_csv(tmp_path / "c.csv").read_bytes()
        assert a != c

    def test_csv_header_and_precision(self, p1, tmp_path):
        lines = p1[0].to_csv(tmp_path / "log.csv").read_text().splitlines()
        assert lines[0] == ",".join(LOG_FIELDS)
        assert len(lines) == 502
        for cell in lines[200].split(","):
            mantissa = cell.lstrip("-").split("e")[0].replace(".", "").lstrip("0")
            assert len(mantissa) <= 9


class TestSettling:
    def test_examples(self):
        t = np.arange(5.0)
        assert _settling_time(t, np.array([5, 3, 1, 0, 0.0]), 2.0) == 2.0
        assert _settling_time(t, np.zeros(5), 2.0) == 0.0
        assert _settling_time(t, np.array([0, 0, 0, 0, 3.0]), 2.0) == math.inf


class TestSuite:
    def test_zero_noise_reps_identical(self):
        rows = run_reaching_suite(Scenario(), repetitions=2)
        single = run_reaching_suite(Scenario(), repetitions=1)
        assert [r.label for r in rows] == [f"P{i}" for i in range(1, 9)]
        for a, b in zip(rows, single):
            assert a.metrics == b.metrics

    def test_summary_csv(self, tmp_path):
        rows = run_reaching_suite(Scenario(), repetitions=1)
        lines = write_summary_csv(rows, tmp_path / "s.csv").read_text().splitlines()
        assert len(lines) == 9
        assert lines[0].startswith("setpoint,mode,repetitions,rmse_s")
        flagged = {r.label for r in rows if r.elbow_saturation_failure}
        assert flagged == {"P2", "P5", "P8"}


class TestConfig:
    def test_overrides(self, tmp_path):
        path = tmp_path / "c.ini"
        path.write_text(
            "[plant.elbow]\nb = 20\n[control]\nkp_e = 5\nrate_hz = 100\n"
            "[sensing]\nsigma_deg = 0.25\ndelay_ticks = 1\n[sim]\nsetpoint = P6\nseed = 9\ntotal_time = 4\n"
        )
        cfg = load_config(path)
        assert cfg["plant.elbow.b"] == "20"
        scn = scenario_from_config(cfg)
        assert scn.models[1].b == 20.0 and scn.models[1].a0 == 36.88
        assert scn.gains[1].kp == 5.0 and scn.gains[0].kp == 211.0
        assert (scn.rate_hz, scn.noise.sigma_deg, scn.sensor_delay, scn.seed) == (100.0, 0.25, 1, 9)
        assert scn.spec.label == "P6" and scn.total_time == 4.0
        assert scn.n_ticks == 401

    def test_unknown_key(self):
        with pytest.raises(KeyError):
            scenario_from_config({"plant.knee.b": "1"})

    def test_empty_config_is_default(self):
        assert scenario_from_config({}) == Scenario()


class TestPlots:
    def test_files_and_determinism(self, p2, tmp_path):
        a = emit_plots(p2[0], tmp_path / "a")
        b = emit_plots(p2[0], tmp_path / "b")
        assert sorted(p.name for p in a) == sorted(f"{name}.svg" for name in PANELS)
        for pa, pb in zip(a, b):
            assert pa.read_bytes() == pb.read_bytes()
            assert pa.read_bytes().lstrip().startswith(b"<?xml")

    def test_p6_desired_is_monotone(self):
        log, _ = run(scenario("P6", total_time=2.0))
        des = log["theta_s_des"]
        assert des[0] == pytest.approx(math.pi / 2) and des[-1] == 0.0
        assert np.all(np.diff(des) <= 0)
