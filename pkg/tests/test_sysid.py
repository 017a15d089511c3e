import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from softreach.plant import SecondOrderModel, identified_models, step_response
from softreach.sysid import (
    DegenerateData,
    EmptyLevel,
    RaggedTrials,
    TooFewSamples,
    average_trials,
    dataset_from_csvs,
    fit_metric,
    fit_second_order,
    read_trial_csv,
    synthetic_dataset,
    write_report_csv,
)

SHOULDER, ELBOW = identified_models()
GUESS = SecondOrderModel(10.0, 0.5, 30.0)


def write_trial(path, level, angles, ts=0.0625):
    with open(path, "w") as fh:
        fh.write("t,pwm,angle_deg\n")
        for k, a in enumerate(angles):
            fh.write(f"{k * ts:.9g},{level:.9g},{a:.17g}\n")


class TestAverage:
    def test_single_trial(self):
        d = average_trials({50: [[1.0, 2.0, 3.0]]})
        np.testing.assert_array_equal(d.averaged[50.0], [1.0, 2.0, 3.0])

    def test_symmetric_trials_cancel(self):
        y = np.array([0.3, -1.2, 4.0])
        d = average_trials({25: [y, -y]})
        np.testing.assert_array_equal(d.averaged[25.0], 0.0)

    def test_constant_trials(self):
        d = average_trials({75: [np.full(4, 1.0), np.full(4, 2.0), np.full(4, 3.0)]})
        np.testing.assert_array_equal(d.averaged[75.0], 2.0)

    def test_levels_sorted(self):
        d = average_trials({100: [[1, 2]], 25: [[1, 2]]})
        assert d.pwm_levels == [25.0, 100.0]

    def test_empty_level(self):
        with pytest.raises(EmptyLevel):
            average_trials({50: []})

    def test_ragged(self):
        with pytest.raises(RaggedTrials):
            average_trials({50: [[1, 2, 3], [1, 2]]})


class TestFitMetric:
    def test_perfect(self):
        assert fit_metric([0, 1, 2], [0, 1, 2]) == 100.0

    def test_mean_predictor(self):
        assert fit_metric([0, 1, 2], [1, 1, 1]) == pytest.approx(0.0, abs=1e-12)

    def test_arithmetic_example(self):
        assert fit_metric([0, 1, 2], [0, 1, 3]) == pytest.approx(100 * (1 - 1 / math.sqrt(2)))
        assert fit_metric([0, 1, 2], [0, 1, 3]) == pytest.approx(29.29, abs=5e-3)

    def test_constant_data(self):
        with pytest.raises(DegenerateData):
            fit_metric([2, 2, 2], [1, 2, 3])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            fit_metric([0, 1], [0, 1, 2])

    @given(st.floats(0, 5), st.floats(0, 5))
    def test_decreasing_in_residual(self, a, b):
        y = np.array([0.0, 1.0, 4.0, 2.0])
        direction = np.array([1.0, -1.0, 0.5, 0.2])
        fa, fb = fit_metric(y, y + a * direction), fit_metric(y, y + b * direction)
        if b - a > 1e-9:
            assert fa > fb
        assert fa <= 100.0


class TestFit:
    def test_recovers_elbow(self):
        res = fit_second_order(synthetic_dataset(ELBOW), GUESS)
        m = res.model
        np.testing.assert_allclose([m.b, m.a1, m.a0], [16.11, 0.271, 36.88], rtol=0.01)
        assert res.fit_percent >= 99.9
        assert res.restarts == 9

    def test_recovers_shoulder(self):
        res = fit_second_order(synthetic_dataset(SHOULDER), SecondOrderModel(30.0, 8.0, 60.0))
        m = res.model
        np.testing.assert_allclose([m.b, m.a1, m.a0], [52.62, 15.57, 101.10], rtol=0.01)

    @settings(max_examples=5, deadline=None)
    @given(
        st.floats(5, 100), st.floats(0.1, 30), st.floats(10, 200),
        st.floats(1 / 3, 3), st.floats(1 / 3, 3), st.floats(1 / 3, 3),
    )
    def test_recovery_property(self, b, a1, a0, fb, f1, f0):
        truth = SecondOrderModel(b, a1, a0)
        res = fit_second_order(synthetic_dataset(truth), SecondOrderModel(b * fb, a1 * f1, a0 * f0))
        m = res.model
        np.testing.assert_allclose([m.b, m.a1, m.a0], [b, a1, a0], rtol=0.01)

    def test_noisy_fit_band(self):
        data = synthetic_dataset(ELBOW, noise_frac=0.05, rng=np.random.default_rng(0))
        assert fit_second_order(data, GUESS).fit_percent >= 90.0

    def test_flat_data(self):
        data = average_trials({50: [np.zeros(40)]})
        with pytest.raises(DegenerateData):
            fit_second_order(data, GUESS)

    def test_too_few_samples(self):
        data = average_trials({50: [np.arange(7.0)]})
        with pytest.raises(TooFewSamples):
            fit_second_order(data, GUESS)

    def test_identical_trials_match_single(self):
        single = synthetic_dataset(ELBOW, levels=(50.0,), duration=5.0)
        y = single.averaged[50.0]
        tripled = average_trials({50.0: [y, y.copy(), y.copy()]})
        a = fit_second_order(single, GUESS).model
        b = fit_second_order(tripled, GUESS).model
        assert (a.b, a.a1, a.a0) == (b.b, b.a1, b.a0)


class TestCsv:
    def test_read_level(self, tmp_path):
        path = tmp_path / "trial.csv"
        with open(path, "w") as fh:
            fh.write("t,pwm,angle_deg\n0,0,0\n0.0625,75,0.1\n0.125,75,0.4\n")
        level, t, ang = read_trial_csv(path)
        assert level == 75.0
        np.testing.assert_array_equal(ang, [0.0, 0.1, 0.4])

    def test_missing_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("t,angle_deg\n0,0\n")
        with pytest.raises(ValueError):
            read_trial_csv(path)

    def test_files_round_trip(self, tmp_path):
        paths = []
        for lvl in (25.0, 50.0, 75.0, 100.0):
            for k in range(2):
                p = tmp_path / f"l{int(lvl)}_{k}.csv"
                write_trial(p, lvl, step_response(ELBOW, lvl, 161, 0.0625))
                paths.append(p)
        data = dataset_from_csvs(paths)
        assert data.pwm_levels == [25.0, 50.0, 75.0, 100.0]
        assert all(len(data.trials[lvl]) == 2 for lvl in data.pwm_levels)
        res = fit_second_order(data, GUESS)
        np.testing.assert_allclose([res.model.b, res.model.a1, res.model.a0], [16.11, 0.271, 36.88], rtol=0.01)
        report = write_report_csv(res, data, tmp_path / "report.csv")
        lines = report.read_text().splitlines()
        assert lines[0] == "pwm,t,angle_avg_deg,angle_fit_deg"
        assert len(lines) == 1 + 4 * 161
