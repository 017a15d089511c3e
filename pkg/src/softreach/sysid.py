"""Second-order model identification from averaged PWM step responses.

Output-error least squares: each candidate (b, a1, a0) is simulated with the
exact zero-order-hold plant under the recorded duty level and compared with
the averaged response. The search runs Nelder-Mead in log-parameter space
(keeping all three parameters positive) from the initial guess and from eight
log-spaced perturbations of it.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from scipy.optimize import minimize

from .plant import SecondOrderModel, step_response

DEFAULT_TS = 0.0625
MIN_SAMPLES = 8
RESTART_SPREAD = 2.0


class SysIdError(ValueError):
    pass


class EmptyLevel(SysIdError):
    pass


class RaggedTrials(SysIdError):
    pass


class TooFewSamples(SysIdError):
    pass


class DegenerateData(SysIdError):
    pass


@dataclass
class StepResponseDataset:
    ts: float
    pwm_levels: list[float]
    trials: dict[float, list[np.ndarray]]
    averaged: dict[float, np.ndarray] = field(default_factory=dict)

    @property
    def n_samples(self) -> int:
        return sum(len(v) for v in self.averaged.values())

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.averaged[lvl] for lvl in self.pwm_levels])


@dataclass(frozen=True)
class FitResult:
    model: SecondOrderModel
    fit_percent: float
    residual_norm: float
    restarts: int = 0


def average_trials(raw: Mapping[float, Sequence[Sequence[float]]], ts: float = DEFAULT_TS) -> StepResponseDataset:
    """Element-wise mean of the trials recorded at each duty level."""
    levels = sorted(float(k) for k in raw)
    trials: dict[float, list[np.ndarray]] = {}
    averaged: dict[float, np.ndarray] = {}
    for key, seqs in raw.items():
        level = float(key)
        arrs = [np.asarray(s, dtype=float) for s in seqs]
        if not arrs:
            raise EmptyLevel(f"no trials at PWM {level}")
        if len({a.shape for a in arrs}) != 1:
            raise RaggedTrials(f"trials at PWM {level} have different lengths")
        trials[level] = arrs
        averaged[level] = np.mean(arrs, axis=0)
    return StepResponseDataset(ts, levels, trials, averaged)


def fit_metric(y, yhat) -> float:
    """Normalized-RMSE fit in percent: 100 (1 - |y - yhat| / |y - mean(y)|)."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape or y.size < 2:
        raise ValueError("fit_metric needs two equal-length sequences of at least 2 samples")
    spread = np.linalg.norm(y - y.mean())
    if spread == 0:
        raise DegenerateData("measured sequence is constant; fit is undefined")
    return float(100.0 * (1.0 - np.linalg.norm(y - yhat) / spread))


def simulate_dataset(model: SecondOrderModel, data: StepResponseDataset) -> np.ndarray:
    # response is linear in the level: one unit-duty simulation serves all
    lengths = [len(data.averaged[lvl]) for lvl in data.pwm_levels]
    unit = step_response(model, 1.0, max(lengths), data.ts)
    return np.concatenate([lvl * unit[:n] for lvl, n in zip(data.pwm_levels, lengths)])


def _cost(logp: np.ndarray, data: StepResponseDataset, y: np.ndarray) -> float:
    b, a1, a0 = np.exp(logp)
    if not np.all(np.isfinite([b, a1, a0])):
        return math.inf
    yhat = simulate_dataset(SecondOrderModel(b, a1, a0), data)
    r = y - yhat
    val = float(r @ r)
    return val if math.isfinite(val) else math.inf


def _restart_points(init: SecondOrderModel) -> list[np.ndarray]:
    """The initial guess plus eight perturbations at the corners of a log box."""
    base = np.log([init.b, init.a1, init.a0])
    pts = [base]
    span = math.log(RESTART_SPREAD)
    for sb in (-1, 1):
        for s1 in (-1, 1):
            for s0 in (-1, 1):
                pts.append(base + span * np.array([sb, s1, s0]))
    return pts


def _nelder_mead(x0: np.ndarray, data: StepResponseDataset, y: np.ndarray):
    # cost tolerance relative to the starting residual: an absolute one is
    # below round-off once noisy data leave a large residual at the optimum
    ftol = 1e-14 * max(_cost(x0, data, y), 1e-300)
    best = minimize(
        _cost, x0, args=(data, y), method="Nelder-Mead",
        options={"xatol": 1e-10, "fatol": ftol, "maxiter": 4000, "maxfev": 8000},
    )
    # one polish from the optimum: a fresh simplex escapes early collapse
    polish = minimize(
        _cost, best.x, args=(data, y), method="Nelder-Mead",
        options={"xatol": 1e-12, "fatol": ftol * 1e-2, "maxiter": 4000, "maxfev": 8000},
    )
    return polish if polish.fun <= best.fun else best


def fit_second_order(data: StepResponseDataset, init: SecondOrderModel) -> FitResult:
    if not data.averaged or max(len(v) for v in data.averaged.values()) < MIN_SAMPLES:
        raise TooFewSamples(f"need at least {MIN_SAMPLES} samples on some level")
    y = data.stacked()
    if np.ptp(y) == 0:
        raise DegenerateData("response has zero variance")
    candidates = []
    for x0 in _restart_points(init):
        res = _nelder_mead(x0, data, y)
        candidates.append((float(res.fun), tuple(np.exp(res.x))))
    # lowest residual, ties by parameter order
    cost, (b, a1, a0) = min(candidates)
    model = SecondOrderModel(b, a1, a0)
    yhat = simulate_dataset(model, data)
    return FitResult(model, fit_metric(y, yhat), float(np.linalg.norm(y - yhat)), len(candidates))


def synthetic_dataset(model: SecondOrderModel, levels=(25.0, 50.0, 75.0, 100.0), duration: float = 10.0,
                      ts: float = DEFAULT_TS, noise_frac: float = 0.0, n_trials: int = 1,
                      rng: np.random.Generator | None = None) -> StepResponseDataset:
    """Step responses of ``model`` with optional Gaussian noise of std
    ``noise_frac`` times each level's final value."""
    n = int(round(duration / ts)) + 1
    raw = {}
    for lvl in levels:
        clean = step_response(model, lvl, n, ts)
        sigma = noise_frac * model.dc_gain * lvl
        trials = []
        for _ in range(n_trials):
            noise = rng.normal(0.0, sigma, n) if sigma > 0 else np.zeros(n)
            trials.append(clean + noise)
        raw[lvl] = trials
    return average_trials(raw, ts)


def read_trial_csv(path) -> tuple[float, np.ndarray, np.ndarray]:
    """Read a ``t,pwm,angle_deg`` trial. Returns (level, t, angle_deg).

    The level is the most common nonzero duty in the file.
    """
    t, pwm, ang = [], [], []
    with Path(path).open(newline="") as fh:
        reader = csv.DictReader(fh)
        missing = {"t", "pwm", "angle_deg"} - set(reader.fieldnames or ())
        if missing:
            raise SysIdError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            t.append(float(row["t"]))
            pwm.append(float(row["pwm"]))
            ang.append(float(row["angle_deg"]))
    pwm_arr = np.asarray(pwm)
    active = pwm_arr[pwm_arr != 0]
    if active.size == 0:
        raise DegenerateData(f"{path}: pwm column is all zero")
    vals, counts = np.unique(active, return_counts=True)
    return float(vals[np.argmax(counts)]), np.asarray(t), np.asarray(ang)


def dataset_from_csvs(paths, ts: float = DEFAULT_TS) -> StepResponseDataset:
    raw: dict[float, list[np.ndarray]] = {}
    for p in paths:
        level, _, ang = read_trial_csv(p)
        raw.setdefault(level, []).append(ang)
    return average_trials(raw, ts)


def write_report_csv(result: FitResult, data: StepResponseDataset, path) -> Path:
    path = Path(path)
    yhat = {lvl: step_response(result.model, lvl, len(data.averaged[lvl]), data.ts) for lvl in data.pwm_levels}
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["pwm", "t", "angle_avg_deg", "angle_fit_deg"])
        for lvl in data.pwm_levels:
            for k, (ya, yf) in enumerate(zip(data.averaged[lvl], yhat[lvl])):
                w.writerow([f"{lvl:.9g}", f"{k * data.ts:.9g}", f"{ya:.9g}", f"{yf:.9g}"])
    return path
