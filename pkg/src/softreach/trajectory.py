"""Quintic (minimum-jerk) joint trajectories toward the reaching setpoints."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .kinematics import ArmGeometry, JointAngles, end_effector_speed

HALF_PI = math.pi / 2
QUARTER_PI = math.pi / 4
DURATION_GROWTH = 1.1
SPEED_SAMPLE_DT = 1e-3


class NonPositiveDuration(ValueError):
    pass


class TrajectorySpecError(ValueError):
    pass


class Joint(str, Enum):
    SHOULDER = "shoulder"
    ELBOW = "elbow"


class Mode(str, Enum):
    BO = "BO"  # biceps only: elbow moves
    DO = "DO"  # deltoid only: shoulder moves
    CM = "CM"  # combined muscle: both move


@dataclass(frozen=True)
class QuinticSegment:
    """theta(t) = a0 t^5 + a1 t^4 + a2 t^3 + a3 t^2 + a4 t + a5 on [0, T]."""

    a0: float
    a1: float
    a2: float
    a3: float
    a4: float
    a5: float
    T: float
    joint: Joint = Joint.SHOULDER
    start: float = 0.0
    target: float = 0.0

    @property
    def coeffs(self) -> np.ndarray:
        return np.array([self.a0, self.a1, self.a2, self.a3, self.a4, self.a5])

    def eval(self, t: float) -> tuple[float, float, float]:
        return eval_segment(self, t)


def solve_quintic(start: float, target: float, T: float, joint: Joint = Joint.SHOULDER) -> QuinticSegment:
    """Rest-to-rest quintic through ``start`` and ``target`` in time ``T``.

    The six boundary conditions (position, velocity, acceleration at both
    ends, the latter two zero) are solved on the unit interval tau = t/T and
    the coefficients rescaled, which keeps the system well conditioned for
    any ``T``.
    """
    if not T > 0:
        raise NonPositiveDuration(f"duration must be positive, got {T}")
    c = np.linalg.solve(_UNIT_BOUNDARY, np.array([0.0, 0.0, 0.0, 1.0, 0.0, 0.0]))
    # terms pinned at tau=0 are exactly zero; drop solver residue
    c[3:] = 0.0
    delta = target - start
    powers = np.arange(5, -1, -1)
    a = delta * c / float(T) ** powers
    a[5] = start
    return QuinticSegment(*map(float, a), T=float(T), joint=joint, start=float(start), target=float(target))


def _boundary_rows(t: float) -> list[list[float]]:
    return [
        [t**5, t**4, t**3, t**2, t, 1.0],
        [5 * t**4, 4 * t**3, 3 * t**2, 2 * t, 1.0, 0.0],
        [20 * t**3, 12 * t**2, 6 * t, 2.0, 0.0, 0.0],
    ]


_UNIT_BOUNDARY = np.array(_boundary_rows(0.0) + _boundary_rows(1.0))


def eval_segment(seg: QuinticSegment, t: float) -> tuple[float, float, float]:
    """Position, velocity and acceleration; held at the terminal rest state for t >= T."""
    if t >= seg.T:
        return seg.target, 0.0, 0.0
    if t <= 0.0:
        return seg.start, 0.0, 0.0
    c = seg.coeffs
    pos = np.polyval(c, t)
    vel = np.polyval(np.polyder(c, 1), t)
    acc = np.polyval(np.polyder(c, 2), t)
    return float(pos), float(vel), float(acc)


def sample_segment(seg: QuinticSegment, t: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized counterpart of :func:`eval_segment`."""
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, 0.0, seg.T)
    c = seg.coeffs
    pos = np.polyval(c, tc)
    vel = np.polyval(np.polyder(c, 1), tc)
    acc = np.polyval(np.polyder(c, 2), tc)
    done = t >= seg.T
    pos = np.where(t <= 0.0, seg.start, pos)
    pos = np.where(done, seg.target, pos)
    vel = np.where(done, 0.0, vel)
    acc = np.where(done, 0.0, acc)
    return pos, vel, acc


@dataclass(frozen=True)
class ReachingLimits:
    default_duration: float = 1.0
    peak_speed: float = 0.5654
    mean_speed: float = 0.283

    def __post_init__(self):
        if min(self.default_duration, self.peak_speed, self.mean_speed) <= 0:
            raise ValueError("reaching limits must be positive")


def infer_mode(start: JointAngles, target: JointAngles) -> Mode:
    moves_s = target.theta_s != start.theta_s
    moves_e = target.theta_e != start.theta_e
    if moves_s and moves_e:
        return Mode.CM
    if moves_e:
        return Mode.BO
    if moves_s:
        return Mode.DO
    raise TrajectorySpecError("start and target coincide; no actuation mode applies")


@dataclass(frozen=True)
class TrajectorySpec:
    start: JointAngles
    target: JointAngles
    duration: float = 1.0
    mode: Mode | None = None
    label: str = "custom"

    def __post_init__(self):
        if not self.duration > 0:
            raise NonPositiveDuration(f"duration must be positive, got {self.duration}")
        inferred = infer_mode(self.start, self.target)
        if self.mode is None:
            object.__setattr__(self, "mode", inferred)
        elif Mode(self.mode) is not inferred:
            raise TrajectorySpecError(
                f"{self.label}: mode {Mode(self.mode).value} does not match the moving joints ({inferred.value})"
            )
        else:
            object.__setattr__(self, "mode", Mode(self.mode))

    def validate(self, geom: ArmGeometry) -> None:
        for name, q in (("start", self.start), ("target", self.target)):
            if not geom.within_limits(q):
                raise TrajectorySpecError(f"{self.label}: {name} {q} outside joint limits")


@dataclass(frozen=True)
class Plan:
    shoulder: QuinticSegment
    elbow: QuinticSegment
    peak_speed: float

    @property
    def duration(self) -> float:
        return self.shoulder.T

    def desired(self, t: float) -> tuple[JointAngles, tuple[float, float]]:
        ps, vs, _ = eval_segment(self.shoulder, t)
        pe, ve, _ = eval_segment(self.elbow, t)
        return JointAngles(ps, pe), (vs, ve)

    def __iter__(self):
        # unpacks as (shoulder, elbow)
        return iter((self.shoulder, self.elbow))


def peak_wrist_speed(geom: ArmGeometry, shoulder: QuinticSegment, elbow: QuinticSegment,
                     dt: float = SPEED_SAMPLE_DT) -> float:
    """Largest wrist speed over the motion, sampled every ``dt`` seconds."""
    T = max(shoulder.T, elbow.T)
    t = np.linspace(0.0, T, int(round(T / dt)) + 1)
    ps, vs, _ = sample_segment(shoulder, t)
    pe, ve, _ = sample_segment(elbow, t)
    return max(
        end_effector_speed(geom, JointAngles(a, b), (va, vb))
        for a, b, va, vb in zip(ps, pe, vs, ve)
    )


def plan(geom: ArmGeometry, spec: TrajectorySpec, limits: ReachingLimits | None = None) -> Plan:
    """Synchronized shoulder/elbow quintics obeying the peak wrist-speed cap.

    The duration starts at ``spec.duration`` and grows by a factor 1.1 until
    the sampled peak wrist speed is within ``limits.peak_speed``.
    """
    limits = limits or ReachingLimits()
    spec.validate(geom)
    T = spec.duration
    for _ in range(1000):
        sh = solve_quintic(spec.start.theta_s, spec.target.theta_s, T, Joint.SHOULDER)
        el = solve_quintic(spec.start.theta_e, spec.target.theta_e, T, Joint.ELBOW)
        peak = peak_wrist_speed(geom, sh, el)
        if peak <= limits.peak_speed:
            return Plan(sh, el, peak)
        T *= DURATION_GROWTH
    raise RuntimeError("duration search did not converge")


REST = JointAngles(HALF_PI, 0.0)

# (label, theta_s, theta_e, mode, wrist xyz as tabulated)
REACHING_TARGETS = (
    ("P1", HALF_PI, QUARTER_PI, Mode.BO, (0.0, 0.1195, 0.0495)),
    ("P2", HALF_PI, HALF_PI, Mode.BO, (0.0, 0.0700, 0.0700)),
    ("P3", QUARTER_PI, 0.0, Mode.DO, (0.0990, 0.0990, 0.0)),
    ("P4", QUARTER_PI, QUARTER_PI, Mode.CM, (0.0845, 0.0845, 0.0495)),
    ("P5", QUARTER_PI, HALF_PI, Mode.CM, (0.0495, 0.0495, 0.0700)),
    ("P6", 0.0, 0.0, Mode.DO, (0.1400, 0.0, 0.0)),
    ("P7", 0.0, QUARTER_PI, Mode.CM, (0.1195, 0.0, 0.0495)),
    ("P8", 0.0, HALF_PI, Mode.CM, (0.0700, 0.0, 0.0700)),
)


def reaching_setpoints(duration: float = 1.0) -> list[TrajectorySpec]:
    """The eight reaching targets, each starting from the rest pose (pi/2, 0)."""
    return [
        TrajectorySpec(REST, JointAngles(ts, te), duration, mode, label)
        for label, ts, te, mode, _ in REACHING_TARGETS
    ]


def setpoint(label: str, duration: float = 1.0) -> TrajectorySpec:
    for spec in reaching_setpoints(duration):
        if spec.label == label.upper():
            return spec
    raise KeyError(f"unknown setpoint {label!r}; expected P1..P8")
