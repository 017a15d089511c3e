"""Pneumatic actuators as identified second-order transfer functions.

Each actuator maps PWM duty (%) to angular displacement (degrees) from its
deflated rest pose through G(s) = b / (s^2 + a1 s + a0). Simulation uses the
exact zero-order-hold discretization of the companion-form realization

    x1' = x2
    x2' = -a0 x1 - a1 x2 + b u
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import expm

PWM_MIN = 0.0
PWM_MAX = 100.0


class NonPositiveStep(ValueError):
    pass


@dataclass(frozen=True)
class SecondOrderModel:
    b: float
    a1: float
    a0: float

    def __post_init__(self):
        if not (self.a0 > 0 and self.b > 0):
            raise ValueError(f"model needs a0 > 0 and b > 0, got {self}")

    @property
    def dc_gain(self) -> float:
        return self.b / self.a0

    @property
    def natural_frequency(self) -> float:
        return math.sqrt(self.a0)

    @property
    def damping_ratio(self) -> float:
        return self.a1 / (2.0 * math.sqrt(self.a0))

    @property
    def ceiling_deg(self) -> float:
        """Steady displacement at full duty."""
        return PWM_MAX * self.dc_gain

    def state_space(self) -> tuple[np.ndarray, np.ndarray]:
        A = np.array([[0.0, 1.0], [-self.a0, -self.a1]])
        B = np.array([0.0, self.b])
        return A, B


def identified_models() -> tuple[SecondOrderModel, SecondOrderModel]:
    """Identified (shoulder, elbow) actuator models."""
    return SecondOrderModel(52.62, 15.57, 101.10), SecondOrderModel(16.11, 0.271, 36.88)


@dataclass(frozen=True)
class ActuatorState:
    x1: float = 0.0  # displacement, deg
    x2: float = 0.0  # rate, deg/s


@dataclass(frozen=True, eq=False)
class DiscretePlant:
    Ad: np.ndarray
    Bd: np.ndarray
    dt: float
    rest_angle: float = 0.0
    sign: int = 1
    model: SecondOrderModel | None = None

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(np.linalg.eigvals(self.Ad))))


def zoh_matrices(A: np.ndarray, B: np.ndarray, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Exact hold-equivalent (Ad, Bd) via the augmented matrix exponential."""
    n = A.shape[0]
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = A
    M[:n, n] = B
    E = expm(M * dt)
    return E[:n, :n], E[:n, n]


def discretize(model: SecondOrderModel, dt: float, rest_angle: float = 0.0, sign: int = 1) -> DiscretePlant:
    if not dt > 0:
        raise NonPositiveStep(f"step must be positive, got {dt}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    Ad, Bd = zoh_matrices(*model.state_space(), dt)
    return DiscretePlant(Ad, Bd, float(dt), float(rest_angle), int(sign), model)


def clamp_pwm(pwm: float) -> float:
    return min(max(pwm, PWM_MIN), PWM_MAX)


def step(plant: DiscretePlant, state: ActuatorState, pwm: float) -> ActuatorState:
    """Advance one hold interval with the duty clamped to [0, 100]."""
    u = clamp_pwm(pwm)
    x = plant.Ad @ np.array([state.x1, state.x2]) + plant.Bd * u
    return ActuatorState(float(x[0]), float(x[1]))


def joint_angle(plant: DiscretePlant, state: ActuatorState) -> float:
    return plant.rest_angle + plant.sign * math.radians(state.x1)


def displacement_for_angle(plant: DiscretePlant, angle: float) -> float:
    """Inverse of :func:`joint_angle`: displacement in degrees for a joint angle."""
    return math.degrees((angle - plant.rest_angle) * plant.sign)


def simulate(plant: DiscretePlant, pwm, state: ActuatorState | None = None) -> np.ndarray:
    """Displacement samples x1[k] for an input sequence held over each step.

    Returns len(pwm) + 1 samples, the first being the initial state.
    """
    x = np.array([0.0, 0.0]) if state is None else np.array([state.x1, state.x2])
    u = np.clip(np.asarray(pwm, dtype=float), PWM_MIN, PWM_MAX)
    out = np.empty(len(u) + 1)
    out[0] = x[0]
    Ad, Bd = plant.Ad, plant.Bd
    for k, uk in enumerate(u):
        x = Ad @ x + Bd * uk
        out[k + 1] = x[0]
    return out


def step_response(model: SecondOrderModel, level: float, n: int, dt: float) -> np.ndarray:
    """n samples of the displacement under a constant duty starting at rest.

    Unclamped. A held constant input makes the hold-equivalent samples equal
    the continuous step response at t = k dt, evaluated here in modal form:

        y(t) = K level (1 + (p2 e^{p1 t} - p1 e^{p2 t}) / (p1 - p2))

    with the repeated-root limit K level (1 - (1 - p t) e^{p t}).
    """
    t = np.arange(n) * dt
    final = model.dc_gain * level
    disc = complex(model.a1**2 - 4.0 * model.a0)
    root = np.sqrt(disc)
    p1 = (-model.a1 + root) / 2.0
    p2 = (-model.a1 - root) / 2.0
    if abs(p1 - p2) <= 1e-7 * abs(p1):
        p = -model.a1 / 2.0
        return final * (1.0 - (1.0 - p * t) * np.exp(p * t))
    y = 1.0 + (p2 * np.exp(p1 * t) - p1 * np.exp(p2 * t)) / (p1 - p2)
    return final * y.real
