"""PD pressure regulation: joint-angle error (degrees) to PWM duty (%)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .plant import PWM_MAX, PWM_MIN, NonPositiveStep, SecondOrderModel, zoh_matrices

TAU_D = 0.05
RATE_HZ = 50.0


@dataclass(frozen=True)
class PDGains:
    kp: float  # % per deg
    kd: float  # % per deg/s
    joint: str = "shoulder"

    def __post_init__(self):
        if self.kp < 0 or self.kd < 0:
            raise ValueError("PD gains must be non-negative")


def tuned_gains() -> tuple[PDGains, PDGains]:
    return PDGains(211.0, 15.0, "shoulder"), PDGains(213.0, 27.0, "elbow")


@dataclass(frozen=True)
class PDState:
    prev_error: float = 0.0
    filtered_derivative: float = 0.0
    initialized: bool = False


@dataclass(frozen=True)
class ControlCommand:
    pwm: float
    raw_gain: float

    @property
    def saturated(self) -> bool:
        return self.raw_gain >= PWM_MAX


def error(theta_d: float, theta_m: float) -> float:
    """Tracking error in degrees."""
    return math.degrees(theta_d - theta_m)


def filter_pole(dt: float, tau_d: float) -> float:
    """Pole of the derivative low-pass, exact for an input held over dt."""
    return math.exp(-dt / tau_d) if tau_d > 0 else 0.0


def pd_step(gains: PDGains, state: PDState, e: float, dt: float,
            tau_d: float = TAU_D) -> tuple[ControlCommand, PDState]:
    """One controller tick.

    The derivative is the backward difference of the error passed through a
    first-order low-pass with time constant ``tau_d``. It is zero on the
    first call. The duty is the raw PD output clamped to [0, 100].
    """
    if not dt > 0:
        raise NonPositiveStep(f"step must be positive, got {dt}")
    if state.initialized:
        alpha = filter_pole(dt, tau_d)
        diff = (e - state.prev_error) / dt
        d_hat = alpha * state.filtered_derivative + (1.0 - alpha) * diff
    else:
        d_hat = 0.0
    raw = gains.kp * e + gains.kd * d_hat
    pwm = min(max(raw, PWM_MIN), PWM_MAX)
    return ControlCommand(pwm, raw), PDState(e, d_hat, True)


def closed_loop_poles(gains: PDGains, model: SecondOrderModel, dt: float,
                      tau_d: float = TAU_D) -> np.ndarray:
    """Poles of the unsaturated discrete loop (ZOH plant, filtered PD, unit feedback).

    With plant G(z) = N(z)/D(z) and controller

        C(z) = ((kp + kd beta) z - (kp alpha + kd beta)) / (z - alpha),
        beta = (1 - alpha) / dt,

    the characteristic polynomial is D(z) (z - alpha) + N(z) Cn(z). At zero
    gains the roots are the plant poles plus the filter pole alpha.
    """
    if not dt > 0:
        raise NonPositiveStep(f"step must be positive, got {dt}")
    Ad, Bd = zoh_matrices(*model.state_space(), dt)
    # G(z) = C (zI - Ad)^-1 Bd with C = [1, 0]
    den = np.poly(Ad)
    num = np.array([Bd[0], Ad[0, 1] * Bd[1] - Ad[1, 1] * Bd[0]])
    alpha = filter_pole(dt, tau_d)
    beta = (1.0 - alpha) / dt
    c_num = np.array([gains.kp + gains.kd * beta, -(gains.kp * alpha + gains.kd * beta)])
    char = np.polyadd(np.polymul(den, [1.0, -alpha]), np.polymul(num, c_num))
    return np.roots(char)
