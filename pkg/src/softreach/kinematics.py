"""Geometry of the two-joint arm: shoulder abduction (theta_s) and elbow
flexion (theta_e).

Frames follow the Denavit-Hartenberg table

    joint     theta     d    r      alpha
    shoulder  theta_s   0    d_se   pi/2
    elbow     theta_e   0    d_ew   0

with the inertial frame anchored at the shoulder. Lengths are meters, angles
radians.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

SINGULAR_TOL = 1e-9
IK_TOL = 1e-4
# Slack on the joint-limit check for IK results; absorbs atan2 round-off at
# the limit faces (e.g. theta_e = pi/2 + 2e-16).
LIMIT_SLACK = 1e-9


class KinematicsError(ValueError):
    pass


class Unreachable(KinematicsError):
    pass


class DegenerateAtan(KinematicsError):
    pass


@dataclass(frozen=True)
class ArmGeometry:
    d_se: float = 0.070
    d_ew: float = 0.070
    theta_s_min: float = 0.0
    theta_s_max: float = math.pi / 2
    theta_e_min: float = 0.0
    theta_e_max: float = math.pi / 2

    def __post_init__(self):
        if not (self.d_se > 0 and self.d_ew > 0):
            raise ValueError("link lengths must be positive")
        if self.theta_s_min > self.theta_s_max or self.theta_e_min > self.theta_e_max:
            raise ValueError("joint limit interval is empty")

    @property
    def reach(self) -> float:
        return self.d_se + self.d_ew

    def within_limits(self, q: "JointAngles", slack: float = 0.0) -> bool:
        """Closed-interval limit test (no angle wrapping)."""
        return (
            self.theta_s_min - slack <= q.theta_s <= self.theta_s_max + slack
            and self.theta_e_min - slack <= q.theta_e <= self.theta_e_max + slack
        )


@dataclass(frozen=True)
class JointAngles:
    theta_s: float
    theta_e: float

    def __post_init__(self):
        if not (math.isfinite(self.theta_s) and math.isfinite(self.theta_e)):
            raise ValueError(f"non-finite joint angles {self!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.theta_s, self.theta_e])


@dataclass(frozen=True)
class CartesianPoint:
    x: float
    y: float
    z: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite point {self!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def distance(self, other: "CartesianPoint") -> float:
        return float(np.linalg.norm(self.as_array() - other.as_array()))


def homogeneous_transform(geom: ArmGeometry, q: JointAngles) -> np.ndarray:
    """Base-to-wrist homogeneous transform.

    The rotation block is the product Rz(theta_s) Rx(pi/2) Rz(theta_e); the
    wrist orientation vector is (0, theta_s, theta_e).
    """
    cs, ss = math.cos(q.theta_s), math.sin(q.theta_s)
    ce, se = math.cos(q.theta_e), math.sin(q.theta_e)
    lever = geom.d_se + geom.d_ew * ce
    return np.array(
        [
            [cs * ce, -cs * se, ss, cs * lever],
            [ss * ce, -ss * se, -cs, ss * lever],
            [se, ce, 0.0, geom.d_ew * se],
            [0.0, 0.0, 0.0, 1.0],
        ]
    )


def upper_arm_rotation(theta_s: float) -> np.ndarray:
    """Rotation of the first link frame, Rz(theta_s) Rx(pi/2)."""
    cs, ss = math.cos(theta_s), math.sin(theta_s)
    return np.array([[cs, 0.0, ss], [ss, 0.0, -cs], [0.0, 1.0, 0.0]])


def forward_kinematics(geom: ArmGeometry, q: JointAngles) -> CartesianPoint:
    lever = geom.d_se + geom.d_ew * math.cos(q.theta_e)
    return CartesianPoint(
        math.cos(q.theta_s) * lever,
        math.sin(q.theta_s) * lever,
        geom.d_ew * math.sin(q.theta_e),
    )


def forward_kinematics_batch(geom: ArmGeometry, theta_s, theta_e) -> np.ndarray:
    """Vectorized wrist positions, shape (..., 3)."""
    theta_s = np.asarray(theta_s, dtype=float)
    theta_e = np.asarray(theta_e, dtype=float)
    lever = geom.d_se + geom.d_ew * np.cos(theta_e)
    return np.stack(
        [np.cos(theta_s) * lever, np.sin(theta_s) * lever, geom.d_ew * np.sin(theta_e)],
        axis=-1,
    )


def inverse_kinematics(
    geom: ArmGeometry, p: CartesianPoint, tol: float = IK_TOL
) -> JointAngles:
    """Closed-form joint angles for a wrist position.

    The two-argument arctangents give a single candidate; it is accepted only
    if it lies inside the joint limits and its forward image is within
    ``tol`` meters of ``p``. The default tolerance admits points quoted to
    four decimals.

    Raises
    ------
    DegenerateAtan
        If either arctangent has both arguments zero.
    Unreachable
        If the candidate violates the limits or fails the round trip.
    """
    radial = math.hypot(p.x, p.y)
    if p.x == 0.0 and p.y == 0.0:
        raise DegenerateAtan(f"shoulder angle undefined at {p}")
    if p.z == 0.0 and radial - geom.d_se == 0.0:
        raise DegenerateAtan(f"elbow angle undefined at {p}")
    theta_s = math.atan2(p.y, p.x)
    theta_e = math.atan2(p.z, radial - geom.d_se)
    q = JointAngles(theta_s, theta_e)
    if not geom.within_limits(q, slack=LIMIT_SLACK):
        raise Unreachable(f"{p} needs joint angles {q} outside the limits")
    q = JointAngles(
        min(max(theta_s, geom.theta_s_min), geom.theta_s_max),
        min(max(theta_e, geom.theta_e_min), geom.theta_e_max),
    )
    miss = forward_kinematics(geom, q).distance(p)
    if miss > tol:
        raise Unreachable(f"{p} is {miss:.3g} m off the reachable surface")
    return q


def position_jacobian(geom: ArmGeometry, q: JointAngles) -> np.ndarray:
    """3x2 derivative of wrist position w.r.t. (theta_s, theta_e), m/rad."""
    cs, ss = math.cos(q.theta_s), math.sin(q.theta_s)
    ce, se = math.cos(q.theta_e), math.sin(q.theta_e)
    lever = geom.d_se + geom.d_ew * ce
    return np.array(
        [
            [-ss * lever, -geom.d_ew * cs * se],
            [cs * lever, -geom.d_ew * ss * se],
            [0.0, geom.d_ew * ce],
        ]
    )


def full_jacobian(geom: ArmGeometry, q: JointAngles) -> np.ndarray:
    """6x2 end-effector Jacobian: position rows then (omega_x, omega_y, omega_z)."""
    return np.vstack([position_jacobian(geom, q), [[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]]])


@dataclass(frozen=True)
class MinorDeterminants:
    det_j1: float  # rows (x, y)
    det_j2: float  # rows (x, z)
    det_j3: float  # rows (y, z)
    tol: float = SINGULAR_TOL

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.det_j1, self.det_j2, self.det_j3)

    @property
    def vanishing(self) -> tuple[bool, bool, bool]:
        return tuple(abs(d) < self.tol for d in self.as_tuple())

    @property
    def singular(self) -> bool:
        return all(self.vanishing)


def submatrix_determinants(
    geom: ArmGeometry, q: JointAngles, tol: float = SINGULAR_TOL
) -> MinorDeterminants:
    """Determinants of the 2x2 minors of the position Jacobian.

    J1, J2 and J3 drop the z, y and x rows respectively. ``singular`` is set
    only when all three vanish, i.e. the Jacobian has lost rank.
    """
    jac = position_jacobian(geom, q)
    return MinorDeterminants(
        float(np.linalg.det(jac[[0, 1]])),
        float(np.linalg.det(jac[[0, 2]])),
        float(np.linalg.det(jac[[1, 2]])),
        tol,
    )


def singularity_grid(geom: ArmGeometry, n_per_axis: int = 91, tol: float = SINGULAR_TOL):
    """Evaluate the minor determinants on an n x n grid over the limit box.

    Returns ``(theta_s, theta_e, dets)`` where ``dets`` has shape (n, n, 3)
    indexed ``[i_s, i_e, minor]``.
    """
    ts = np.linspace(geom.theta_s_min, geom.theta_s_max, n_per_axis)
    te = np.linspace(geom.theta_e_min, geom.theta_e_max, n_per_axis)
    S, E = np.meshgrid(ts, te, indexing="ij")
    lever = geom.d_se + geom.d_ew * np.cos(E)
    d = geom.d_ew
    # closed forms of the three minors; cross-checked against
    # submatrix_determinants in the tests
    dets = np.stack(
        [
            d * lever * np.sin(E),
            -d * lever * np.sin(S) * np.cos(E),
            d * lever * np.cos(S) * np.cos(E),
        ],
        axis=-1,
    )
    return ts, te, dets


def end_effector_speed(geom: ArmGeometry, q: JointAngles, qdot) -> float:
    return float(np.linalg.norm(position_jacobian(geom, q) @ np.asarray(qdot, dtype=float)))


def is_reachable(geom: ArmGeometry, p: CartesianPoint, tol: float = IK_TOL) -> bool:
    try:
        inverse_kinematics(geom, p, tol=tol)
    except KinematicsError:
        return False
    return True


def sample_workspace(geom: ArmGeometry, n_per_axis: int) -> np.ndarray:
    """Wrist positions over a uniform n x n grid of the joint-limit box, (n*n, 3)."""
    if n_per_axis < 2:
        raise ValueError("n_per_axis must be at least 2")
    ts = np.linspace(geom.theta_s_min, geom.theta_s_max, n_per_axis)
    te = np.linspace(geom.theta_e_min, geom.theta_e_max, n_per_axis)
    S, E = np.meshgrid(ts, te, indexing="ij")
    return forward_kinematics_batch(geom, S.ravel(), E.ravel())


def write_points_csv(points: Iterable, path) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["x", "y", "z"])
        for x, y, z in points:
            writer.writerow([f"{x:.9g}", f"{y:.9g}", f"{z:.9g}"])
    return path
