"""Synthetic IMU orientation feedback.

Two sensors are modeled: one on the upper arm, whose orientation is the
first link frame Rz(theta_s) Rx(pi/2), and one on the forearm, whose
orientation is the full wrist rotation Rz(theta_s) Rx(pi/2) Rz(theta_e). The
torso frame is the identity. Measured joint angles are read back from the
quaternions the way a fusion stack's output would be consumed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial.transform import Rotation

from .kinematics import JointAngles, homogeneous_transform, upper_arm_rotation, ArmGeometry

ATAN_FLOOR = 1e-12
_UNIT_GEOM = ArmGeometry(1.0, 1.0)


class GimbalDegenerate(ValueError):
    pass


@dataclass(frozen=True)
class Quaternion:
    """Unit quaternion, scalar first. Renormalized on construction."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self):
        n = math.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2)
        if not n > 0:
            raise ValueError("zero quaternion")
        for name in "wxyz":
            object.__setattr__(self, name, getattr(self, name) / n)

    @classmethod
    def from_rotation(cls, rot: Rotation) -> "Quaternion":
        x, y, z, w = rot.as_quat()
        return cls(w, x, y, z)

    @classmethod
    def from_matrix(cls, R: np.ndarray) -> "Quaternion":
        return cls.from_rotation(Rotation.from_matrix(R))

    def to_rotation(self) -> Rotation:
        return Rotation.from_quat([self.x, self.y, self.z, self.w])

    def as_matrix(self) -> np.ndarray:
        return self.to_rotation().as_matrix()

    def conj(self) -> "Quaternion":
        return Quaternion(self.w, -self.x, -self.y, -self.z)

    def __mul__(self, other: "Quaternion") -> "Quaternion":
        w1, x1, y1, z1 = self.w, self.x, self.y, self.z
        w2, x2, y2, z2 = other.w, other.x, other.y, other.z
        return Quaternion(
            w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
            w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
            w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
            w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
        )


@dataclass(frozen=True)
class ImuReading:
    q_upper: Quaternion
    q_fore: Quaternion
    t: float = 0.0


@dataclass(frozen=True)
class NoiseModel:
    """Orientation error of each sensor.

    Every reading is rotated by a random small rotation whose rotation-vector
    components are i.i.d. Normal(0, sigma_deg); its axis is therefore uniform
    on the sphere. ``bias_deg`` is a constant heading offset (about the
    vertical torso axis) carried by both sensors, so it shifts the measured
    shoulder angle and leaves the elbow angle untouched.
    """

    sigma_deg: float = 0.5
    bias_deg: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.sigma_deg < 0:
            raise ValueError("sigma_deg must be non-negative")

    @property
    def is_zero(self) -> bool:
        return self.sigma_deg == 0 and self.bias_deg == 0

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.seed)


def _perturbation(noise: NoiseModel, rng: np.random.Generator | None) -> Rotation:
    rotvec = np.zeros(3)
    if noise.sigma_deg > 0:
        if rng is None:
            raise ValueError("a random generator is required when sigma_deg > 0")
        rotvec = rng.normal(0.0, math.radians(noise.sigma_deg), size=3)
    rotvec[2] += math.radians(noise.bias_deg)
    return Rotation.from_rotvec(rotvec)


def synthesize(
    q_true: JointAngles,
    noise: NoiseModel | None = None,
    t: float = 0.0,
    rng: np.random.Generator | None = None,
) -> ImuReading:
    """IMU quaternions for the true joint angles, perturbed per ``noise``.

    ``rng`` carries the noise stream across calls; a simulation owns one
    generator seeded from ``noise.seed``. Zero noise needs no generator.
    """
    R_upper = upper_arm_rotation(q_true.theta_s)
    R_fore = homogeneous_transform(_UNIT_GEOM, q_true)[:3, :3]
    rot_upper = Rotation.from_matrix(R_upper)
    rot_fore = Rotation.from_matrix(R_fore)
    if noise is not None and not noise.is_zero:
        rot_upper = _perturbation(noise, rng) * rot_upper
        rot_fore = _perturbation(noise, rng) * rot_fore
    return ImuReading(Quaternion.from_rotation(rot_upper), Quaternion.from_rotation(rot_fore), t)


def _atan2_checked(y: float, x: float, what: str) -> float:
    if abs(y) < ATAN_FLOOR and abs(x) < ATAN_FLOOR:
        raise GimbalDegenerate(f"{what} undefined: both arctangent arguments vanish")
    return math.atan2(y, x)


def extract_angles(r: ImuReading) -> JointAngles:
    """Shoulder angle from the upper-arm heading; elbow angle from the
    forearm orientation relative to the upper arm."""
    R_upper = r.q_upper.as_matrix()
    theta_s = _atan2_checked(R_upper[1, 0], R_upper[0, 0], "shoulder angle")
    R_rel = (r.q_upper.conj() * r.q_fore).as_matrix()
    theta_e = _atan2_checked(R_rel[1, 0], R_rel[0, 0], "elbow angle")
    return JointAngles(theta_s, theta_e)
