"""Simulation workbench for IMU-feedback PD pressure control of a two-joint
soft pneumatic arm wearable."""

from .kinematics import ArmGeometry, CartesianPoint, JointAngles
from .plant import SecondOrderModel
from .trajectory import TrajectorySpec
from .harness import Scenario, run, run_reaching_suite

__all__ = [
    "ArmGeometry",
    "CartesianPoint",
    "JointAngles",
    "SecondOrderModel",
    "TrajectorySpec",
    "Scenario",
    "run",
    "run_reaching_suite",
]
__version__ = "0.1.0"
