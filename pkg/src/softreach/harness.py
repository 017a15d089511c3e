"""Closed-loop simulation: trajectory -> PD -> actuator -> IMU -> PD ...

One tick k at t = k / rate:

1. desired joint angles from the planned quintics;
2. IMU reading synthesized from the true (plant-derived) angles;
3. measured angles extracted from the reading;
4. per-joint error in degrees, expressed along the inflation direction;
5. PD step;
6. zero-order-hold actuator step with the clamped duty;
7. log.
"""

from __future__ import annotations

import configparser
import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import control, kinematics, plant, sensing
from .control import PDGains, PDState
from .kinematics import ArmGeometry, JointAngles
from .plant import ActuatorState, SecondOrderModel
from .sensing import GimbalDegenerate, NoiseModel
from .trajectory import ReachingLimits, TrajectorySpec, plan, reaching_setpoints, setpoint

log = logging.getLogger(__name__)

SETTLE_BAND_DEG = 2.0
STEADY_FRACTION = 0.10
# saturation-failure flag: missed by more than the settling band while the
# duty sat at 100% for at least this share of the steady-state window
SATURATION_SHARE = 0.5

LOG_FIELDS = (
    "t",
    "theta_s_des", "theta_e_des",
    "theta_s_true", "theta_e_true",
    "theta_s_meas", "theta_e_meas",
    "pwm_s", "pwm_e",
    "x", "y", "z",
    "x_des", "y_des", "z_des",
)

METRIC_FIELDS = (
    "rmse_s", "rmse_e",
    "ss_error_s", "ss_error_e",
    "settling_time_s", "settling_time_e",
    "wrist_error",
    "saturation_s", "saturation_e",
    "ss_saturation_s", "ss_saturation_e",
)


@dataclass(frozen=True)
class ActuatorConvention:
    rest_angle: float
    sign: int


SHOULDER_CONVENTION = ActuatorConvention(math.pi / 2, -1)
ELBOW_CONVENTION = ActuatorConvention(0.0, 1)


def _default_models():
    return plant.identified_models()


def _default_gains():
    return control.tuned_gains()


@dataclass(frozen=True)
class Scenario:
    spec: TrajectorySpec = field(default_factory=lambda: setpoint("P1"))
    geometry: ArmGeometry = field(default_factory=ArmGeometry)
    gains: tuple[PDGains, PDGains] = field(default_factory=_default_gains)
    models: tuple[SecondOrderModel, SecondOrderModel] = field(default_factory=_default_models)
    conventions: tuple[ActuatorConvention, ActuatorConvention] = (SHOULDER_CONVENTION, ELBOW_CONVENTION)
    noise: NoiseModel = field(default_factory=lambda: NoiseModel(sigma_deg=0.0))
    limits: ReachingLimits = field(default_factory=ReachingLimits)
    rate_hz: float = control.RATE_HZ
    total_time: float = 10.0
    tau_d: float = control.TAU_D
    sensor_delay: int = 0
    seed: int = 0

    @property
    def dt(self) -> float:
        return 1.0 / self.rate_hz

    @property
    def n_ticks(self) -> int:
        return int(round(self.rate_hz * self.total_time)) + 1

    def validate(self) -> None:
        if not self.rate_hz > 0:
            raise ValueError("control rate must be positive")
        if self.sensor_delay not in (0, 1):
            raise ValueError("sensor_delay must be 0 or 1 ticks")
        if self.total_time < self.spec.duration:
            raise ValueError("total sim time is shorter than the trajectory")


@dataclass
class SimLog:
    columns: dict[str, np.ndarray]
    degenerate_ticks: list[int] = field(default_factory=list)
    label: str = ""

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def __len__(self) -> int:
        return len(self.columns["t"])

    def rows(self):
        return zip(*(self.columns[f] for f in LOG_FIELDS))

    def to_csv(self, path) -> Path:
        return _write_csv(path, LOG_FIELDS, self.rows())


@dataclass(frozen=True)
class Metrics:
    rmse_s: float
    rmse_e: float
    ss_error_s: float
    ss_error_e: float
    settling_time_s: float
    settling_time_e: float
    wrist_error: float
    saturation_s: float
    saturation_e: float
    ss_saturation_s: float
    ss_saturation_e: float

    def as_dict(self) -> dict[str, float]:
        return {f: getattr(self, f) for f in METRIC_FIELDS}

    def saturation_failure(self, joint: str) -> bool:
        """Joint missed its target while pinned at full duty."""
        j = "s" if joint.startswith("s") else "e"
        return (
            getattr(self, f"ss_error_{j}") > math.radians(SETTLE_BAND_DEG)
            and getattr(self, f"ss_saturation_{j}") >= SATURATION_SHARE
        )

    def to_csv(self, path) -> Path:
        d = self.as_dict()
        return _write_csv(path, ("metric", "value"), ((k, v) for k, v in d.items()))


def _fmt(v) -> str:
    if isinstance(v, str):
        return v
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    return f"{float(v):.9g}"


def _write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    return path


def run(scn: Scenario) -> tuple[SimLog, Metrics]:
    scn.validate()
    geom = scn.geometry
    traj = plan(geom, scn.spec, scn.limits)
    dt = scn.dt
    plants = [
        plant.discretize(m, dt, c.rest_angle, c.sign) for m, c in zip(scn.models, scn.conventions)
    ]
    start = (scn.spec.start.theta_s, scn.spec.start.theta_e)
    states = [ActuatorState(plant.displacement_for_angle(p, a), 0.0) for p, a in zip(plants, start)]
    pd_states = [PDState(), PDState()]
    rng = np.random.default_rng(scn.seed)

    n = scn.n_ticks
    cols = {f: np.empty(n) for f in LOG_FIELDS}
    degenerate = []
    last_meas = None
    pending = None

    for k in range(n):
        t = k / scn.rate_hz
        q_des, _ = traj.desired(t)
        q_true = JointAngles(*(plant.joint_angle(p, s) for p, s in zip(plants, states)))

        reading = sensing.synthesize(q_true, scn.noise, t, rng)
        try:
            meas = sensing.extract_angles(reading)
        except GimbalDegenerate:
            degenerate.append(k)
            log.warning("degenerate IMU reading at t=%.4f s; holding last measurement", t)
            meas = last_meas if last_meas is not None else q_true
        last_meas = meas
        if scn.sensor_delay:
            meas, pending = (pending if pending is not None else meas), meas

        cmds = []
        for j, (p, g) in enumerate(zip(plants, scn.gains)):
            des_j = (q_des.theta_s, q_des.theta_e)[j]
            meas_j = (meas.theta_s, meas.theta_e)[j]
            e = p.sign * control.error(des_j, meas_j)
            cmd, pd_states[j] = control.pd_step(g, pd_states[j], e, dt, scn.tau_d)
            cmds.append(cmd)

        wrist = kinematics.forward_kinematics(geom, q_true)
        wrist_des = kinematics.forward_kinematics(geom, q_des)
        row = (
            t,
            q_des.theta_s, q_des.theta_e,
            q_true.theta_s, q_true.theta_e,
            meas.theta_s, meas.theta_e,
            cmds[0].pwm, cmds[1].pwm,
            wrist.x, wrist.y, wrist.z,
            wrist_des.x, wrist_des.y, wrist_des.z,
        )
        for f, v in zip(LOG_FIELDS, row):
            cols[f][k] = v

        states = [plant.step(p, s, c.pwm) for p, s, c in zip(plants, states, cmds)]

    sim_log = SimLog(cols, degenerate, scn.spec.label)
    return sim_log, compute_metrics(sim_log, scn)


def _settling_time(t: np.ndarray, err: np.ndarray, band: float) -> float:
    outside = np.flatnonzero(np.abs(err) > band)
    if outside.size == 0:
        return 0.0
    last = outside[-1]
    if last == len(t) - 1:
        return math.inf
    return float(t[last + 1])


def compute_metrics(sim_log: SimLog, scn: Scenario) -> Metrics:
    n = len(sim_log)
    n_ss = max(1, int(math.ceil(STEADY_FRACTION * n)))
    band = math.radians(SETTLE_BAND_DEG)
    t = sim_log["t"]
    out = {}
    for j in ("s", "e"):
        des = sim_log[f"theta_{j}_des"]
        true = sim_log[f"theta_{j}_true"]
        target = scn.spec.target.theta_s if j == "s" else scn.spec.target.theta_e
        pwm = sim_log[f"pwm_{j}"]
        out[f"rmse_{j}"] = float(np.sqrt(np.mean((des - true) ** 2)))
        out[f"ss_error_{j}"] = float(np.mean(np.abs(des[-n_ss:] - true[-n_ss:])))
        out[f"settling_time_{j}"] = _settling_time(t, true - target, band)
        out[f"saturation_{j}"] = float(np.mean(pwm >= plant.PWM_MAX))
        out[f"ss_saturation_{j}"] = float(np.mean(pwm[-n_ss:] >= plant.PWM_MAX))
    final = kinematics.CartesianPoint(sim_log["x"][-1], sim_log["y"][-1], sim_log["z"][-1])
    goal = kinematics.forward_kinematics(scn.geometry, scn.spec.target)
    out["wrist_error"] = final.distance(goal)
    return Metrics(**out)


@dataclass(frozen=True)
class SuiteRow:
    label: str
    mode: str
    repetitions: int
    metrics: Metrics
    elbow_saturation_failure: bool
    shoulder_saturation_failure: bool


SUITE_FIELDS = ("setpoint", "mode", "repetitions") + METRIC_FIELDS + (
    "elbow_saturation_failure", "shoulder_saturation_failure")


def run_reaching_suite(base: Scenario, repetitions: int = 8) -> list[SuiteRow]:
    """Run every reaching setpoint ``repetitions`` times (seeds base.seed + i)
    and average the metrics per setpoint."""
    rows = []
    for spec in reaching_setpoints(base.spec.duration):
        per_seed = {}
        for i in range(repetitions):
            scn = replace(base, spec=spec, seed=base.seed + i)
            per_seed[scn.seed] = run(scn)[1]
        ms = [per_seed[s] for s in sorted(per_seed)]
        mean = Metrics(**{f: float(np.mean([getattr(m, f) for m in ms])) for f in METRIC_FIELDS})
        rows.append(SuiteRow(
            spec.label, spec.mode.value, repetitions, mean,
            mean.saturation_failure("elbow"), mean.saturation_failure("shoulder"),
        ))
    return rows


def write_summary_csv(rows: list[SuiteRow], path) -> Path:
    def gen():
        for r in rows:
            m = r.metrics.as_dict()
            yield (r.label, r.mode, r.repetitions, *(m[f] for f in METRIC_FIELDS),
                   r.elbow_saturation_failure, r.shoulder_saturation_failure)
    return _write_csv(path, SUITE_FIELDS, gen())


# --- configuration -------------------------------------------------------

def load_config(path) -> dict[str, str]:
    """Flatten an INI file into dotted keys: ``[plant.elbow] b = 16`` -> ``plant.elbow.b``."""
    parser = configparser.ConfigParser()
    parser.optionxform = str
    with Path(path).open() as fh:
        parser.read_file(fh)
    flat = {}
    for section in parser.sections():
        for key, value in parser.items(section):
            flat[f"{section}.{key}"] = value
    return flat


KNOWN_KEYS = {
    "geometry.d_se", "geometry.d_ew",
    "plant.shoulder.b", "plant.shoulder.a1", "plant.shoulder.a0",
    "plant.elbow.b", "plant.elbow.a1", "plant.elbow.a0",
    "control.kp_s", "control.kd_s", "control.kp_e", "control.kd_e",
    "control.tau_d", "control.rate_hz",
    "sensing.sigma_deg", "sensing.bias_deg", "sensing.delay_ticks",
    "trajectory.duration", "trajectory.peak_speed",
    "sim.total_time", "sim.seed", "sim.setpoint",
}


def scenario_from_config(cfg: dict[str, str] | None = None, base: Scenario | None = None) -> Scenario:
    cfg = dict(cfg or {})
    unknown = set(cfg) - KNOWN_KEYS
    if unknown:
        raise KeyError(f"unknown config keys: {sorted(unknown)}")
    scn = base or Scenario()

    def num(key, default):
        return float(cfg[key]) if key in cfg else default

    geom = ArmGeometry(num("geometry.d_se", scn.geometry.d_se), num("geometry.d_ew", scn.geometry.d_ew))
    sh, el = scn.models
    models = (
        SecondOrderModel(num("plant.shoulder.b", sh.b), num("plant.shoulder.a1", sh.a1), num("plant.shoulder.a0", sh.a0)),
        SecondOrderModel(num("plant.elbow.b", el.b), num("plant.elbow.a1", el.a1), num("plant.elbow.a0", el.a0)),
    )
    gs, ge = scn.gains
    gains = (
        PDGains(num("control.kp_s", gs.kp), num("control.kd_s", gs.kd), "shoulder"),
        PDGains(num("control.kp_e", ge.kp), num("control.kd_e", ge.kd), "elbow"),
    )
    noise = NoiseModel(num("sensing.sigma_deg", scn.noise.sigma_deg), num("sensing.bias_deg", scn.noise.bias_deg))
    duration = num("trajectory.duration", scn.spec.duration)
    spec = setpoint(cfg["sim.setpoint"], duration) if "sim.setpoint" in cfg else replace(scn.spec, duration=duration)
    limits = replace(scn.limits, peak_speed=num("trajectory.peak_speed", scn.limits.peak_speed))
    return replace(
        scn,
        spec=spec,
        geometry=geom,
        gains=gains,
        models=models,
        noise=noise,
        limits=limits,
        rate_hz=num("control.rate_hz", scn.rate_hz),
        total_time=num("sim.total_time", scn.total_time),
        tau_d=num("control.tau_d", scn.tau_d),
        sensor_delay=int(num("sensing.delay_ticks", scn.sensor_delay)),
        seed=int(num("sim.seed", scn.seed)),
    )
