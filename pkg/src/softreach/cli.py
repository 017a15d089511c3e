"""Command line entry point: ``softreach <command> [options]``."""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import harness, kinematics, sysid, trajectory
from .kinematics import CartesianPoint, JointAngles
from .plant import SecondOrderModel


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="INI file with [section] key = value overrides")
    p.add_argument("--out", type=Path, default=Path("."), help="output directory")
    p.add_argument("--seed", type=int, help="RNG seed")
    p.add_argument("--noise-deg", type=float, help="IMU orientation noise std (deg)")
    p.add_argument("--setpoint", help="reaching target P1..P8")


def _scenario(args) -> harness.Scenario:
    cfg = harness.load_config(args.config) if args.config else {}
    scn = harness.scenario_from_config(cfg)
    if args.setpoint:
        scn = replace(scn, spec=trajectory.setpoint(args.setpoint, scn.spec.duration))
    if args.seed is not None:
        scn = replace(scn, seed=args.seed)
    if args.noise_deg is not None:
        scn = replace(scn, noise=replace(scn.noise, sigma_deg=args.noise_deg))
    return scn


def _out_dir(args) -> Path:
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def cmd_fk(args) -> int:
    scn = _scenario(args)
    p = kinematics.forward_kinematics(scn.geometry, JointAngles(args.theta_s, args.theta_e))
    print(f"{p.x:.9g},{p.y:.9g},{p.z:.9g}")
    return 0


def cmd_ik(args) -> int:
    scn = _scenario(args)
    try:
        q = kinematics.inverse_kinematics(scn.geometry, CartesianPoint(args.x, args.y, args.z), tol=args.tol)
    except kinematics.KinematicsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"{q.theta_s:.9g},{q.theta_e:.9g}")
    return 0


def cmd_workspace(args) -> int:
    scn = _scenario(args)
    pts = kinematics.sample_workspace(scn.geometry, args.n)
    out = _out_dir(args)
    kinematics.write_points_csv(pts, out / "workspace.csv")
    if args.plot:
        from .plots import plot_workspace
        plot_workspace(pts, out / "workspace.svg")
    print(f"{len(pts)} points -> {out / 'workspace.csv'}")
    return 0


def cmd_singularities(args) -> int:
    scn = _scenario(args)
    ts, te, dets = kinematics.singularity_grid(scn.geometry, args.n)
    out = _out_dir(args)
    path = out / "singularities.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["theta_s", "theta_e", "det_j1", "det_j2", "det_j3", "singular"])
        for i, a in enumerate(ts):
            for j, b in enumerate(te):
                d = dets[i, j]
                sing = bool(np.all(np.abs(d) < kinematics.SINGULAR_TOL))
                w.writerow([f"{a:.9g}", f"{b:.9g}", *(f"{v:.9g}" for v in d), int(sing)])
    if args.plot:
        from .plots import plot_singularities
        plot_singularities(ts, te, dets, out / "singularities.svg")
    n_sing = int(np.sum(np.all(np.abs(dets) < kinematics.SINGULAR_TOL, axis=-1)))
    print(f"{n_sing} rank-deficient configurations on a {args.n}x{args.n} grid -> {path}")
    return 0


def cmd_traj(args) -> int:
    scn = _scenario(args)
    pl = trajectory.plan(scn.geometry, scn.spec, scn.limits)
    horizon = args.duration if args.duration is not None else pl.duration
    n = int(round(horizon * args.rate)) + 1
    out = _out_dir(args)
    path = out / "traj.csv"
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "theta_s_des", "theta_e_des", "theta_s_dot_des", "theta_e_dot_des"])
        for k in range(n):
            t = k / args.rate
            q, (vs, ve) = pl.desired(t)
            w.writerow([f"{v:.9g}" for v in (t, q.theta_s, q.theta_e, vs, ve)])
    print(f"{scn.spec.label} ({scn.spec.mode.value}) T={pl.duration:.9g} s peak wrist speed "
          f"{pl.peak_speed:.9g} m/s -> {path}")
    return 0


def cmd_simulate(args) -> int:
    scn = _scenario(args)
    sim_log, metrics = harness.run(scn)
    out = _out_dir(args)
    sim_log.to_csv(out / "log.csv")
    metrics.to_csv(out / "metrics.csv")
    if args.plot:
        from .plots import emit_plots
        emit_plots(sim_log, out)
    for k, v in metrics.as_dict().items():
        print(f"{k:>16s} {v:.9g}")
    return 0


def cmd_suite(args) -> int:
    scn = _scenario(args)
    rows = harness.run_reaching_suite(scn, args.repetitions)
    out = _out_dir(args)
    harness.write_summary_csv(rows, out / "summary.csv")
    print(f"{'set':4s} {'mode':4s} {'ss_s[deg]':>10s} {'ss_e[deg]':>10s} {'sat_s':>6s} {'sat_e':>6s}  saturation failure")
    for r in rows:
        m = r.metrics
        flags = [j for j, f in (("shoulder", r.shoulder_saturation_failure), ("elbow", r.elbow_saturation_failure)) if f]
        print(f"{r.label:4s} {r.mode:4s} {math.degrees(m.ss_error_s):10.3f} {math.degrees(m.ss_error_e):10.3f} "
              f"{m.saturation_s:6.2f} {m.saturation_e:6.2f}  {','.join(flags) or '-'}")
    return 0


def cmd_sysid(args) -> int:
    data = sysid.dataset_from_csvs(args.trials, ts=args.ts)
    init = SecondOrderModel(args.init_b, args.init_a1, args.init_a0)
    res = sysid.fit_second_order(data, init)
    m = res.model
    print(f"b={m.b:.9g} a1={m.a1:.9g} a0={m.a0:.9g} fit={res.fit_percent:.9g}%")
    if args.report:
        sysid.write_report_csv(res, data, args.report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="softreach", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fk", help="wrist position for joint angles (rad)")
    _common(p)
    p.add_argument("theta_s", type=float)
    p.add_argument("theta_e", type=float)
    p.set_defaults(func=cmd_fk)

    p = sub.add_parser("ik", help="joint angles (rad) for a wrist position (m)")
    _common(p)
    p.add_argument("x", type=float)
    p.add_argument("y", type=float)
    p.add_argument("z", type=float)
    p.add_argument("--tol", type=float, default=kinematics.IK_TOL, help="round-trip tolerance (m)")
    p.set_defaults(func=cmd_ik)

    p = sub.add_parser("workspace", help="wrist point cloud over the joint-limit box")
    _common(p)
    p.add_argument("-n", type=int, default=50, help="grid points per joint")
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_workspace)

    p = sub.add_parser("singularities", help="Jacobian minor determinants over a grid")
    _common(p)
    p.add_argument("-n", type=int, default=91)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_singularities)

    p = sub.add_parser("traj", help="sample the planned desired trajectory")
    _common(p)
    p.add_argument("--rate", type=float, default=50.0, help="sample rate (Hz)")
    p.add_argument("--duration", type=float, help="horizon (s); defaults to the motion time")
    p.set_defaults(func=cmd_traj)

    p = sub.add_parser("simulate", help="closed-loop run of one setpoint")
    _common(p)
    p.add_argument("--plot", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("suite", help="all eight setpoints with repetitions")
    _common(p)
    p.add_argument("--repetitions", type=int, default=8)
    p.set_defaults(func=cmd_suite)

    p = sub.add_parser("sysid", help="fit a second-order model to step-response CSVs")
    p.add_argument("trials", nargs="+", type=Path, help="CSV files with columns t,pwm,angle_deg")
    p.add_argument("--ts", type=float, default=sysid.DEFAULT_TS)
    p.add_argument("--init-b", type=float, default=10.0)
    p.add_argument("--init-a1", type=float, default=1.0)
    p.add_argument("--init-a0", type=float, default=50.0)
    p.add_argument("--report", type=Path, help="write averaged vs fitted responses here")
    p.set_defaults(func=cmd_sysid)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
