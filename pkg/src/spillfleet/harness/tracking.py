"""Closed-loop tracking experiments: Dubins reference, setpoint supervision,
coupled duo simulation, and RMSE metrics.

Control runs at dt_ctrl with zero-order hold while the dynamics integrate
at dt_dyn.  Cross-track error is the signed distance (positive left) from
each vessel to its own laterally offset copy of the reference path; heading
error is measured against the local tangent of the centerline, which is the
commanded heading and stays defined where the inner offset curve degenerates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from multiprocessing import get_context

import numpy as np

from ..control import (FblController, controller_from_config, fbl_step,
                       offset_polyline, path_to_setpoints, pid_step,
                       supervisor_step, wrap_angle)
from ..control.setpoints import SetpointPlan, SupervisorState
from ..dynamics import (DuoParams, DuoState, VesselParams, VesselState,
                        make_duo, step_n, stern_separation, vessel_derivative)
from ..errors import ConfigError
from .dubins import DEFAULT_STEP, dubins_path

LOG_COLUMNS = ("t", "cross_track_1", "heading_err_1", "cross_track_2",
               "heading_err_2", "u_1", "u_2")

PAPER_START = (0.0, 0.0, 0.0)
PAPER_GOAL = (100.0, 65.0, math.pi)


def _substeps(dt_ctrl: float, dt_dyn: float) -> int:
    if dt_ctrl <= 0 or dt_dyn <= 0:
        raise ConfigError("time steps must be positive")
    sub = round(dt_ctrl / dt_dyn)
    if sub < 1 or abs(sub * dt_dyn - dt_ctrl) > 1e-9:
        raise ConfigError("dt_ctrl must be an integer multiple of dt_dyn")
    return sub


def control_action(controller, refs, state: VesselState, f_l, dt: float):
    """One control update for either controller type.

    FBL consumes (u_ref, theta_ref) plus the measured tow tension; PID
    consumes the tracking errors directly.
    """
    if isinstance(controller, FblController):
        return fbl_step(controller, refs, state, f_l, dt)
    err = (refs[0] - state.u, wrap_angle(refs[1] - state.theta))
    return pid_step(controller, err, dt)


def simulate_vessel(controller, refs, duration: float,
                    params: VesselParams | None = None,
                    dt_ctrl: float = 0.01, dt_dyn: float = 1e-3,
                    state0=None, f_l=(0.0, 0.0)):
    """Single untethered vessel under held references.

    Returns (times, states) sampled at the control rate; states rows are
    (x, y, theta, u, v, omega).
    """
    params = params or VesselParams()
    sub = _substeps(dt_ctrl, dt_dyn)
    n = round(duration / dt_ctrl)
    s = tuple(state0) if state0 is not None else (0.0,) * 6
    out = np.empty((n + 1, 6))
    out[0] = s
    h6 = dt_dyn / 6.0
    for i in range(n):
        F, eta = control_action(controller, refs, VesselState(*s), f_l,
                                dt_ctrl)
        for _ in range(sub):
            k1 = vessel_derivative(VesselState(*s), F, eta, f_l, params)
            s2 = tuple(a + 0.5 * dt_dyn * b for a, b in zip(s, k1))
            k2 = vessel_derivative(VesselState(*s2), F, eta, f_l, params)
            s3 = tuple(a + 0.5 * dt_dyn * b for a, b in zip(s, k2))
            k3 = vessel_derivative(VesselState(*s3), F, eta, f_l, params)
            s4 = tuple(a + dt_dyn * b for a, b in zip(s, k3))
            k4 = vessel_derivative(VesselState(*s4), F, eta, f_l, params)
            s = tuple(a + h6 * (b1 + 2 * b2 + 2 * b3 + b4)
                      for a, b1, b2, b3, b4 in zip(s, k1, k2, k3, k4))
        out[i + 1] = s
    return np.arange(n + 1) * dt_ctrl, out


def run_plan(duo: DuoState, params: DuoParams, controllers,
             plan: SetpointPlan, dt_ctrl: float, dt_dyn: float,
             duration_cap: float):
    """Drive one setpoint plan to its terminal state or the time cap.

    Returns (final duo, complete, samples, max stern separation) where
    samples rows are (t, x1, y1, th1, u1, x2, y2, th2, u2).
    """
    sub = _substeps(dt_ctrl, dt_dyn)
    n_max = math.ceil(duration_cap / dt_ctrl)
    sup = SupervisorState()
    rows = []
    max_sep = stern_separation(duo, params)
    complete = False
    for _ in range(n_max):
        v1 = duo.vessel_1
        v2 = duo.vessel_2
        u1r, th1r, u2r, th2r, sup = supervisor_step(
            plan, sup, ((v1.x, v1.y), (v2.x, v2.y)))
        rows.append((duo.t, v1.x, v1.y, v1.theta, v1.u,
                     v2.x, v2.y, v2.theta, v2.u))
        if sup.mode == "terminal":
            complete = True
            break
        F1, e1 = control_action(controllers[0], (u1r, th1r), v1,
                                tuple(duo.f_l_1), dt_ctrl)
        F2, e2 = control_action(controllers[1], (u2r, th2r), v2,
                                tuple(duo.f_l_2), dt_ctrl)
        duo = step_n(duo, (F1, e1, F2, e2), dt_dyn, sub, params)
        sep = stern_separation(duo, params)
        if sep > max_sep:
            max_sep = sep
    return duo, complete, np.asarray(rows), max_sep


def hold_duo(duo: DuoState, params: DuoParams, controllers, refs_1, refs_2,
             duration: float, dt_ctrl: float, dt_dyn: float):
    """Station-keep under fixed references for a timed dwell."""
    sub = _substeps(dt_ctrl, dt_dyn)
    rows = []
    max_sep = stern_separation(duo, params)
    for _ in range(round(duration / dt_ctrl)):
        v1 = duo.vessel_1
        v2 = duo.vessel_2
        rows.append((duo.t, v1.x, v1.y, v1.theta, v1.u,
                     v2.x, v2.y, v2.theta, v2.u))
        F1, e1 = control_action(controllers[0], refs_1, v1,
                                tuple(duo.f_l_1), dt_ctrl)
        F2, e2 = control_action(controllers[1], refs_2, v2,
                                tuple(duo.f_l_2), dt_ctrl)
        duo = step_n(duo, (F1, e1, F2, e2), dt_dyn, sub, params)
        sep = stern_separation(duo, params)
        if sep > max_sep:
            max_sep = sep
    return duo, np.asarray(rows), max_sep


def signed_errors(points: np.ndarray, thetas: np.ndarray, line: np.ndarray,
                  chunk: int = 2048, heading_line: np.ndarray | None = None):
    """Cross-track (signed, positive left) and heading error of each sample
    against a reference polyline.

    heading_line, when given, supplies the tangent reference for the
    heading error from its own nearest-point projection.  Offset paths
    share their tangent direction with the generating centerline, but a
    tight turn can shrink an inner offset polyline to a point cluster
    with meaningless segment directions; measuring the heading against
    the centerline stays well defined there.
    """
    if heading_line is not None:
        cross, _ = signed_errors(points, thetas, line, chunk)
        _, heading_err = signed_errors(points, thetas, heading_line, chunk)
        return cross, heading_err
    a = line[:-1]
    d = line[1:] - a
    len2 = (d * d).sum(axis=1)
    keep = len2 > 1e-18
    a, d, len2 = a[keep], d[keep], len2[keep]
    if len(a) == 0:
        raise ConfigError("reference polyline has no extent")
    seg_heading = np.arctan2(d[:, 1], d[:, 0])
    seg_len = np.sqrt(len2)
    n = len(points)
    cross = np.empty(n)
    heading_err = np.empty(n)
    for lo in range(0, n, chunk):
        p = points[lo:lo + chunk]
        w = p[:, None, :] - a[None, :, :]
        tpar = np.clip((w * d).sum(axis=-1) / len2, 0.0, 1.0)
        diff = w - tpar[:, :, None] * d
        dist2 = (diff * diff).sum(axis=-1)
        j = np.argmin(dist2, axis=1)
        rows = np.arange(len(p))
        dj = d[j]
        djj = diff[rows, j]
        cross[lo:lo + chunk] = (dj[:, 0] * djj[:, 1]
                                - dj[:, 1] * djj[:, 0]) / seg_len[j]
        he = thetas[lo:lo + chunk] - seg_heading[j]
        heading_err[lo:lo + chunk] = np.mod(he + math.pi,
                                            2 * math.pi) - math.pi
    return cross, heading_err


@dataclass(frozen=True)
class TrackingExperiment:
    """One reference-tracking run: Dubins path, offset setpoints, duo sim."""

    start: tuple = PAPER_START
    goal: tuple = PAPER_GOAL
    rho: float = 15.0
    v_ref: float = 5.0
    controller: dict = None
    duration_cap: float | None = None
    spacing: float = 10.0
    arrival_radius: float = 2.0
    offset_frac: float = 0.5  # lateral offset as a fraction of boom length

    def __post_init__(self):
        if not self.rho > 0:
            raise ConfigError("rho must be positive")
        if not self.v_ref > 0:
            raise ConfigError("v_ref must be positive")
        if not 0.0 < self.offset_frac < 1.0:
            raise ConfigError("offset_frac must lie in (0, 1)")
        if self.controller is None:
            object.__setattr__(self, "controller", {"type": "fbl"})


@dataclass
class TrackingResult:
    complete: bool
    duration: float
    rmse_cross: tuple         # per vessel, metres
    rmse_heading_deg: tuple   # per vessel, degrees
    max_stern_separation: float
    word: str
    path_length: float
    log: np.ndarray           # columns LOG_COLUMNS

    def summary(self) -> dict:
        return {
            "complete": self.complete,
            "duration": self.duration,
            "rmse_cross": list(self.rmse_cross),
            "rmse_heading_deg": list(self.rmse_heading_deg),
            "max_stern_separation": self.max_stern_separation,
            "word": self.word,
            "path_length": self.path_length,
        }


def _rmse(x: np.ndarray) -> float:
    return float(np.sqrt(np.mean(x * x)))


def run_tracking_experiment(exp: TrackingExperiment,
                            duo_params: DuoParams | None = None,
                            dt_ctrl: float = 0.01, dt_dyn: float = 1e-3,
                            step: float = DEFAULT_STEP) -> TrackingResult:
    params = duo_params or DuoParams()
    params.validate()
    boom_len = params.boom.total_length
    path = dubins_path(exp.start, exp.goal, exp.rho, step)
    if path.length == 0.0:
        raise ConfigError("start and goal poses coincide")
    offset = exp.offset_frac * boom_len
    plan = path_to_setpoints(path.polyline, spacing=exp.spacing,
                             lateral_offset=offset, u_cruise=exp.v_ref,
                             arrival_radius=exp.arrival_radius,
                             boom_length=boom_len)
    duo = make_duo(tuple(plan.left[0]), tuple(plan.right[0]), params)
    controllers = []
    for vessel in (duo.vessel_1, duo.vessel_2):
        ctl = controller_from_config(exp.controller, params.vessel)
        if isinstance(ctl, FblController):
            ctl.prime(0.0, vessel.theta, vessel)
        controllers.append(ctl)
    cap = exp.duration_cap
    if cap is None:
        cap = 3.0 * path.length / exp.v_ref + 120.0
    duo, complete, rows, max_sep = run_plan(duo, params, controllers, plan,
                                            dt_ctrl, dt_dyn, cap)
    cross_1, he_1 = signed_errors(rows[:, 1:3], rows[:, 3],
                                  offset_polyline(path.polyline, 0.5 * offset),
                                  heading_line=path.polyline)
    cross_2, he_2 = signed_errors(rows[:, 5:7], rows[:, 7],
                                  offset_polyline(path.polyline, -0.5 * offset),
                                  heading_line=path.polyline)
    log = np.column_stack([rows[:, 0], cross_1, he_1, cross_2, he_2,
                           rows[:, 4], rows[:, 8]])
    return TrackingResult(
        complete=complete,
        duration=float(rows[-1, 0]),
        rmse_cross=(_rmse(cross_1), _rmse(cross_2)),
        rmse_heading_deg=(math.degrees(_rmse(he_1)),
                          math.degrees(_rmse(he_2))),
        max_stern_separation=max_sep,
        word=path.word,
        path_length=path.length,
        log=log,
    )


def write_log_csv(result: TrackingResult, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(",".join(LOG_COLUMNS) + "\n")
        for row in result.log:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


# ---------------------------------------------------------------------------
# RMSE sweep over (rho, v_ref).


@dataclass
class RmseMap:
    """Per-controller RMSE grid; arrays are indexed [i_rho, j_v]."""

    label: str
    rho_values: tuple
    v_values: tuple
    cross_1: np.ndarray
    cross_2: np.ndarray
    heading_1: np.ndarray
    heading_2: np.ndarray
    complete: np.ndarray

    def cell(self, i: int, j: int) -> dict:
        return {
            "rho": self.rho_values[i],
            "v_ref": self.v_values[j],
            "cross_1": float(self.cross_1[i, j]),
            "cross_2": float(self.cross_2[i, j]),
            "heading_1": float(self.heading_1[i, j]),
            "heading_2": float(self.heading_2[i, j]),
            "complete": bool(self.complete[i, j]),
        }


def _sweep_cell(task):
    exp, params, dt_ctrl, dt_dyn = task
    r = run_tracking_experiment(exp, params, dt_ctrl, dt_dyn)
    return (r.rmse_cross, r.rmse_heading_deg, r.complete)


def run_rmse_sweep(rho_values, v_values, controllers,
                   start=PAPER_START, goal=PAPER_GOAL,
                   duo_params: DuoParams | None = None,
                   dt_ctrl: float = 0.01, dt_dyn: float = 2e-3,
                   duration_cap: float | None = None,
                   workers: int = 1) -> list[RmseMap]:
    """Grid of tracking runs per controller config.

    `controllers` is an ordered list of (label, config) pairs.  Cells are
    independent and may run in a worker pool; aggregation order is fixed,
    so parallel output equals sequential output.
    """
    rho_values = tuple(float(r) for r in rho_values)
    v_values = tuple(float(v) for v in v_values)
    if not rho_values or not v_values or not controllers:
        raise ConfigError("sweep grid and controller list must be non-empty")
    params = duo_params or DuoParams()
    tasks = []
    for _, config in controllers:
        for rho in rho_values:
            for v in v_values:
                exp = TrackingExperiment(start=start, goal=goal, rho=rho,
                                         v_ref=v, controller=config,
                                         duration_cap=duration_cap)
                tasks.append((exp, params, dt_ctrl, dt_dyn))
    if workers > 1:
        with get_context("spawn").Pool(workers) as pool:
            results = pool.map(_sweep_cell, tasks)
    else:
        results = [_sweep_cell(t) for t in tasks]
    maps = []
    shape = (len(rho_values), len(v_values))
    it = iter(results)
    for label, _ in controllers:
        m = RmseMap(label=label, rho_values=rho_values, v_values=v_values,
                    cross_1=np.empty(shape), cross_2=np.empty(shape),
                    heading_1=np.empty(shape), heading_2=np.empty(shape),
                    complete=np.zeros(shape, dtype=bool))
        for i in range(shape[0]):
            for j in range(shape[1]):
                (c1, c2), (h1, h2), done = next(it)
                m.cross_1[i, j] = c1
                m.cross_2[i, j] = c2
                m.heading_1[i, j] = h1
                m.heading_2[i, j] = h2
                m.complete[i, j] = done
        maps.append(m)
    return maps


def write_rmse_csv(m: RmseMap, path) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("rho,v_ref,cross_1,cross_2,heading_1,heading_2,complete\n")
        for i in range(len(m.rho_values)):
            for j in range(len(m.v_values)):
                c = m.cell(i, j)
                fh.write(",".join([
                    repr(c["rho"]), repr(c["v_ref"]),
                    repr(c["cross_1"]), repr(c["cross_2"]),
                    repr(c["heading_1"]), repr(c["heading_2"]),
                    "1" if c["complete"] else "0"]) + "\n")
