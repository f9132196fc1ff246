"""Full mission execution: route the fleet, then fly every route with the
coupled duo simulator.

Each duo's route becomes a segment chain: a grid shortest-path leg to the
next spill (clipped where it first enters the encircle circle), one full
counterclockwise lap around the spill, and a stationary clean dwell.  Legs
run in wide transit formation; laps run in a tight containment formation so
the boom trails around the slick.  A spill counts as complete when its dwell
ends; realized damage uses those completion times against the same risk
weights the planner optimized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..control import controller_from_config, path_to_setpoints
from ..control.fbl import FblController
from ..dynamics import DuoParams, make_duo, stern_separation
from ..errors import ConfigError
from ..routing import (DP_CAP_DEFAULT, SolveReport, evaluate_damage,
                       solve_pipeline)
from ..scenario import (Scenario, build_motion_graph, rasterize,
                        shortest_path)
from .tracking import hold_duo, run_plan

TRANSIT_SPACING = 10.0   # station spacing on transit legs, m
ENC_SPACING = 3.0        # station spacing on encircle laps, m
ENC_OFFSET = 2.0         # vessel separation while encircling, m
MIN_ENC_RADIUS = 3.0     # keeps the inner offset path away from a point pivot
ARRIVAL_RADIUS = 2.0
LOG_COLUMNS = ("t", "x1", "y1", "theta1", "u1", "x2", "y2", "theta2", "u2")


@dataclass
class MissionResult:
    scenario: Scenario
    report: SolveReport
    logs: list                      # per duo: rows (t, pose1, u1, pose2, u2)
    planned_times: dict             # spill id -> planned completion time, s
    realized_times: dict            # spill id -> simulated completion time, s
    planned_damage: float
    realized_damage: float
    complete: bool
    max_stern_separation: float
    flags: list = field(default_factory=list)  # per-duo failure notes

    def summary(self) -> dict:
        return {
            "planned_damage": self.planned_damage,
            "realized_damage": self.realized_damage,
            "planned_times": {str(k): v for k, v in
                              sorted(self.planned_times.items())},
            "realized_times": {str(k): v for k, v in
                               sorted(self.realized_times.items())},
            "complete": self.complete,
            "max_stern_separation": self.max_stern_separation,
            "routes": [list(r) for r in self.report.best.routes],
            "flags": list(self.flags),
        }


def encircle_radius(perimeter: float) -> float:
    return max(perimeter / (2.0 * math.pi), MIN_ENC_RADIUS)


def _clip_at_circle(poly, center, radius):
    """Walk the polyline and cut it where it first enters the disk; the
    clipped line ends exactly on the circle."""
    cx, cy = center
    out = []
    prev = None
    for pt in poly:
        d = math.hypot(pt[0] - cx, pt[1] - cy)
        if d >= radius:
            out.append(pt)
            prev = pt
            continue
        if prev is None:
            # start already inside: hop radially out to the circle
            if d < 1e-9:
                return [(cx + radius, cy)]
            s = radius / d
            return [(cx + (pt[0] - cx) * s, cy + (pt[1] - cy) * s)]
        # solve |prev + t*(pt - prev) - c| = radius for t in [0, 1]
        dx, dy = pt[0] - prev[0], pt[1] - prev[1]
        fx, fy = prev[0] - cx, prev[1] - cy
        a = dx * dx + dy * dy
        b = 2.0 * (fx * dx + fy * dy)
        c = fx * fx + fy * fy - radius * radius
        disc = max(b * b - 4.0 * a * c, 0.0)
        t = (-b + math.sqrt(disc)) / (2.0 * a) if a > 0 else 0.0
        t = min(max(t, 0.0), 1.0)
        out.append((prev[0] + t * dx, prev[1] + t * dy))
        return out
    return out


def _circle_polyline(center, radius, entry_point, step: float = 0.5):
    """Counterclockwise full lap starting at the circle point nearest
    entry_point."""
    cx, cy = center
    phi0 = math.atan2(entry_point[1] - cy, entry_point[0] - cx)
    n = max(16, math.ceil(2.0 * math.pi * radius / step))
    phis = phi0 + np.linspace(0.0, 2.0 * math.pi, n + 1)
    return [(cx + radius * math.cos(p), cy + radius * math.sin(p))
            for p in phis]


def _polyline_length(poly) -> float:
    return sum(math.hypot(b[0] - a[0], b[1] - a[1])
               for a, b in zip(poly, poly[1:]))


def _run_segment(duo, params, controllers, poly, spacing, offset, u_ref,
                 dt_ctrl, dt_dyn, boom_len):
    plan = path_to_setpoints(poly, spacing=spacing, lateral_offset=offset,
                             u_cruise=u_ref, arrival_radius=ARRIVAL_RADIUS,
                             boom_length=boom_len)
    cap = 3.0 * _polyline_length(poly) / u_ref + 120.0
    if duo is None:
        duo = make_duo(tuple(plan.left[0]), tuple(plan.right[0]), params)
        for ctl, vessel in zip(controllers, (duo.vessel_1, duo.vessel_2)):
            if isinstance(ctl, FblController):
                ctl.prime(0.0, vessel.theta, vessel)
    duo, complete, rows, max_sep = run_plan(duo, params, controllers, plan,
                                            dt_ctrl, dt_dyn, cap)
    refs = ((0.0, plan.left[-1, 2]), (0.0, plan.right[-1, 2]))
    return duo, complete, rows, max_sep, refs


def _fly_route(route, scenario, grid, params, controller_config,
               dt_ctrl, dt_dyn):
    """Execute one duo's route; returns (rows, realized times, complete,
    max separation, flag or None)."""
    boom_len = params.boom.total_length
    spills = {s.id: s for s in scenario.spills}
    controllers = [controller_from_config(controller_config, params.vessel)
                   for _ in range(2)]
    duo = None
    pos = scenario.depot
    blocks = []
    realized = {}
    max_sep = 0.0
    for sid in route:
        spill = spills[sid]
        radius = encircle_radius(spill.perimeter)
        _, leg = shortest_path(grid, pos, spill.centroid)
        leg = _clip_at_circle(leg, spill.centroid, radius)
        if len(leg) >= 2 and _polyline_length(leg) > 1e-9:
            duo, ok, rows, sep, _ = _run_segment(
                duo, params, controllers, leg, TRANSIT_SPACING,
                0.5 * boom_len, scenario.v_transit, dt_ctrl, dt_dyn, boom_len)
            blocks.append(rows)
            max_sep = max(max_sep, sep)
            if not ok:
                return blocks, realized, max_sep, f"leg to spill {sid} timed out"
        entry = leg[-1]
        lap = _circle_polyline(spill.centroid, radius, entry)
        duo, ok, rows, sep, refs = _run_segment(
            duo, params, controllers, lap, ENC_SPACING, ENC_OFFSET,
            scenario.v_encircle, dt_ctrl, dt_dyn, boom_len)
        blocks.append(rows)
        max_sep = max(max_sep, sep)
        if not ok:
            return blocks, realized, max_sep, f"encircle of spill {sid} timed out"
        dwell = scenario.alpha_clean * spill.volume
        if dwell > 0.0:
            duo, rows, sep = hold_duo(duo, params, controllers, refs[0],
                                      refs[1], dwell, dt_ctrl, dt_dyn)
            blocks.append(rows)
            max_sep = max(max_sep, sep)
        realized[sid] = duo.t
        pos = lap[-1]
    return blocks, realized, max_sep, None


def run_mission(scenario: Scenario, solver_config: dict | None = None,
                controller_config: dict | None = None,
                duo_params: DuoParams | None = None,
                dt_ctrl: float = 0.01, dt_dyn: float = 2e-3) -> MissionResult:
    """Route the fleet over the scenario, then simulate every route.

    solver_config keys (all optional): stages, ils_iterations, dp_cap,
    node_limit, seed.  controller_config as in tracking ({"type": "fbl"} or
    {"type": "pid"}, optional "gains").
    """
    scenario.validate()
    params = duo_params or DuoParams()
    params.validate()
    if abs(params.boom.total_length - scenario.boom_length) > 1e-6:
        raise ConfigError("duo boom length must match the scenario boom length")
    cfg = dict(solver_config or {})
    controller_config = controller_config or {"type": "fbl"}
    grid = rasterize(scenario.workspace)
    graph = build_motion_graph(scenario, grid)
    report = solve_pipeline(
        graph, scenario.fleet_size,
        stages=cfg.get("stages", ("dp", "ils", "bnb")),
        ils_iterations=cfg.get("ils_iterations", 200),
        dp_cap=cfg.get("dp_cap", DP_CAP_DEFAULT),
        node_limit=cfg.get("node_limit"),
        seed=cfg.get("seed", 0))
    planned_damage, planned_times = evaluate_damage(graph, report.best)

    logs = []
    realized_times: dict[int, float] = {}
    flags: list[str] = []
    max_sep = 0.0
    for route in report.best.routes:
        if not route:
            logs.append(np.empty((0, len(LOG_COLUMNS))))
            continue
        blocks, realized, sep, flag = _fly_route(
            route, scenario, grid, params, controller_config, dt_ctrl, dt_dyn)
        logs.append(np.vstack(blocks) if blocks
                    else np.empty((0, len(LOG_COLUMNS))))
        realized_times.update(realized)
        max_sep = max(max_sep, sep)
        if flag is not None:
            flags.append(flag)

    realized_damage = sum(graph.risk[sid] * t
                          for sid, t in realized_times.items())
    return MissionResult(
        scenario=scenario,
        report=report,
        logs=logs,
        planned_times=planned_times,
        realized_times=realized_times,
        planned_damage=planned_damage,
        realized_damage=float(realized_damage),
        complete=not flags and len(realized_times) == len(scenario.spills),
        max_stern_separation=max_sep,
        flags=flags,
    )


def write_mission_csv(result: MissionResult, path) -> None:
    """Per-spill planned vs realized table."""
    with open(path, "w", newline="") as fh:
        fh.write("spill,risk,planned_time,realized_time,completed\n")
        risks = {s.id: s.risk for s in result.scenario.spills}
        for sid in sorted(risks):
            planned = result.planned_times.get(sid)
            realized = result.realized_times.get(sid)
            fh.write(",".join([
                str(sid), repr(float(risks[sid])),
                "" if planned is None else repr(float(planned)),
                "" if realized is None else repr(float(realized)),
                "1" if realized is not None else "0"]) + "\n")


def write_mission_logs(result: MissionResult, out_dir, stem="mission") -> None:
    import os
    for i, log in enumerate(result.logs, start=1):
        p = os.path.join(out_dir, f"{stem}_duo{i}.csv")
        with open(p, "w", newline="") as fh:
            fh.write(",".join(LOG_COLUMNS) + "\n")
            for row in log:
                fh.write(",".join(repr(float(v)) for v in row) + "\n")
