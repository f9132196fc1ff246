"""Route-to-setpoint conversion and the hold-and-align supervisor.

A centerline polyline is resampled at fixed arc-length spacing; each sample
spawns a left/right setpoint pair offset by half the lateral separation
along the local normal, sharing the center tangent as heading reference.
The supervisor walks both vessels through the pairs in lockstep: a vessel
that reaches its setpoint holds (u_ref = 0) until the partner arrives, then
both advance together, which keeps the stern separation bounded.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError


def wrap_angle(a: float) -> float:
    """Shortest equivalent angle in (-pi, pi]."""
    w = math.fmod(a + math.pi, 2.0 * math.pi)
    if w <= 0.0:
        w += 2.0 * math.pi
    return w - math.pi


def _vertex_tangents(pts: np.ndarray) -> np.ndarray:
    """Unit tangents per vertex: central differences inside, one-sided at
    the ends."""
    d = np.empty_like(pts)
    d[1:-1] = pts[2:] - pts[:-2]
    d[0] = pts[1] - pts[0]
    d[-1] = pts[-1] - pts[-2]
    norm = np.hypot(d[:, 0], d[:, 1])
    if norm.min() <= 0:
        raise ConfigError("polyline has coincident consecutive vertices")
    return d / norm[:, None]


def offset_polyline(pts: np.ndarray, offset: float) -> np.ndarray:
    """Parallel curve at signed distance `offset` (positive = left)."""
    t = _vertex_tangents(np.asarray(pts, float))
    normal = np.stack([-t[:, 1], t[:, 0]], axis=1)
    return np.asarray(pts, float) + offset * normal


def polyline_length(pts: np.ndarray) -> float:
    seg = np.diff(np.asarray(pts, float), axis=0)
    return float(np.hypot(seg[:, 0], seg[:, 1]).sum())


def resample_polyline(pts: np.ndarray, spacing: float):
    """Points and tangent headings at arc lengths 0, spacing, 2*spacing...
    plus the final point.  Returns (samples (m,2), headings (m,))."""
    pts = np.asarray(pts, float)
    if spacing <= 0:
        raise ConfigError("spacing must be positive")
    seg = np.diff(pts, axis=0)
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    keep = seg_len > 0
    if not keep.all():
        # drop zero-length segments so tangents stay defined
        pts = np.vstack([pts[:1], pts[1:][keep]])
        seg = np.diff(pts, axis=0)
        seg_len = np.hypot(seg[:, 0], seg[:, 1])
    total = float(seg_len.sum())
    if total <= 0:
        raise ConfigError("path has zero length")
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    stations = list(np.arange(0.0, total, spacing))
    if total - stations[-1] > 1e-9:
        stations.append(total)
    else:
        stations[-1] = total
    out = np.empty((len(stations), 2))
    heading = np.empty(len(stations))
    j = 0
    for i, s in enumerate(stations):
        while j < len(seg_len) - 1 and cum[j + 1] < s:
            j += 1
        frac = (s - cum[j]) / seg_len[j]
        out[i] = pts[j] + frac * seg[j]
        heading[i] = math.atan2(seg[j, 1], seg[j, 0])
    return out, heading


@dataclass(frozen=True)
class SetpointPlan:
    left: np.ndarray        # (m, 3): x, y, heading_ref
    right: np.ndarray       # (m, 3)
    u_cruise: float
    arrival_radius: float
    lateral_offset: float

    def __len__(self) -> int:
        return self.left.shape[0]


def path_to_setpoints(path, spacing: float, lateral_offset: float,
                      u_cruise: float = 2.0, arrival_radius: float = 2.0,
                      boom_length: float | None = None) -> SetpointPlan:
    """Resample the centerline and emit offset setpoint pairs.

    Both vessels reference the center-path tangent as heading; the left
    vessel rides +lateral_offset/2 along the normal, the right one the
    mirror.  If boom_length is given, offsets that the boom cannot span
    are rejected.
    """
    if lateral_offset <= 0:
        raise ConfigError("lateral_offset must be positive")
    if boom_length is not None and lateral_offset >= boom_length:
        raise ConfigError(
            f"lateral offset {lateral_offset} must stay below the boom "
            f"length {boom_length}")
    center, heading = resample_polyline(path, spacing)
    half = 0.5 * lateral_offset
    normal = np.stack([-np.sin(heading), np.cos(heading)], axis=1)
    left = np.column_stack([center + half * normal, heading])
    right = np.column_stack([center - half * normal, heading])
    return SetpointPlan(left=left, right=right, u_cruise=u_cruise,
                        arrival_radius=arrival_radius,
                        lateral_offset=lateral_offset)


def _blend_angles(a: float, b: float, w: float) -> float:
    """Interpolate along the shorter arc from a to b."""
    return a + w * wrap_angle(b - a)


# slack over the station-to-station hop before a vessel counts as lost;
# on a short closed loop nothing is ever far from the path itself, so
# being lost is judged against the active station instead
RECOVER_MARGIN = 4.0
# station hops below this walk by point pursuit: with stations packed
# tighter than the lookahead, a projected tangent reference carries no
# usable information and its saturated correction can point anywhere
HOP_LOS_MIN = 6.0


def los_heading(path_pts: np.ndarray, pose, lookahead: float,
                offset: float = 0.0,
                terminal_heading: float | None = None) -> float:
    """Line-of-sight heading for holding a signed offset from a polyline.

    Projects the position onto the nearest segment, measures the signed
    cross-track e (positive left), and corrects the local direction by
    atan2(offset - e, lookahead): on the commanded offset line the
    correction vanishes, away from it the reference steers back.  The
    local direction blends adjacent chord headings by arc length so the
    reference does not staircase at polyline vertices.  Projecting
    against the shared centerline instead of each vessel's own offset
    path keeps the reference defined even where the inner parallel curve
    degenerates (turn radius at or below half the lateral separation);
    chasing a displaced aim point instead would shrink the effective
    lookahead on the inner side and spiral at tight turns.

    Within `lookahead` of the path end the geometry stops advancing, so
    the caller's terminal_heading takes over there when given.
    """
    pts = np.asarray(path_pts, float)
    a = pts[:-1]
    d = pts[1:] - a
    seg_len = np.hypot(d[:, 0], d[:, 1])
    keep = seg_len > 1e-9
    a, d, seg_len = a[keep], d[keep], seg_len[keep]
    p = np.asarray((pose[0], pose[1]), float)
    w = p - a
    tpar = np.clip((w * d).sum(axis=1) / seg_len ** 2, 0.0, 1.0)
    diff = w - tpar[:, None] * d
    j = int(np.argmin((diff * diff).sum(axis=1)))
    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    if terminal_heading is not None:
        s_foot = cum[j] + tpar[j] * seg_len[j]
        if s_foot + lookahead >= cum[-1]:
            return terminal_heading
    e = (d[j, 0] * diff[j, 1] - d[j, 1] * diff[j, 0]) / seg_len[j]
    psi = math.atan2(d[j, 1], d[j, 0])
    x = tpar[j]
    if x < 0.5 and j > 0:
        prev = math.atan2(d[j - 1, 1], d[j - 1, 0])
        psi = _blend_angles(prev, psi, x + 0.5)
    elif x >= 0.5 and j < len(seg_len) - 1:
        nxt = math.atan2(d[j + 1, 1], d[j + 1, 0])
        psi = _blend_angles(psi, nxt, x - 0.5)
    return psi + math.atan2(offset - e, lookahead)


@dataclass(frozen=True)
class SupervisorState:
    index: int = 0
    arrived_1: bool = False
    arrived_2: bool = False
    mode: str = "cruise"      # cruise | hold | aligned-advance | terminal


def _arrived(pose, station, radius: float) -> bool:
    """Inside the arrival disk, or past the plane through the station
    perpendicular to its heading.  The plane test keeps a fast or
    tension-dragged vessel from shuttling forever after overshooting
    the disk; arrival is latched by the caller either way."""
    dx = pose[0] - station[0]
    dy = pose[1] - station[1]
    if math.hypot(dx, dy) <= radius:
        return True
    return dx * math.cos(station[2]) + dy * math.sin(station[2]) > 0.0


def supervisor_step(plan: SetpointPlan, sup: SupervisorState, poses,
                    lookahead: float = 6.0):
    """Hold-and-align update.  poses = ((x1, y1, ...), (x2, y2, ...)).

    Returns (u_ref_1, theta_ref_1, u_ref_2, theta_ref_2, new_state).
    Arrival flags latch on reaching the station; an arrived vessel holds
    at u_ref = 0 until the partner arrives, then both advance one index
    at cruise speed.  At the final pair the duo parks (terminal mode).

    Heading references follow a line-of-sight law against the station
    centerline with each vessel's signed lateral offset as the target.
    Without that feedback the coupled duo is laterally open loop: boom
    tension walks both vessels off their offset paths, stations stop
    being reachable and the stern separation grows past the boom length.
    When stations are packed tighter than the lookahead (dense loops) the
    projected tangent carries no information, so guidance degrades to
    point pursuit of the active station; a vessel dragged far off its
    station recovers the same way.
    """
    i = sup.index
    last = len(plan) - 1
    a1 = sup.arrived_1 or _arrived(poses[0], plan.left[i],
                                   plan.arrival_radius)
    a2 = sup.arrived_2 or _arrived(poses[1], plan.right[i],
                                   plan.arrival_radius)
    if a1 and a2:
        if i == last:
            new = SupervisorState(i, True, True, "terminal")
            return 0.0, plan.left[i, 2], 0.0, plan.right[i, 2], new
        i += 1
        a1 = a2 = False
        mode = "aligned-advance"
    else:
        mode = "hold" if (a1 or a2) else "cruise"
    new = SupervisorState(i, a1, a2, mode)
    # window the guidance polyline around the active station: a curled
    # path can pass closer to the vessel than its own local branch, and
    # an unwindowed projection would snap the aim point onto that branch
    lo = max(i - 3, 0)
    hi = min(i + 4, len(plan))
    half = 0.5 * plan.lateral_offset
    at_end = hi == len(plan)
    if hi - lo < 2:
        th1, th2 = plan.left[i, 2], plan.right[i, 2]
    else:
        nxt = min(i + 1, last)
        # the outer vessel's stations hop farther than the centerline's on
        # curves, so lost-vessel checks are sized to the larger hop
        hop = max(
            math.hypot(plan.left[nxt, 0] - plan.left[nxt - 1, 0],
                       plan.left[nxt, 1] - plan.left[nxt - 1, 1]),
            math.hypot(plan.right[nxt, 0] - plan.right[nxt - 1, 0],
                       plan.right[nxt, 1] - plan.right[nxt - 1, 1]))
        d1 = math.hypot(poses[0][0] - plan.left[i, 0],
                        poses[0][1] - plan.left[i, 1])
        d2 = math.hypot(poses[1][0] - plan.right[i, 0],
                        poses[1][1] - plan.right[i, 1])
        if hop < HOP_LOS_MIN:
            th1 = (plan.left[i, 2] if d1 <= plan.arrival_radius else
                   math.atan2(plan.left[i, 1] - poses[0][1],
                              plan.left[i, 0] - poses[0][0]))
            th2 = (plan.right[i, 2] if d2 <= plan.arrival_radius else
                   math.atan2(plan.right[i, 1] - poses[1][1],
                              plan.right[i, 0] - poses[1][0]))
        else:
            center = 0.5 * (plan.left[lo:hi, :2] + plan.right[lo:hi, :2])
            far_limit = hop + RECOVER_MARGIN
            if d1 > far_limit:
                th1 = math.atan2(plan.left[i, 1] - poses[0][1],
                                 plan.left[i, 0] - poses[0][0])
            else:
                th1 = los_heading(center, poses[0], lookahead, offset=half,
                                  terminal_heading=plan.left[last, 2]
                                  if at_end else None)
            if d2 > far_limit:
                th2 = math.atan2(plan.right[i, 1] - poses[1][1],
                                 plan.right[i, 0] - poses[1][0])
            else:
                th2 = los_heading(center, poses[1], lookahead, offset=-half,
                                  terminal_heading=plan.right[last, 2]
                                  if at_end else None)
    u1 = 0.0 if a1 else plan.u_cruise
    u2 = 0.0 if a2 else plan.u_cruise
    return u1, th1, u2, th2, new
