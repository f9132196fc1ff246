"""Shortest bounded-curvature paths between poses.

Candidate paths are the six three-segment words over {L, S, R}: four
circle-straight-circle words built from tangent lines between the turning
circles and two circle-circle-circle words built from a middle circle
tangent to both end circles.  The shortest feasible candidate wins.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError

TWO_PI = 2.0 * math.pi

# evaluation order breaks length ties deterministically
WORDS = ("LSL", "RSR", "LSR", "RSL", "RLR", "LRL")

DEFAULT_STEP = 0.5


def _mod2pi(a: float) -> float:
    r = math.fmod(a, TWO_PI)
    return r + TWO_PI if r < 0.0 else r


def _left_center(pose, rho):
    x, y, th = pose
    return (x - rho * math.sin(th), y + rho * math.cos(th))


def _right_center(pose, rho):
    x, y, th = pose
    return (x + rho * math.sin(th), y - rho * math.cos(th))


def _csc(word: str, start, goal, rho: float):
    """Segment lengths for one circle-straight-circle word, or None."""
    first, last = word[0], word[2]
    c1 = _left_center(start, rho) if first == "L" else _right_center(start, rho)
    c2 = _left_center(goal, rho) if last == "L" else _right_center(goal, rho)
    dx, dy = c2[0] - c1[0], c2[1] - c1[1]
    dist = math.hypot(dx, dy)
    if first == last:
        # outer tangent, parallel to the center line; psi is arbitrary
        # when the circles coincide (pure-arc degenerate case)
        psi = math.atan2(dy, dx) if dist > 1e-12 else start[2]
        straight = dist
    else:
        if dist < 2.0 * rho:
            return None
        straight = math.sqrt(dist * dist - 4.0 * rho * rho)
        shift = math.atan2(2.0 * rho, straight)
        phi = math.atan2(dy, dx)
        psi = phi + shift if first == "L" else phi - shift
    t1 = _mod2pi(psi - start[2]) if first == "L" else _mod2pi(start[2] - psi)
    t2 = _mod2pi(goal[2] - psi) if last == "L" else _mod2pi(psi - goal[2])
    return (rho * t1, straight, rho * t2)


def _ccc(word: str, start, goal, rho: float):
    """Best circle-circle-circle candidate for RLR or LRL, or None."""
    left = word == "LRL"
    c1 = _left_center(start, rho) if left else _right_center(start, rho)
    c2 = _left_center(goal, rho) if left else _right_center(goal, rho)
    dx, dy = c2[0] - c1[0], c2[1] - c1[1]
    dist = math.hypot(dx, dy)
    if dist > 4.0 * rho or dist < 1e-12:
        return None
    h = math.sqrt(4.0 * rho * rho - 0.25 * dist * dist)
    mx, my = c1[0] + 0.5 * dx, c1[1] + 0.5 * dy
    nx, ny = -dy / dist, dx / dist
    best = None
    for sgn in (1.0, -1.0):
        c3 = (mx + sgn * h * nx, my + sgn * h * ny)
        ax, ay = 0.5 * (c1[0] + c3[0]), 0.5 * (c1[1] + c3[1])
        bx, by = 0.5 * (c2[0] + c3[0]), 0.5 * (c2[1] + c3[1])
        ang = math.atan2
        a1s = ang(start[1] - c1[1], start[0] - c1[0])
        a1e = ang(ay - c1[1], ax - c1[0])
        ams = ang(ay - c3[1], ax - c3[0])
        ame = ang(by - c3[1], bx - c3[0])
        a2s = ang(by - c2[1], bx - c2[0])
        a2e = ang(goal[1] - c2[1], goal[0] - c2[0])
        if left:
            t1 = _mod2pi(a1e - a1s)
            tm = _mod2pi(ams - ame)   # middle arc turns the other way
            t2 = _mod2pi(a2e - a2s)
        else:
            t1 = _mod2pi(a1s - a1e)
            tm = _mod2pi(ame - ams)
            t2 = _mod2pi(a2s - a2e)
        cand = (rho * t1, rho * tm, rho * t2)
        if best is None or sum(cand) < sum(best):
            best = cand
    return best


@dataclass(frozen=True)
class DubinsPath:
    word: str
    rho: float
    start: tuple
    goal: tuple
    seg_lengths: tuple
    polyline: np.ndarray   # (N, 2) sampled at a fixed arc step

    @property
    def length(self) -> float:
        return sum(self.seg_lengths)


def _advance(pose, kind: str, length: float, rho: float, s: float):
    """Pose after arc length s along one segment starting from `pose`."""
    x, y, th = pose
    if kind == "S":
        return (x + s * math.cos(th), y + s * math.sin(th), th)
    sgn = 1.0 if kind == "L" else -1.0
    dth = sgn * s / rho
    cx = x - sgn * rho * math.sin(th)
    cy = y + sgn * rho * math.cos(th)
    th2 = th + dth
    return (cx + sgn * rho * math.sin(th2), cy - sgn * rho * math.cos(th2),
            th2)


def sample_word(start, word: str, seg_lengths, rho: float,
                step: float = DEFAULT_STEP) -> np.ndarray:
    """Polyline along a word at a fixed arc step, including both endpoints."""
    pts = [(start[0], start[1])]
    pose = tuple(start)
    for kind, seg_len in zip(word, seg_lengths):
        if seg_len <= 0.0:
            continue
        n = max(1, math.ceil(seg_len / step))
        for j in range(1, n + 1):
            p = _advance(pose, kind, seg_len, rho, seg_len * j / n)
            pts.append((p[0], p[1]))
        pose = _advance(pose, kind, seg_len, rho, seg_len)
    return np.asarray(pts, dtype=float)


def dubins_path(start, goal, rho: float,
                step: float = DEFAULT_STEP) -> DubinsPath:
    """Shortest Dubins path from pose (x, y, theta) to pose, radius rho."""
    if not rho > 0.0:
        raise ConfigError("turning radius must be positive")
    if step <= 0.0:
        raise ConfigError("sampling step must be positive")
    start = (float(start[0]), float(start[1]), float(start[2]))
    goal = (float(goal[0]), float(goal[1]), float(goal[2]))
    best_word, best = None, None
    for word in WORDS:
        cand = (_ccc(word, start, goal, rho) if word[1] != "S"
                else _csc(word, start, goal, rho))
        if cand is None:
            continue
        if best is None or sum(cand) < sum(best) - 1e-12:
            best_word, best = word, cand
    poly = sample_word(start, best_word, best, rho, step)
    return DubinsPath(word=best_word, rho=rho, start=start, goal=goal,
                      seg_lengths=tuple(best), polyline=poly)
