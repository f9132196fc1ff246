"""Articulated boom: a chain of rigid links joined by spring-damper pins.

Link i (1..n) has CoM (x_i, y_i), orientation theta_i, body velocities
(v_t along the link, v_n across it), and yaw rate omega_i.  Its endpoints
are N_i = CoM - (l/2) t_hat (left) and M_i = CoM + (l/2) t_hat (right).
Joint j (0..n) sits between body j and body j+1, where body 0 is vessel 1
(its stern is M_0) and body n+1 is vessel 2 (its stern is N_{n+1}).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..errors import ConfigError, NumericError

GAP_EPS = 1e-9


@dataclass(frozen=True)
class BoomParams:
    n_links: int = 40
    total_length: float = 40.0
    link_mass: float = 25.0
    link_inertia: float | None = None  # default: uniform rod, m*l^2/12
    k_spring: float = 1e4
    c_damper: float = 5e2
    kappa_t_link: float = 5.0    # drag on tangential motion (low)
    kappa_l_link: float = 500.0  # drag on normal motion (high)
    kappa_w_link: float = 50.0

    @property
    def link_length(self) -> float:
        return self.total_length / self.n_links

    @property
    def inertia(self) -> float:
        if self.link_inertia is not None:
            return self.link_inertia
        return self.link_mass * self.link_length ** 2 / 12.0

    def validate(self) -> None:
        if self.n_links < 1:
            raise ValueError("need at least one link")
        if self.total_length <= 0 or self.link_mass <= 0:
            raise ValueError("total_length and link_mass must be positive")
        if self.k_spring < 0 or self.c_damper < 0:
            raise ValueError("k_spring and c_damper must be non-negative")

    def dt_cap(self) -> float:
        """Integration step guard for the stiff joint springs."""
        if self.k_spring == 0:
            return math.inf
        return 0.2 / math.sqrt(self.k_spring / self.link_mass)


@dataclass
class BoomState:
    x: np.ndarray       # (n,) CoM x
    y: np.ndarray       # (n,) CoM y
    theta: np.ndarray   # (n,) orientation
    v_t: np.ndarray     # (n,) body tangential velocity
    v_n: np.ndarray     # (n,) body normal velocity
    omega: np.ndarray   # (n,) yaw rate

    @property
    def n_links(self) -> int:
        return self.x.shape[0]

    def tangents(self):
        return np.cos(self.theta), np.sin(self.theta)

    def endpoints(self, link_length: float):
        """Left points N (n,2), right points M (n,2)."""
        c, s = self.tangents()
        half = 0.5 * link_length
        com = np.stack([self.x, self.y], axis=1)
        t_hat = np.stack([c, s], axis=1)
        return com - half * t_hat, com + half * t_hat

    def endpoint_velocities(self, link_length: float):
        """World velocities of N (left) and M (right) points."""
        c, s = self.tangents()
        vx = self.v_t * c - self.v_n * s
        vy = self.v_t * s + self.v_n * c
        half = 0.5 * link_length
        # omega x (l/2) t_hat = omega (l/2) n_hat, with n_hat = (-s, c)
        wx = self.omega * half * (-s)
        wy = self.omega * half * c
        v = np.stack([vx, vy], axis=1)
        w = np.stack([wx, wy], axis=1)
        return v - w, v + w

    def copy(self) -> "BoomState":
        return BoomState(self.x.copy(), self.y.copy(), self.theta.copy(),
                         self.v_t.copy(), self.v_n.copy(), self.omega.copy())


def boom_joint_forces(boom: BoomState, stern_1, stern_2,
                      params: BoomParams) -> np.ndarray:
    """Joint forces J (n+1, 2): J[j] acts on body j at its right point and
    -J[j] on body j+1 at its left point, so every joint pair cancels exactly.

    J[j] = k (A - B) + c [(dA - dB) . e_hat] e_hat, where B is body j's right
    point and A is body j+1's left point.  Gaps under GAP_EPS produce zero
    force (the unit vector is undefined at exact closure).
    """
    (s1_pos, s1_vel), (s2_pos, s2_vel) = stern_1, stern_2
    ln = params.link_length
    N, M = boom.endpoints(ln)
    vN, vM = boom.endpoint_velocities(ln)

    B = np.vstack([np.asarray(s1_pos, float)[None, :], M])       # right of body j
    A = np.vstack([N, np.asarray(s2_pos, float)[None, :]])        # left of body j+1
    dB = np.vstack([np.asarray(s1_vel, float)[None, :], vM])
    dA = np.vstack([vN, np.asarray(s2_vel, float)[None, :]])

    gap = A - B
    dist = np.hypot(gap[:, 0], gap[:, 1])
    ok = dist >= GAP_EPS
    e = np.zeros_like(gap)
    e[ok] = gap[ok] / dist[ok, None]
    rel = dA - dB
    damp = np.einsum("ij,ij->i", rel, e)
    J = params.k_spring * gap + params.c_damper * damp[:, None] * e
    J[~ok] = 0.0
    return J


def boom_derivative(boom: BoomState, joint_forces: np.ndarray,
                    params: BoomParams):
    """Per-link derivatives (dx, dy, dtheta, dv_t, dv_n, domega), each (n,).

    Link i takes F1 = +J[i] at its right point and F0 = -J[i-1] at its left
    point.  Newton-Euler in the body frame with quadratic drag:
        m (dv_t - v_n w) = F . t_hat - kt |v_t| v_t
        m (dv_n + v_t w) = F . n_hat - kl |v_n| v_n
        I dw = -kw |w| w + (l/2) (F1 - F0) . n_hat
    """
    if not np.isfinite(joint_forces).all():
        raise NumericError("non-finite joint force")
    c, s = boom.tangents()
    F0 = -joint_forces[:-1]
    F1 = joint_forces[1:]
    Fx = F0[:, 0] + F1[:, 0]
    Fy = F0[:, 1] + F1[:, 1]
    Ft = Fx * c + Fy * s - params.kappa_t_link * np.abs(boom.v_t) * boom.v_t
    Fn = -Fx * s + Fy * c - params.kappa_l_link * np.abs(boom.v_n) * boom.v_n
    m = params.link_mass
    dv_t = Ft / m + boom.v_n * boom.omega
    dv_n = Fn / m - boom.v_t * boom.omega
    dF = F1 - F0
    torque = (-params.kappa_w_link * np.abs(boom.omega) * boom.omega
              + 0.5 * params.link_length * (-dF[:, 0] * s + dF[:, 1] * c))
    domega = torque / params.inertia
    dx = boom.v_t * c - boom.v_n * s
    dy = boom.v_t * s + boom.v_n * c
    return dx, dy, boom.omega.copy(), dv_t, dv_n, domega


def _arc_pitch(link_length: float, n: int, chord: float) -> float:
    """Per-link turning angle so n links of the given length close a chord.
    Solves l sin(n psi/2) / sin(psi/2) = chord on (0, 2 pi / n)."""

    def span(psi: float) -> float:
        return link_length * math.sin(n * psi / 2.0) / math.sin(psi / 2.0) - chord

    lo, hi = 1e-12, 2.0 * math.pi / n - 1e-12
    return brentq(span, lo, hi, xtol=1e-14, rtol=1e-15)


def init_boom_between(stern_1, stern_2, params: BoomParams,
                      behind=None) -> BoomState:
    """Lay the chain from stern 1 to stern 2 with exactly closed joints.

    At separation ~L the links go straight; at shorter separations the chain
    follows a polygonal arc whose vertices sit on a circle, bulging toward
    `behind` (a direction vector; defaults to the chord's left side).
    """
    p1 = np.asarray(stern_1, float)
    p2 = np.asarray(stern_2, float)
    chord = float(np.hypot(*(p2 - p1)))
    n = params.n_links
    L = params.total_length
    ln = params.link_length
    if chord > L + 1e-9:
        raise ConfigError(
            f"stern separation {chord:.3f} exceeds boom length {L:.3f}")
    if chord < 1e-6:
        raise ConfigError("sterns are coincident; boom layout undefined")

    if chord >= L - 1e-9:
        ts = np.linspace(0.0, 1.0, n + 1)
        verts = p1[None, :] + ts[:, None] * (p2 - p1)[None, :]
    else:
        psi = _arc_pitch(ln, n, chord)
        rho = ln / (2.0 * math.sin(psi / 2.0))
        half_span = n * psi / 2.0
        chord_dir = (p2 - p1) / chord
        normal = np.array([-chord_dir[1], chord_dir[0]])  # left of the chord
        if behind is not None:
            b = np.asarray(behind, float)
            if float(normal @ b) < 0:
                normal = -normal
        h = rho * math.cos(half_span)
        center = 0.5 * (p1 + p2) - h * normal
        a1 = math.atan2(*(p1 - center)[::-1])
        a2 = math.atan2(*(p2 - center)[::-1])
        sweep = (a2 - a1) % (2.0 * math.pi)
        if not math.isclose(sweep, n * psi, rel_tol=0, abs_tol=1e-6):
            sweep -= 2.0 * math.pi  # go the short way around
        angles = a1 + sweep * np.arange(n + 1) / n
        verts = center[None, :] + rho * np.stack(
            [np.cos(angles), np.sin(angles)], axis=1)

    seg = verts[1:] - verts[:-1]
    com = 0.5 * (verts[1:] + verts[:-1])
    theta = np.arctan2(seg[:, 1], seg[:, 0])
    zeros = np.zeros(n)
    return BoomState(x=com[:, 0], y=com[:, 1], theta=theta,
                     v_t=zeros.copy(), v_n=zeros.copy(), omega=zeros.copy())
