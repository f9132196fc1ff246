"""Coupled boom-towing duo: two vessels joined by the articulated boom.

State is kept flat for the integrator:
    [vessel1 (x,y,th,u,v,w), vessel2 (same), link x (n,), link y (n,),
     link theta (n,), link v_t (n,), link v_n (n,), link omega (n,)]
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, NumericError
from .boom import GAP_EPS, BoomParams, BoomState, boom_joint_forces, init_boom_between
from .vessel import VesselParams, VesselState, clamp_controls, vessel_rates


@dataclass(frozen=True)
class DuoParams:
    vessel: VesselParams = VesselParams()
    boom: BoomParams = BoomParams()

    def validate(self) -> None:
        self.vessel.validate()
        self.boom.validate()


@dataclass
class DuoState:
    t: float
    flat: np.ndarray          # (12 + 6n,)
    f_l_1: np.ndarray         # tow force on vessel 1, body frame (2,)
    f_l_2: np.ndarray         # tow force on vessel 2, body frame (2,)

    @property
    def n_links(self) -> int:
        return (self.flat.shape[0] - 12) // 6

    @property
    def vessel_1(self) -> VesselState:
        return VesselState(*self.flat[0:6])

    @property
    def vessel_2(self) -> VesselState:
        return VesselState(*self.flat[6:12])

    @property
    def boom(self) -> BoomState:
        n = self.n_links
        b = self.flat[12:]
        return BoomState(x=b[0:n], y=b[n:2 * n], theta=b[2 * n:3 * n],
                         v_t=b[3 * n:4 * n], v_n=b[4 * n:5 * n],
                         omega=b[5 * n:6 * n])

    def copy(self) -> "DuoState":
        return DuoState(self.t, self.flat.copy(), self.f_l_1.copy(),
                        self.f_l_2.copy())


def _vessel_stern(six, r):
    x, y, th, u, v, w = six
    c, s = math.cos(th), math.sin(th)
    pos = (x - r * c, y - r * s)
    bu, bv = u, v - w * r
    vel = (bu * c - bv * s, bu * s + bv * c)
    return pos, vel


def _boom_view(flat: np.ndarray, n: int) -> BoomState:
    b = flat[12:]
    return BoomState(x=b[0:n], y=b[n:2 * n], theta=b[2 * n:3 * n],
                     v_t=b[3 * n:4 * n], v_n=b[4 * n:5 * n],
                     omega=b[5 * n:6 * n])


def tow_forces(flat: np.ndarray, params: DuoParams):
    """Joint forces at the two boom ends, world frame: (on vessel 1,
    on vessel 2, full joint array)."""
    n = params.boom.n_links
    s1 = _vessel_stern(flat[0:6], params.vessel.r)
    s2 = _vessel_stern(flat[6:12], params.vessel.r)
    J = boom_joint_forces(_boom_view(flat, n), s1, s2, params.boom)
    return J[0], -J[-1], J


def _world_to_body(fx: float, fy: float, theta: float):
    c, s = math.cos(theta), math.sin(theta)
    return fx * c + fy * s, -fx * s + fy * c


def duo_derivative(flat: np.ndarray, controls, params: DuoParams) -> np.ndarray:
    """Time derivative of the flat duo state.  Same physics as composing
    boom_joint_forces + boom_derivative + vessel_rates, fused into one pass
    over the link arrays (this sits inside the RK4 inner loop)."""
    F1, eta1, F2, eta2 = controls
    vp, bp = params.vessel, params.boom
    n = bp.n_links
    half = 0.5 * bp.link_length
    b = flat[12:]
    x = b[0:n]
    y = b[n:2 * n]
    vt = b[3 * n:4 * n]
    vn = b[4 * n:5 * n]
    om = b[5 * n:6 * n]
    c = np.cos(b[2 * n:3 * n])
    s = np.sin(b[2 * n:3 * n])

    hx = half * c
    hy = half * s
    vx = vt * c - vn * s
    vy = vt * s + vn * c
    wx = -(half * om) * s
    wy = (half * om) * c

    stern = []
    for base in (0, 6):
        X, Y, TH, U, V, W = flat[base:base + 6].tolist()
        ct, st = math.cos(TH), math.sin(TH)
        bu, bv = U, V - W * vp.r
        stern.append((X - vp.r * ct, Y - vp.r * st,
                      bu * ct - bv * st, bu * st + bv * ct, ct, st))

    # joint gaps: A (left point of body j+1) minus B (right point of body j)
    gx = np.empty(n + 1)
    gy = np.empty(n + 1)
    dgx = np.empty(n + 1)
    dgy = np.empty(n + 1)
    gx[0] = x[0] - hx[0] - stern[0][0]
    gy[0] = y[0] - hy[0] - stern[0][1]
    dgx[0] = vx[0] - wx[0] - stern[0][2]
    dgy[0] = vy[0] - wy[0] - stern[0][3]
    np.subtract(x[1:] - hx[1:], x[:-1] + hx[:-1], out=gx[1:n])
    np.subtract(y[1:] - hy[1:], y[:-1] + hy[:-1], out=gy[1:n])
    np.subtract(vx[1:] - wx[1:], vx[:-1] + wx[:-1], out=dgx[1:n])
    np.subtract(vy[1:] - wy[1:], vy[:-1] + wy[:-1], out=dgy[1:n])
    gx[n] = stern[1][0] - (x[n - 1] + hx[n - 1])
    gy[n] = stern[1][1] - (y[n - 1] + hy[n - 1])
    dgx[n] = stern[1][2] - (vx[n - 1] + wx[n - 1])
    dgy[n] = stern[1][3] - (vy[n - 1] + wy[n - 1])

    dist = np.hypot(gx, gy)
    inv = 1.0 / np.maximum(dist, GAP_EPS)
    ex = gx * inv
    ey = gy * inv
    damp = (dgx * ex + dgy * ey) * bp.c_damper
    live = dist >= GAP_EPS
    Jx = (bp.k_spring * gx + damp * ex) * live
    Jy = (bp.k_spring * gy + damp * ey) * live

    out = np.empty_like(flat)
    ends = ((F1, eta1, Jx[0], Jy[0]), (F2, eta2, -Jx[n], -Jy[n]))
    for base, (F, eta, jx, jy) in zip((0, 6), ends):
        U, V, W = flat[base + 3:base + 6].tolist()
        ct, st = stern[0 if base == 0 else 1][4:6]
        flu = jx * ct + jy * st
        flv = -jx * st + jy * ct
        du, dv, dw = vessel_rates(U, V, W, F, eta, flu, flv, vp)
        out[base:base + 6] = (U * ct - V * st, U * st + V * ct, W, du, dv, dw)

    Fx = Jx[1:] - Jx[:-1]          # F0 + F1 on link i
    Fy = Jy[1:] - Jy[:-1]
    Sx = Jx[1:] + Jx[:-1]          # F1 - F0 on link i
    Sy = Jy[1:] + Jy[:-1]
    Ft = Fx * c + Fy * s - bp.kappa_t_link * np.abs(vt) * vt
    Fn = Fy * c - Fx * s - bp.kappa_l_link * np.abs(vn) * vn
    inv_m = 1.0 / bp.link_mass
    torque = half * (Sy * c - Sx * s) - bp.kappa_w_link * np.abs(om) * om
    ob = out[12:]
    ob[0:n] = vx
    ob[n:2 * n] = vy
    ob[2 * n:3 * n] = om
    ob[3 * n:4 * n] = Ft * inv_m + vn * om
    ob[4 * n:5 * n] = Fn * inv_m - vt * om
    ob[5 * n:6 * n] = torque / bp.inertia
    return out


def _rk4(flat: np.ndarray, controls, dt: float, params: DuoParams) -> np.ndarray:
    k1 = duo_derivative(flat, controls, params)
    k2 = duo_derivative(flat + (0.5 * dt) * k1, controls, params)
    k3 = duo_derivative(flat + (0.5 * dt) * k2, controls, params)
    k4 = duo_derivative(flat + dt * k3, controls, params)
    return flat + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _check_dt(dt: float, params: DuoParams) -> None:
    if dt <= 0:
        raise ConfigError("dt must be positive")
    cap = params.boom.dt_cap()
    if dt > cap:
        raise ConfigError(
            f"dt={dt} exceeds the spring stability cap {cap:.6g}")


def _attach_tensions(t: float, flat: np.ndarray, params: DuoParams) -> DuoState:
    f1w, f2w, _ = tow_forces(flat, params)
    th1 = flat[2]
    th2 = flat[8]
    f1 = np.array(_world_to_body(f1w[0], f1w[1], th1))
    f2 = np.array(_world_to_body(f2w[0], f2w[1], th2))
    return DuoState(t=t, flat=flat, f_l_1=f1, f_l_2=f2)


def step(duo: DuoState, controls, dt: float, params: DuoParams) -> DuoState:
    """Advance one RK4 step with zero-order-hold controls
    (F_1, eta_1, F_2, eta_2), clamped to actuator limits."""
    return step_n(duo, controls, dt, 1, params)


def step_n(duo: DuoState, controls, dt: float, n_steps: int,
           params: DuoParams) -> DuoState:
    """n_steps RK4 steps under held controls; one state object at the end."""
    _check_dt(dt, params)
    F1, eta1 = clamp_controls(controls[0], controls[1], params.vessel)
    F2, eta2 = clamp_controls(controls[2], controls[3], params.vessel)
    held = (F1, eta1, F2, eta2)
    flat = duo.flat
    for _ in range(n_steps):
        flat = _rk4(flat, held, dt, params)
    if not np.isfinite(flat).all():
        raise NumericError("simulation diverged (non-finite state)")
    return _attach_tensions(duo.t + n_steps * dt, flat, params)


def make_duo(pose_1, pose_2, params: DuoParams,
             velocity=(0.0, 0.0)) -> DuoState:
    """Duo at the given vessel poses (x, y, theta) with the boom laid
    gap-free between the sterns, bulging behind the mean heading.  The
    optional world `velocity` is applied uniformly to every body."""
    params.validate()
    flat = np.zeros(12 + 6 * params.boom.n_links)
    flat[0:3] = pose_1
    flat[6:9] = pose_2
    s1, _ = _vessel_stern(flat[0:6], params.vessel.r)
    s2, _ = _vessel_stern(flat[6:12], params.vessel.r)
    hx = math.cos(pose_1[2]) + math.cos(pose_2[2])
    hy = math.sin(pose_1[2]) + math.sin(pose_2[2])
    boom = init_boom_between(s1, s2, params.boom, behind=(-hx, -hy))
    n = params.boom.n_links
    b = flat[12:]
    b[0:n] = boom.x
    b[n:2 * n] = boom.y
    b[2 * n:3 * n] = boom.theta
    vx, vy = velocity
    if vx or vy:
        for base in (0, 6):
            th = flat[base + 2]
            flat[base + 3] = vx * math.cos(th) + vy * math.sin(th)
            flat[base + 4] = -vx * math.sin(th) + vy * math.cos(th)
        c, s = np.cos(boom.theta), np.sin(boom.theta)
        b[3 * n:4 * n] = vx * c + vy * s
        b[4 * n:5 * n] = -vx * s + vy * c
    return _attach_tensions(0.0, flat, params)


def stern_separation(duo: DuoState, params: DuoParams) -> float:
    s1, _ = _vessel_stern(duo.flat[0:6], params.vessel.r)
    s2, _ = _vessel_stern(duo.flat[6:12], params.vessel.r)
    return math.hypot(s2[0] - s1[0], s2[1] - s1[1])


def kinetic_energy(duo: DuoState, params: DuoParams) -> float:
    vp, bp = params.vessel, params.boom
    e = 0.0
    for base in (0, 6):
        u, v, w = duo.flat[base + 3:base + 6]
        e += 0.5 * vp.m * (u * u + v * v) + 0.5 * vp.I * w * w
    boom = duo.boom
    e += float(0.5 * bp.link_mass * (boom.v_t ** 2 + boom.v_n ** 2).sum())
    e += float(0.5 * bp.inertia * (boom.omega ** 2).sum())
    return e


def spring_energy(duo: DuoState, params: DuoParams) -> float:
    n = params.boom.n_links
    s1 = _vessel_stern(duo.flat[0:6], params.vessel.r)
    s2 = _vessel_stern(duo.flat[6:12], params.vessel.r)
    boom = _boom_view(duo.flat, n)
    ln = params.boom.link_length
    N, M = boom.endpoints(ln)
    B = np.vstack([np.asarray(s1[0], float)[None, :], M])
    A = np.vstack([N, np.asarray(s2[0], float)[None, :]])
    gap2 = ((A - B) ** 2).sum(axis=1)
    return float(0.5 * params.boom.k_spring * gap2.sum())
