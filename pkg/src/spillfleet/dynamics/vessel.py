"""Planar 3-DoF vessel model: surge/sway/yaw with quadratic drag, a single
azimuth propulsor at the stern, and a tow force applied at the same point."""

from __future__ import annotations

import math
from dataclasses import dataclass

from ..errors import NumericError


@dataclass(frozen=True)
class VesselParams:
    m: float = 600.0          # mass, kg
    I: float = 500.0          # yaw inertia, kg m^2
    r: float = 2.0            # propulsor/tow point offset aft of CoM, m
    kappa_l: float = 100.0    # longitudinal drag, N s^2/m^2
    kappa_t: float = 10000.0  # transverse drag, N s^2/m^2
    kappa_w: float = 1000.0   # rotational drag, N m s^2/rad^2
    F_max: float = 5000.0     # thrust limit, N
    eta_max: float = math.pi / 2  # steering limit, rad

    def validate(self) -> None:
        if self.m <= 0 or self.I <= 0 or self.r <= 0:
            raise ValueError("m, I, r must be positive")
        if min(self.kappa_l, self.kappa_t, self.kappa_w) < 0:
            raise ValueError("drag coefficients must be non-negative")
        if self.eta_max > math.pi / 2 + 1e-12:
            raise ValueError("eta_max must not exceed pi/2")


@dataclass
class VesselState:
    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0  # unwrapped heading, rad
    u: float = 0.0      # surge, m/s (body frame)
    v: float = 0.0      # sway, m/s (body frame)
    omega: float = 0.0  # yaw rate, rad/s

    def as_tuple(self):
        return (self.x, self.y, self.theta, self.u, self.v, self.omega)


def clamp_controls(F: float, eta: float, params: VesselParams):
    F = min(max(F, -params.F_max), params.F_max)
    eta = min(max(eta, -params.eta_max), params.eta_max)
    return F, eta


def stern_point(state: VesselState, params: VesselParams):
    """World position of the stern tow point (body offset (-r, 0))."""
    c, s = math.cos(state.theta), math.sin(state.theta)
    return (state.x - params.r * c, state.y - params.r * s)


def stern_velocity(state: VesselState, params: VesselParams):
    """World velocity of the stern point; body value is (u, v - omega*r)."""
    c, s = math.cos(state.theta), math.sin(state.theta)
    bu, bv = state.u, state.v - state.omega * params.r
    return (bu * c - bv * s, bu * s + bv * c)


def vessel_rates(u: float, v: float, omega: float, F: float, eta: float,
                 f_lu: float, f_lv: float, p: VesselParams):
    """Body-frame accelerations.  Thrust and tow force both act at the stern,
    so F sin(eta) enters sway negatively and yaw with moment arm +r, while
    the tow sway component enters yaw with arm -r."""
    ce, se = math.cos(eta), math.sin(eta)
    du = (F * ce - p.kappa_l * abs(u) * u + f_lu) / p.m + omega * v
    dv = (-F * se - p.kappa_t * abs(v) * v + f_lv) / p.m - omega * u
    dw = (p.r * F * se - p.kappa_w * abs(omega) * omega - p.r * f_lv) / p.I
    return du, dv, dw


def vessel_derivative(state: VesselState, F: float, eta: float, f_l,
                      params: VesselParams):
    """Time derivative (dx, dy, dtheta, du, dv, domega).  f_l is the tow
    force in the body frame."""
    vals = (*state.as_tuple(), F, eta, f_l[0], f_l[1])
    if not all(math.isfinite(val) for val in vals):
        raise NumericError("non-finite vessel input")
    c, s = math.cos(state.theta), math.sin(state.theta)
    du, dv, dw = vessel_rates(state.u, state.v, state.omega, F, eta,
                              f_l[0], f_l[1], params)
    return (state.u * c - state.v * s,
            state.u * s + state.v * c,
            state.omega, du, dv, dw)
