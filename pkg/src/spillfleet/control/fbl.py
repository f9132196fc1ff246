"""Feedback-linearizing tracking controller.

The stern propulsor gives two independent handles, F cos(eta) on surge and
F sin(eta) on yaw.  Subtracting the lumped model terms (d_u, d_w) reduces
those channels to pure integrators u' = gamma_u a_u and theta'' = gamma_w
a_w, each closed by a lead loop.  The thrust vector is then rebuilt with
non-negative magnitude.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..dynamics.vessel import VesselParams, VesselState, clamp_controls
from .lead import LeadLoop, beta_from_phase_margin
from .setpoints import wrap_angle


def _beta_u_default() -> float:
    return beta_from_phase_margin(math.radians(20.0))


@dataclass(frozen=True)
class FblGains:
    """Lead-loop tuning.  The yaw defaults are deliberately lightly damped
    (beta_w = 2.5 instead of the 60-degree-margin 13.93): heavy yaw damping
    leaves the sway decay stuck on its slow quadratic-drag tail and cannot
    turn tightly enough to track curved paths at speed.  Use
    beta_from_phase_margin to dial in a specific margin instead."""

    omega_c_u: float = 0.8
    beta_u: float = field(default_factory=_beta_u_default)
    omega_c_w: float = 2.0
    beta_w: float = 2.5
    tau_ref: float = 0.5

    def validate(self) -> None:
        if self.omega_c_u <= 0 or self.omega_c_w <= 0:
            raise ValueError("crossover frequencies must be positive")
        if self.beta_u <= 0:
            raise ValueError("beta_u must be positive")
        if self.beta_w <= 1:
            raise ValueError("beta_w must exceed 1 (yaw Routh condition)")
        if self.tau_ref < 0:
            raise ValueError("tau_ref must be non-negative")

    def k_u(self, params: VesselParams) -> float:
        """Surge lead gain: gamma_u K = omega_c_u closes the loop on
        s^2 + 2 sqrt(beta_u) omega_c_u s + omega_c_u^2."""
        return self.omega_c_u * params.m

    def k_w(self, params: VesselParams) -> float:
        """Yaw lead gain: gamma_w K = omega_c_w^2 closes the loop on
        s^3 + sqrt(b) W s^2 + sqrt(b) W^2 s + W^3."""
        return self.omega_c_w ** 2 * params.I / params.r


def fbl_disturbance_terms(state: VesselState, f_l, params: VesselParams):
    """Lumped non-actuation terms in the surge and yaw force channels:
    d_u = kappa_l |u| u - f_lu - m w v,  d_w = kappa_w |w| w / r + f_lv."""
    u, v, w = state.u, state.v, state.omega
    d_u = params.kappa_l * abs(u) * u - f_l[0] - params.m * w * v
    d_w = params.kappa_w * abs(w) * w / params.r + f_l[1]
    return d_u, d_w


class FblController:
    """Stateful per-vessel FBL controller (two lead loops + reconstruction).

    use_tension=False drops the measured tow force from the lumped terms,
    leaving only the model-known drag and coriolis parts.
    """

    def __init__(self, gains: FblGains, params: VesselParams,
                 topology: str = "normalized", use_tension: bool = True):
        gains.validate()
        self.gains = gains
        self.params = params
        self.use_tension = use_tension
        self.surge_loop = LeadLoop(gains.k_u(params), gains.beta_u,
                                   gains.omega_c_u, gains.tau_ref, topology)
        self.yaw_loop = LeadLoop(gains.k_w(params), gains.beta_w,
                                 gains.omega_c_w, gains.tau_ref, topology)

    def prime(self, u_ref: float, theta_ref: float, state: VesselState):
        self.surge_loop.prime(u_ref, state.u)
        self.yaw_loop.prime(theta_ref, state.theta)


def fbl_step(controller: FblController, refs, state: VesselState, f_l,
             dt: float):
    """One control period: refs = (u_ref, theta_ref).  Returns (F, eta)
    with F >= 0 and eta in [-pi/2, pi/2], clamped to actuator limits."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    u_ref, theta_ref = refs
    p = controller.params
    # keep the heading reference continuous: approach the wrapped target
    # from the current unwrapped angle
    theta_goal = state.theta + wrap_angle(theta_ref - state.theta)
    alpha_u = controller.surge_loop.step(u_ref, state.u, dt)
    alpha_w = controller.yaw_loop.step(theta_goal, state.theta, dt)
    tension = f_l if controller.use_tension else (0.0, 0.0)
    d_u, d_w = fbl_disturbance_terms(state, tension, p)
    a_u = alpha_u + d_u
    a_w = alpha_w + d_w
    F = math.hypot(a_u, a_w)
    if F > p.F_max:
        # over-budget demand: shed surge force before yaw force, else an
        # unreachable u_ref squeezes eta toward 0 and steering dies
        a_w = min(max(a_w, -p.F_max), p.F_max)
        room = math.sqrt(p.F_max ** 2 - a_w ** 2)
        a_u = min(max(a_u, -room), room)
        F = math.hypot(a_u, a_w)
    if F == 0.0:
        eta = 0.0
    else:
        # positive-F reconstruction; a_u < 0 cannot be realized with
        # |eta| <= pi/2, so the steering saturates sideways
        eta = math.atan2(a_w, a_u)
        eta = min(max(eta, -math.pi / 2), math.pi / 2)
    return clamp_controls(F, eta, p)


@dataclass(frozen=True)
class StabilityReport:
    surge_stable: bool
    yaw_stable: bool
    violated: tuple = ()

    @property
    def stable(self) -> bool:
        return self.surge_stable and self.yaw_stable


def stability_check(gains: FblGains) -> StabilityReport:
    """Routh-Hurwitz verdicts for the two closed-loop polynomials.

    surge: s^2 + 2 sqrt(b_u) W_u s + W_u^2        (stable iff coeffs > 0)
    yaw:   s^3 + sqrt(b_w) W_w s^2 + sqrt(b_w) W_w^2 s + W_w^3
           (coeffs > 0 and a2 a1 > a0, i.e. b_w > 1)
    """
    bad = []
    wu, bu = gains.omega_c_u, gains.beta_u
    ww, bw = gains.omega_c_w, gains.beta_w
    if not (wu > 0 and 2.0 * math.sqrt(max(bu, 0.0)) * wu > 0
            and wu ** 2 > 0):
        bad.append("surge_coefficients_positive")
    a2 = math.sqrt(max(bw, 0.0)) * ww
    a1 = math.sqrt(max(bw, 0.0)) * ww ** 2
    a0 = ww ** 3
    if not (a2 > 0 and a1 > 0 and a0 > 0):
        bad.append("yaw_coefficients_positive")
    elif not a2 * a1 > a0:
        bad.append("yaw_routh_product")
    surge_ok = "surge_coefficients_positive" not in bad
    yaw_ok = not any(name.startswith("yaw") for name in bad)
    return StabilityReport(surge_ok, yaw_ok, tuple(bad))
