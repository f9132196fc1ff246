"""Two-channel PID (surge force, steering angle) with a filtered derivative,
trapezoidal integral, and back-calculation anti-windup."""

from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class PidGains:
    # surge channel -> thrust F
    kp_u: float = 1600.0
    ki_u: float = 240.0
    kd_u: float = 40.0
    tau_u: float = 0.2
    # heading channel -> steering eta; stiff enough to follow the large
    # per-station heading swings on the inner offset path of a tight turn
    kp_th: float = 10.0
    ki_th: float = 0.02
    kd_th: float = 8.0
    tau_th: float = 0.2

    def validate(self) -> None:
        vals = (self.kp_u, self.ki_u, self.kd_u, self.tau_u,
                self.kp_th, self.ki_th, self.kd_th, self.tau_th)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError("PID gains must be finite")
        if self.tau_u <= 0 or self.tau_th <= 0:
            raise ValueError("derivative filter time constants must be > 0")


class _Channel:
    """One PID channel.  Derivative runs through a first-order filter
    (Tustin), the integral accumulates trapezoidally and is pulled back
    when the output saturates, staying within the output limit."""

    __slots__ = ("kp", "ki", "kd", "tau", "limit", "integral", "e_prev",
                 "d_prev")

    def __init__(self, kp, ki, kd, tau, limit):
        self.kp = kp
        self.ki = ki
        self.kd = kd
        self.tau = tau
        self.limit = limit
        self.reset()

    def reset(self):
        self.integral = 0.0
        self.e_prev = 0.0
        self.d_prev = 0.0

    def step(self, e: float, dt: float) -> float:
        self.integral += self.ki * dt * 0.5 * (e + self.e_prev)
        d = ((2.0 * self.tau - dt) * self.d_prev
             + 2.0 * self.kd * (e - self.e_prev)) / (2.0 * self.tau + dt)
        raw = self.kp * e + self.integral + d
        out = min(max(raw, -self.limit), self.limit)
        if out != raw:
            self.integral += out - raw
            self.integral = min(max(self.integral, -self.limit), self.limit)
        self.e_prev = e
        self.d_prev = d
        return out


class PidController:
    """Stateful per-vessel PID pair: surge error -> F, heading error -> eta."""

    def __init__(self, gains: PidGains, f_max: float = 5000.0,
                 eta_max: float = math.pi / 2):
        gains.validate()
        self.gains = gains
        self.surge = _Channel(gains.kp_u, gains.ki_u, gains.kd_u,
                              gains.tau_u, f_max)
        self.heading = _Channel(gains.kp_th, gains.ki_th, gains.kd_th,
                                gains.tau_th, eta_max)

    def reset(self):
        self.surge.reset()
        self.heading.reset()


def pid_step(controller: PidController, error, dt: float):
    """Advance both channels one control period; error = (e_u, e_theta).
    Returns (F, eta), already clamped to the actuator limits."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    e_u, e_th = error
    F = controller.surge.step(e_u, dt)
    eta = controller.heading.step(e_th, dt)
    if F < 0.0:
        # reversed thrust flips the stern lever's torque sign; mirror the
        # steering so the heading loop keeps negative feedback while braking
        eta = -eta
    return F, eta
