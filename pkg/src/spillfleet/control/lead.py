"""Lead compensation for the linearized loops.

Two equivalent arrangements of the lead K (sqrt(b) s + W) / (s + sqrt(b) W)
around an integrator-chain plant:

  standard   - the compensator acts on the error in the forward branch;
  normalized - the static gain K/sqrt(b) stays in the forward branch and a
               unity-DC lead H(s) = (b s + sqrt(b) W) / (s + sqrt(b) W)
               filters the measurement.

Both give the same characteristic polynomial; the normalized form puts the
closed-loop zero a factor b further left, trimming step overshoot.  The
reference passes through a first-order low-pass with time constant tau_ref.
All filters are discretized with the Tustin transform.
"""

from __future__ import annotations

import math

from ..errors import ConfigError

TOPOLOGIES = ("normalized", "standard")


def beta_from_phase_margin(phi: float) -> float:
    """beta = (1 + sin phi) / (1 - sin phi) for a lead margin phi in
    [0, pi/2)."""
    if not 0.0 <= phi < math.pi / 2:
        raise ConfigError("phase margin must lie in [0, pi/2)")
    s = math.sin(phi)
    return (1.0 + s) / (1.0 - s)


class FirstOrderFilter:
    """Tustin discretization of (b1 s + b0) / (s + a0)."""

    __slots__ = ("b1", "b0", "a0", "x_prev", "y_prev")

    def __init__(self, b1: float, b0: float, a0: float):
        self.b1 = b1
        self.b0 = b0
        self.a0 = a0
        self.x_prev = 0.0
        self.y_prev = 0.0

    def prime(self, x0: float):
        """Start from steady state at a constant input x0."""
        self.x_prev = x0
        self.y_prev = x0 * self.b0 / self.a0

    def step(self, x: float, dt: float) -> float:
        two_dt = 2.0 / dt
        y = ((self.b1 * two_dt + self.b0) * x
             + (self.b0 - self.b1 * two_dt) * self.x_prev
             - (self.a0 - two_dt) * self.y_prev) / (two_dt + self.a0)
        self.x_prev = x
        self.y_prev = y
        return y


class FirstOrderLowPass:
    """1 / (tau s + 1); tau = 0 passes the signal through untouched."""

    __slots__ = ("tau", "inner")

    def __init__(self, tau: float):
        if tau < 0:
            raise ConfigError("low-pass time constant must be >= 0")
        self.tau = tau
        self.inner = None if tau == 0.0 else FirstOrderFilter(
            0.0, 1.0 / tau, 1.0 / tau)

    def prime(self, x0: float):
        if self.inner is not None:
            self.inner.prime(x0)

    def step(self, x: float, dt: float) -> float:
        if self.inner is None:
            return x
        return self.inner.step(x, dt)


class LeadLoop:
    """One lead-compensated loop producing the virtual control alpha."""

    def __init__(self, gain: float, beta: float, omega_c: float,
                 tau_ref: float = 0.0, topology: str = "normalized"):
        if topology not in TOPOLOGIES:
            raise ConfigError(f"unknown lead topology {topology!r}")
        if beta <= 0 or omega_c <= 0:
            raise ConfigError("beta and omega_c must be positive")
        self.gain = gain
        self.beta = beta
        self.omega_c = omega_c
        self.topology = topology
        self.ref_filter = FirstOrderLowPass(tau_ref)
        rb = math.sqrt(beta)
        if topology == "normalized":
            # H(s) in the measurement path, unity DC gain
            self.shaper = FirstOrderFilter(beta, rb * omega_c, rb * omega_c)
        else:
            # full lead on the error: K (rb s + W) / (s + rb W)
            self.shaper = FirstOrderFilter(gain * rb, gain * omega_c,
                                           rb * omega_c)

    def prime(self, ref0: float, meas0: float):
        """Settle the internal filters as if ref0/meas0 had been held."""
        self.ref_filter.prime(ref0)
        if self.topology == "normalized":
            self.shaper.prime(meas0)
        else:
            self.shaper.prime(ref0 - meas0)

    def step(self, reference: float, measurement: float, dt: float) -> float:
        r = self.ref_filter.step(reference, dt)
        if self.topology == "normalized":
            h = self.shaper.step(measurement, dt)
            return self.gain / math.sqrt(self.beta) * (r - h)
        return self.shaper.step(r - measurement, dt)


def lead_step(loop: LeadLoop, reference: float, measurement: float,
              dt: float) -> float:
    if dt <= 0:
        raise ValueError("dt must be positive")
    return loop.step(reference, measurement, dt)
