"""Tracking controllers, lead compensation, and setpoint supervision."""

from ..dynamics.vessel import VesselParams
from ..errors import ConfigError
from .fbl import (FblController, FblGains, StabilityReport,
                  fbl_disturbance_terms, fbl_step, stability_check)
from .lead import (FirstOrderFilter, FirstOrderLowPass, LeadLoop,
                   beta_from_phase_margin, lead_step)
from .pid import PidController, PidGains, pid_step
from .setpoints import (SetpointPlan, SupervisorState, offset_polyline,
                        path_to_setpoints, polyline_length,
                        resample_polyline, supervisor_step, wrap_angle)

__all__ = [
    "FblController", "FblGains", "StabilityReport", "fbl_disturbance_terms",
    "fbl_step", "stability_check",
    "FirstOrderFilter", "FirstOrderLowPass", "LeadLoop",
    "beta_from_phase_margin", "lead_step",
    "PidController", "PidGains", "pid_step",
    "SetpointPlan", "SupervisorState", "offset_polyline",
    "path_to_setpoints", "polyline_length", "resample_polyline",
    "supervisor_step", "wrap_angle",
    "controller_from_config",
]


def controller_from_config(config: dict, params: VesselParams):
    """Build a controller from a JSON-style dict: {"type": "pid"|"fbl",
    "gains": {...}, and for fbl optionally "topology"/"use_tension"}."""
    kind = config.get("type")
    gains = config.get("gains", {})
    if kind == "pid":
        return PidController(PidGains(**gains), f_max=params.F_max,
                             eta_max=params.eta_max)
    if kind == "fbl":
        return FblController(FblGains(**gains), params,
                             topology=config.get("topology", "normalized"),
                             use_tension=config.get("use_tension", True))
    raise ConfigError(f"unknown controller type {kind!r}")
