"""Boom-towing duo simulation: vessels, boom links, coupled integrator."""

from .boom import (BoomParams, BoomState, boom_derivative, boom_joint_forces,
                   init_boom_between)
from .duo import (DuoParams, DuoState, duo_derivative, kinetic_energy,
                  make_duo, spring_energy, step, step_n, stern_separation,
                  tow_forces)
from .vessel import (VesselParams, VesselState, clamp_controls, stern_point,
                     stern_velocity, vessel_derivative, vessel_rates)

__all__ = [
    "BoomParams", "BoomState", "boom_derivative", "boom_joint_forces",
    "init_boom_between",
    "DuoParams", "DuoState", "duo_derivative", "kinetic_energy", "make_duo",
    "spring_energy", "step", "step_n", "stern_separation", "tow_forces",
    "VesselParams", "VesselState", "clamp_controls", "stern_point",
    "stern_velocity", "vessel_derivative", "vessel_rates",
]
