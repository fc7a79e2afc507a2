"""Thermal Casimir free energy, pressure and entropy between metals with
screened transverse electric zero modes."""

from .lifshitz import (
    CasimirResult,
    ChannelResult,
    ParallelPlates,
    SpherePlate,
    ThermalConfiguration,
    free_energy,
    free_energy_channel,
    pressure,
    sphere_plate_force,
)
from .materials import Material, doped_silicon, gold
from .thermo import abel_plana_sum, entropy_finite_difference, entropy_zero_temp, nernst_verdict

__all__ = [
    "CasimirResult",
    "ChannelResult",
    "Material",
    "ParallelPlates",
    "SpherePlate",
    "ThermalConfiguration",
    "abel_plana_sum",
    "doped_silicon",
    "entropy_finite_difference",
    "entropy_zero_temp",
    "free_energy",
    "free_energy_channel",
    "gold",
    "nernst_verdict",
    "pressure",
    "sphere_plate_force",
]
