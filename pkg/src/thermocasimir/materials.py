"""Dielectric response along the imaginary frequency axis and carrier screening.

Models are small frozen dataclasses; :func:`permittivity_imag` dispatches on
the type. Screening lengths are returned as inverse squares (1/m^2) because
that is the quantity that enters the wave vector inside the body.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Mapping, Union

import numpy as np

from .constants import (
    C,
    E_CHARGE,
    EPSILON_0,
    HBAR,
    K_B,
    M_E,
    ev_to_joule,
    ev_to_rad_per_s,
    per_cm3_to_per_m3,
)

REFERENCE_TEMPERATURE = 300.0


class MaterialError(ValueError):
    """Invalid material parameters or configuration keys."""


def _check_plasma(wp):
    if not wp > 0:
        raise MaterialError(f"plasma frequency must be positive, got {wp!r}")


def _check_relaxation(gamma):
    if not gamma >= 0:
        raise MaterialError(f"relaxation must be non-negative, got {gamma!r}")


@dataclass(frozen=True)
class IdealMetal:
    """Perfect reflector: r_TE = r_TM = 1 at every frequency."""


@dataclass(frozen=True)
class Plasma:
    plasma_frequency: float

    def __post_init__(self):
        _check_plasma(self.plasma_frequency)


@dataclass(frozen=True)
class Drude:
    """Drude metal with temperature-dependent relaxation.

    ``relaxation`` is the value at ``reference_temperature``; away from it
    the rate scales as ``(T / T_ref) ** relaxation_exponent``. An exponent of
    zero keeps it constant, an exponent of two mimics a perfect lattice whose
    relaxation vanishes at zero temperature.
    """

    plasma_frequency: float
    relaxation: float
    relaxation_exponent: float = 0.0
    reference_temperature: float = REFERENCE_TEMPERATURE

    def __post_init__(self):
        _check_plasma(self.plasma_frequency)
        _check_relaxation(self.relaxation)
        if self.relaxation_exponent < 0:
            raise MaterialError("relaxation_exponent must be >= 0")

    def relaxation_at(self, T):
        if self.relaxation_exponent == 0:
            return self.relaxation
        return self.relaxation * (T / self.reference_temperature) ** self.relaxation_exponent


@dataclass(frozen=True)
class DrudeWithCore(Drude):
    """Drude carriers on top of a constant core-electron permittivity."""

    core_constant: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if not self.core_constant >= 1:
            raise MaterialError(f"core constant must be >= 1, got {self.core_constant!r}")


DielectricModel = Union[IdealMetal, Plasma, Drude, DrudeWithCore]


def permittivity_imag(model: DielectricModel, xi, T: float = REFERENCE_TEMPERATURE):
    """Permittivity eps(i xi) at imaginary frequency ``xi`` (rad/s).

    ``T`` only matters for Drude-type models, through the relaxation rate.
    The ideal metal has no finite permittivity and is rejected; callers must
    use the unit reflection coefficients instead.
    """
    xi = np.asarray(xi, dtype=float)
    if np.any(xi <= 0):
        raise MaterialError("permittivity_imag requires xi > 0; the zero mode is handled separately")
    if isinstance(model, IdealMetal):
        raise MaterialError("ideal metal has no finite permittivity")
    wp = model.plasma_frequency
    if isinstance(model, Drude):
        core = model.core_constant if isinstance(model, DrudeWithCore) else 1.0
        eps = core + wp**2 / (xi * (xi + model.relaxation_at(T)))
    elif isinstance(model, Plasma):
        eps = 1.0 + (wp / xi) ** 2
    else:
        raise TypeError(f"unknown dielectric model {model!r}")
    return eps if eps.ndim else float(eps)


def dielectric_coupling(model: DielectricModel, xi, T: float = REFERENCE_TEMPERATURE):
    """(eps(i xi) - 1) xi^2 / c^2 in 1/m^2, finite down to and including xi = 0.

    At xi = 0 this is the zero-frequency limit: omega_p^2/c^2 for a plasma
    (or a Drude metal with vanishing relaxation) and 0 for a dissipative
    Drude metal.
    """
    xi = np.asarray(xi, dtype=float)
    if isinstance(model, IdealMetal):
        raise MaterialError("ideal metal has no finite permittivity")
    k2 = (model.plasma_frequency / C) ** 2
    if isinstance(model, Plasma):
        out = np.full_like(xi, k2)
    elif isinstance(model, Drude):
        gamma = model.relaxation_at(T)
        if gamma == 0:
            out = np.full_like(xi, k2)
        else:
            out = k2 * xi / (xi + gamma)
        if isinstance(model, DrudeWithCore):
            out = out + (model.core_constant - 1.0) * (xi / C) ** 2
    else:
        raise TypeError(f"unknown dielectric model {model!r}")
    return out if out.ndim else float(out)


@dataclass(frozen=True)
class CarrierProperties:
    """Free-carrier data. ``concentration`` in 1/m^3, ``fermi_energy`` in J."""

    concentration: float
    fermi_energy: float | None = None
    core_constant: float = 1.0

    def __post_init__(self):
        if not self.concentration > 0:
            raise MaterialError(f"carrier concentration must be positive, got {self.concentration!r}")
        if self.fermi_energy is not None and not self.fermi_energy > 0:
            raise MaterialError("Fermi energy must be positive")
        if not self.core_constant >= 1:
            raise MaterialError("core constant must be >= 1")


def fermi_energy_free_electron(concentration: float) -> float:
    """E_F = hbar^2 (3 pi^2 n)^(2/3) / (2 m_e)."""
    if not concentration > 0:
        raise MaterialError("carrier concentration must be positive")
    return HBAR**2 * (3 * np.pi**2 * concentration) ** (2.0 / 3.0) / (2 * M_E)


def debye_huckel_inverse_sq(carriers: CarrierProperties, T: float) -> float:
    """Inverse square Debye-Hueckel length e^2 n / (eps_core eps_0 k_B T)."""
    if not T > 0:
        raise MaterialError("Debye-Hueckel screening needs T > 0")
    return E_CHARGE**2 * carriers.concentration / (carriers.core_constant * EPSILON_0 * K_B * T)


def thomas_fermi_inverse_sq(carriers: CarrierProperties, derive: bool = True) -> float:
    """Inverse square Thomas-Fermi length 3 e^2 n / (eps_0 E_F).

    Without an explicit Fermi energy the free-electron value is used unless
    ``derive`` is false.
    """
    ef = carriers.fermi_energy
    if ef is None:
        if not derive:
            raise MaterialError("Fermi energy missing and derivation disabled")
        ef = fermi_energy_free_electron(carriers.concentration)
    return 3 * E_CHARGE**2 * carriers.concentration / (EPSILON_0 * ef)


# Screening policies: where the inverse square screening length enters the
# Matsubara sum.


@dataclass(frozen=True)
class NoScreening:
    inverse_sq: float = 0.0

    def at(self, n: int) -> float:
        return 0.0


@dataclass(frozen=True)
class ZeroFrequencyOnly:
    inverse_sq: float

    def __post_init__(self):
        if not self.inverse_sq >= 0:
            raise MaterialError("inverse square screening length must be >= 0")

    def at(self, n: int) -> float:
        return self.inverse_sq if n == 0 else 0.0


@dataclass(frozen=True)
class AllTerms:
    inverse_sq: float

    def __post_init__(self):
        if not self.inverse_sq >= 0:
            raise MaterialError("inverse square screening length must be >= 0")

    def at(self, n: int) -> float:
        return self.inverse_sq


ScreeningPolicy = Union[NoScreening, ZeroFrequencyOnly, AllTerms]

SCREENING_MODES = ("none", "n0", "all")
SCREENING_LENGTHS = ("debye-huckel", "thomas-fermi")


@dataclass(frozen=True)
class Material:
    """A body: dielectric model, carriers and a screening prescription.

    ``screening`` selects which Matsubara terms get the screening term
    (``none``, ``n0`` or ``all``). ``screening_length`` is either
    ``"debye-huckel"`` (re-evaluated at every temperature),
    ``"thomas-fermi"`` (temperature independent) or a fixed inverse square
    length in 1/m^2.
    """

    model: DielectricModel
    carriers: CarrierProperties | None = None
    screening: str = "none"
    screening_length: str | float = "debye-huckel"
    name: str = ""

    def __post_init__(self):
        if self.screening not in SCREENING_MODES:
            raise MaterialError(f"screening must be one of {SCREENING_MODES}, got {self.screening!r}")
        if isinstance(self.screening_length, str):
            if self.screening_length not in SCREENING_LENGTHS:
                raise MaterialError(f"unknown screening length {self.screening_length!r}")
            if self.screening != "none" and self.carriers is None:
                raise MaterialError("screening from a carrier model needs carrier properties")
        elif not self.screening_length >= 0:
            raise MaterialError("fixed inverse square screening length must be >= 0")

    @property
    def is_ideal(self) -> bool:
        return isinstance(self.model, IdealMetal)

    def inverse_sq_screening(self, T: float) -> float:
        if not isinstance(self.screening_length, str):
            return float(self.screening_length)
        if self.screening_length == "thomas-fermi":
            return thomas_fermi_inverse_sq(self.carriers)
        return debye_huckel_inverse_sq(self.carriers, T)

    def policy(self, T: float) -> ScreeningPolicy:
        if self.screening == "none" or self.is_ideal:
            return NoScreening()
        value = self.inverse_sq_screening(T)
        return ZeroFrequencyOnly(value) if self.screening == "n0" else AllTerms(value)

    def with_model(self, **changes) -> "Material":
        return replace(self, model=replace(self.model, **changes))


# Literature defaults; none of these numbers is fixed by the experiments this
# package is meant to be compared with, so all of them are overridable.
GOLD_PLASMA_EV = 9.0
GOLD_RELAXATION_EV = 0.035
GOLD_CARRIERS_CM3 = 5.9e22
SILICON_CORE = 11.67
SILICON_CARRIERS_CM3 = 3.2e20
SILICON_PLASMA_RAD_S = 5.0e14
SILICON_RELAXATION_RAD_S = 1.1e14


def gold(screening="none", screening_length="debye-huckel", relaxation_exponent=0.0, model="drude"):
    carriers = CarrierProperties(per_cm3_to_per_m3(GOLD_CARRIERS_CM3))
    wp = ev_to_rad_per_s(GOLD_PLASMA_EV)
    if model == "plasma":
        dm = Plasma(wp)
    else:
        dm = Drude(wp, ev_to_rad_per_s(GOLD_RELAXATION_EV), relaxation_exponent)
    return Material(dm, carriers, screening, screening_length, name="Au")


def doped_silicon(screening="none", screening_length="debye-huckel"):
    carriers = CarrierProperties(per_cm3_to_per_m3(SILICON_CARRIERS_CM3), core_constant=SILICON_CORE)
    dm = DrudeWithCore(SILICON_PLASMA_RAD_S, SILICON_RELAXATION_RAD_S, core_constant=SILICON_CORE)
    return Material(dm, carriers, screening, screening_length, name="Si")


MATERIAL_KEYS = (
    "model",
    "plasma_frequency_ev",
    "relaxation_ev",
    "relaxation_exponent",
    "core_constant",
    "carrier_concentration_cm3",
    "fermi_energy_ev",
    "screening",
    "screening_length",
    "reference_temperature",
)

MODEL_NAMES = ("ideal", "plasma", "drude", "drude-core")


def _need(section, key):
    try:
        return section[key]
    except KeyError:
        raise MaterialError(f"missing material key: {key}") from None


def material_from_mapping(section: Mapping[str, object]) -> Material:
    """Build a :class:`Material` from flat config keys (eV and cm^-3 units)."""
    unknown = set(section) - set(MATERIAL_KEYS) - {"name"}
    if unknown:
        raise MaterialError(f"unknown material keys: {', '.join(sorted(unknown))}")
    kind = str(_need(section, "model")).strip().lower()
    if kind not in MODEL_NAMES:
        raise MaterialError(f"model must be one of {MODEL_NAMES}, got {kind!r}")

    try:
        carriers = None
        if "carrier_concentration_cm3" in section:
            ef = section.get("fermi_energy_ev")
            carriers = CarrierProperties(
                per_cm3_to_per_m3(float(section["carrier_concentration_cm3"])),
                fermi_energy=None if ef in (None, "") else ev_to_joule(float(ef)),
                core_constant=float(section.get("core_constant", 1.0)),
            )
        if kind == "ideal":
            model = IdealMetal()
        else:
            wp = ev_to_rad_per_s(float(_need(section, "plasma_frequency_ev")))
            if kind == "plasma":
                model = Plasma(wp)
            else:
                gamma = ev_to_rad_per_s(float(_need(section, "relaxation_ev")))
                p = float(section.get("relaxation_exponent", 0.0))
                t0 = float(section.get("reference_temperature", REFERENCE_TEMPERATURE))
                if kind == "drude":
                    model = Drude(wp, gamma, p, t0)
                else:
                    core = float(_need(section, "core_constant"))
                    model = DrudeWithCore(wp, gamma, p, t0, core_constant=core)
        length = section.get("screening_length", "debye-huckel")
        if isinstance(length, str) and length not in SCREENING_LENGTHS:
            length = float(length)
        return Material(
            model,
            carriers,
            str(section.get("screening", "none")),
            length,
            name=str(section.get("name", "")),
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, MaterialError):
            raise
        raise MaterialError(str(exc)) from exc
