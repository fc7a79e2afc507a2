"""Physical constants (CODATA 2018, as shipped by scipy) and unit helpers.

Everything inside the package is SI. The only non-SI quantities are the
ones accepted from configuration files (eV, cm^-3), converted here.
"""

from scipy import constants as _sc
from scipy.special import zeta as _zeta

HBAR = _sc.hbar
C = _sc.c
E_CHARGE = _sc.e
K_B = _sc.k
EPSILON_0 = _sc.epsilon_0
M_E = _sc.m_e
ZETA3 = float(_zeta(3.0))

CONSTANTS = {
    "hbar": HBAR,
    "c": C,
    "e": E_CHARGE,
    "k_B": K_B,
    "epsilon_0": EPSILON_0,
    "m_e": M_E,
    "zeta(3)": ZETA3,
}


def ev_to_rad_per_s(energy_ev):
    """Angular frequency of a photon with energy ``energy_ev``."""
    return energy_ev * E_CHARGE / HBAR


def rad_per_s_to_ev(omega):
    return omega * HBAR / E_CHARGE


def ev_to_joule(energy_ev):
    return energy_ev * E_CHARGE


def per_cm3_to_per_m3(concentration):
    return concentration * 1e6


def format_constants():
    """One ``name = value`` line per pinned constant."""
    return "\n".join(f"{k:<10s} = {v:.12e}" for k, v in CONSTANTS.items()) + "\n"
