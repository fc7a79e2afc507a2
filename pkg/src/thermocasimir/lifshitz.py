"""Lifshitz free energy, pressure and sphere-plate force at finite temperature.

The transverse wave-vector integral of every Matsubara mode is taken in the
variable ``y = 2 * gamma0 * d``, which turns it into an integral over
``(2 xi_n d / c, inf)`` with an ``exp(-y)`` decay for every mode and every
material. With ``k_B T = hbar xi_1 / (2 pi)``

    F = hbar xi_1 / (4 pi^2) * sum'_n  int y / (4 d^2) ln(1 - r_a r_b e^-y) dy
    P = -hbar xi_1 / (2 pi^2) * sum'_n int y^2 / (8 d^3) r_a r_b / (e^y - r_a r_b) dy

where the prime halves the n = 0 term.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Union

import mpmath
import numpy as np

from . import quadrature as quad
from .constants import C, HBAR, K_B
from .materials import (
    DielectricModel,
    IdealMetal,
    Material,
    ScreeningPolicy,
    dielectric_coupling,
)

TE = "te"
TM = "tm"
CHANNELS = (TE, TM)
FREE_ENERGY = "free_energy"
PRESSURE = "pressure"

MIN_TOLERANCE = 1e-12
MAX_TOLERANCE = 1e-2

# Beyond y = Y_END every mode integrand is below e^-50 of its scale.
Y_END = 50.0
MAX_PANEL = 4.0
ZERO_MODE_GRADING = 2.0**-40
# Matsubara sums are cut where the ideal-metal tail bound drops below this
# fraction of the partial sum; cheap because the terms decay exponentially,
# and it keeps truncation noise out of temperature derivatives.
TRUNCATION_REL = 1e-20
MAX_TERMS = 5_000_000
EXACT_DPS = 40


class NonConvergence(RuntimeError):
    """The Matsubara sum did not reach its truncation criterion."""


class GeometryError(ValueError):
    pass


@dataclass(frozen=True)
class ParallelPlates:
    pass


@dataclass(frozen=True)
class SpherePlate:
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise GeometryError("sphere radius must be positive")


Geometry = Union[ParallelPlates, SpherePlate]


@dataclass(frozen=True)
class ThermalConfiguration:
    """Gap ``d`` (m), temperature ``T`` (K), bodies and geometry.

    ``material`` is the plate. ``other`` is the second plate or the sphere;
    ``None`` means the same material. ``screening_channels`` chooses whether
    the screening term enters only the TE wave vector inside the bodies
    (``"te_only"``) or both polarisations (``"both"``). ``frozen_temperature``
    pins relaxation and screening at that temperature while the Matsubara
    frequencies still follow ``T``.
    """

    gap: float
    temperature: float
    material: Material
    geometry: Geometry = field(default_factory=ParallelPlates)
    other: Material | None = None
    screening_channels: str = "te_only"
    frozen_temperature: float | None = None

    def __post_init__(self):
        if not self.gap > 0:
            raise GeometryError("gap must be positive")
        if not self.temperature >= 0:
            raise ValueError("temperature must be >= 0")
        if self.screening_channels not in ("te_only", "both"):
            raise ValueError("screening_channels must be 'te_only' or 'both'")
        if isinstance(self.geometry, SpherePlate) and self.geometry.radius < 100 * self.gap:
            warnings.warn(
                f"R/d = {self.geometry.radius / self.gap:.3g} < 100: proximity force "
                "approximation is outside its validity regime",
                stacklevel=2,
            )

    @property
    def bodies(self) -> tuple[Material, Material]:
        return self.material, self.other if self.other is not None else self.material

    @property
    def material_temperature(self) -> float:
        return self.temperature if self.frozen_temperature is None else self.frozen_temperature

    def at(self, **changes) -> "ThermalConfiguration":
        return replace(self, **changes)


@dataclass(frozen=True)
class MatsubaraPoint:
    n: int
    frequency: float
    q: float
    gamma0: float
    gamma1: float


@dataclass
class ChannelResult:
    """One polarisation of a Matsubara sum.

    ``terms`` holds the prime-weighted, fully scaled contribution of each
    mode (J/m^2 for free energies, Pa for pressures); ``value`` is their
    exactly rounded sum.
    """

    channel: str
    kind: str
    value: float
    terms: np.ndarray
    n_max: int
    truncation_error: float
    quadrature_error: float
    raw: np.ndarray = field(default=None, repr=False)
    prefactor: object = field(default=None, repr=False)

    @property
    def per_term(self):
        return list(enumerate(self.terms.tolist()))

    @property
    def error(self) -> float:
        return self.truncation_error + self.quadrature_error

    def exact_value(self):
        """The channel value as an mpmath number, free of the rounding of
        the scalar prefactor. Used for temperature differences."""
        with mpmath.workdps(EXACT_DPS):
            return self.prefactor * _mp_sum(self.raw)


@dataclass
class CasimirResult:
    """Both polarisations of a free energy, pressure or force."""

    kind: str
    te: ChannelResult
    tm: ChannelResult
    scale: float = 1.0

    @property
    def te_value(self) -> float:
        return self.scale * self.te.value

    @property
    def tm_value(self) -> float:
        return self.scale * self.tm.value

    @property
    def total(self) -> float:
        return self.scale * math.fsum(np.concatenate([self.te.terms, self.tm.terms]))

    @property
    def n_max(self) -> int:
        return max(self.te.n_max, self.tm.n_max)

    @property
    def error(self) -> float:
        return abs(self.scale) * (self.te.error + self.tm.error)

    def exact_total(self):
        """``total`` as an mpmath number (see :meth:`ChannelResult.exact_value`)."""
        with mpmath.workdps(EXACT_DPS):
            return mpmath.mpf(self.scale) * (self.te.exact_value() + self.tm.exact_value())

    def __float__(self):
        return self.total


def _mp_sum(values):
    hi = math.fsum(values)
    lo = math.fsum(np.append(values, -hi))
    return mpmath.mpf(hi) + mpmath.mpf(lo)


# --- elementary pieces ----------------------------------------------------


def matsubara_frequency(n, T):
    """xi_n = 2 pi n k_B T / hbar."""
    n_arr = np.asarray(n)
    if np.any(n_arr < 0):
        raise ValueError("Matsubara index must be non-negative")
    if not T >= 0:
        raise ValueError("temperature must be non-negative")
    return 2 * np.pi * n * K_B * T / HBAR


def reflection_te(gamma0, gamma1):
    """(gamma1 - gamma0) / (gamma1 + gamma0)."""
    g0 = np.asarray(gamma0, dtype=float)
    g1 = np.asarray(gamma1, dtype=float)
    if np.any(g0 <= 0) or np.any(g1 <= 0):
        raise ValueError("wave vectors must be positive")
    r = (g1 - g0) / (g1 + g0)
    return r if r.ndim else float(r)


def reflection_tm(eps, gamma0, gamma1):
    """(eps gamma0 - gamma1) / (eps gamma0 + gamma1); ``eps = inf`` gives 1."""
    e = np.asarray(eps, dtype=float)
    g0 = np.asarray(gamma0, dtype=float)
    g1 = np.asarray(gamma1, dtype=float)
    if np.any(e < 1):
        raise ValueError("permittivity must be >= 1 on the imaginary axis")
    if np.any(g0 <= 0) or np.any(g1 <= 0):
        raise ValueError("wave vectors must be positive")
    with np.errstate(invalid="ignore"):
        r = np.where(np.isinf(e), 1.0, (e * g0 - g1) / (e * g0 + g1))
    return r if r.ndim else float(r)


def zero_mode_gamma1(q, policy: ScreeningPolicy, model: DielectricModel, T: float = 300.0):
    """gamma_1 of the n = 0 mode: sqrt(q^2 + screening + lim eps xi^2 / c^2).

    The ideal metal has no finite value and returns ``inf``.
    """
    if not q > 0:
        raise ValueError("q must be positive")
    if isinstance(model, IdealMetal):
        return math.inf
    k2 = policy.at(0) + float(dielectric_coupling(model, 0.0, T))
    return math.sqrt(q * q + k2)


def matsubara_point(cfg: ThermalConfiguration, n: int, q: float, channel: str = TE) -> MatsubaraPoint:
    """Wave vectors of mode ``n`` at transverse wave number ``q`` in the plate."""
    xi = float(matsubara_frequency(n, cfg.temperature))
    g0 = math.sqrt(q * q + (xi / C) ** 2)
    mat = cfg.material
    if mat.is_ideal:
        return MatsubaraPoint(n, xi, q, g0, math.inf)
    T = cfg.material_temperature
    k2 = float(dielectric_coupling(mat.model, xi, T))
    if channel == TE or cfg.screening_channels == "both":
        k2 += mat.policy(T).at(n)
    return MatsubaraPoint(n, xi, q, g0, math.sqrt(g0 * g0 + k2))


# --- mode integrals ---------------------------------------------------------


def _body_coefficients(mat: Material, xi, zero, T, channels):
    """Per-mode constants of one body.

    Returns a dict with the TE coupling ``k2te``, the TM coupling ``k2tm``,
    the permittivity ``eps`` (inf at the zero mode) and an ideal flag.
    """
    if mat.is_ideal:
        return {"ideal": True}
    policy = mat.policy(T)
    lam_n = np.where(zero, policy.at(0), policy.at(1))
    coupling = dielectric_coupling(mat.model, xi, T)
    k2te = coupling + lam_n
    k2tm = coupling + (lam_n if channels == "both" else 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        eps = np.where(zero, np.inf, 1.0 + coupling * (C / np.where(zero, 1.0, xi)) ** 2)
    return {"ideal": False, "k2te": k2te, "k2tm": k2tm, "eps": eps}


def _log_reflection(body, channel, g0, zero):
    """Reflection coefficient and its logarithm at nodes ``g0`` (P x m)."""
    if body["ideal"]:
        one = np.ones_like(g0)
        return one, np.zeros_like(g0)
    if channel == TE:
        k2 = body["k2te"][:, None]
        g1 = np.sqrt(g0 * g0 + k2)
        s = g1 + g0
        r = k2 / (s * s)
        omr = 2 * g0 / s
    else:
        k2 = body["k2tm"][:, None]
        eps = body["eps"][:, None]
        g1 = np.sqrt(g0 * g0 + k2)
        zero_b = np.broadcast_to(zero[:, None], g0.shape)
        with np.errstate(invalid="ignore", over="ignore"):
            den = eps * g0 + g1
            r = np.where(zero_b, 1.0, (eps * g0 - g1) / den)
            omr = np.where(zero_b, 0.0, 2 * g1 / den)
    with np.errstate(divide="ignore", invalid="ignore"):
        logr = np.where(omr < 0.5, np.log1p(-omr), np.log(np.abs(r)))
    return r, logr


def _mode_integrand(cfg, kind, channel, xi, zero):
    d = cfg.gap
    T = cfg.material_temperature
    body_a, body_b = cfg.bodies
    ca = _body_coefficients(body_a, xi, zero, T, cfg.screening_channels)
    cb = ca if cfg.other is None else _body_coefficients(body_b, xi, zero, T, cfg.screening_channels)

    def integrand(y, owner):
        g0 = y / (2 * d)
        z_o = zero[owner]
        sub_a = _subset(ca, owner)
        sub_b = sub_a if cb is ca else _subset(cb, owner)
        ra, la = _log_reflection(sub_a, channel, g0, z_o)
        if cb is ca:
            rb, lb = ra, la
        else:
            rb, lb = _log_reflection(sub_b, channel, g0, z_o)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore", under="ignore"):
            pos = (ra > 0) & (rb > 0)
            z = np.where(pos, la + lb - y, -np.inf)
            x = ra * rb * np.exp(-y)
            if kind == FREE_ENERGY:
                lg = np.where(z < -0.6931471805599453, np.log1p(-np.exp(z)), np.log(-np.expm1(z)))
                val = np.where(pos, lg, np.log1p(-x))
                out = y / (4 * d * d) * val
            else:
                frac = np.where(pos, 1.0 / np.expm1(-z), x / (1 - x))
                out = y * y / (8 * d**3) * frac
        return np.where(ra * rb == 0, 0.0, out)

    return integrand


def _subset(coeffs, owner):
    if coeffs["ideal"]:
        return coeffs
    return {"ideal": False, **{k: coeffs[k][owner] for k in ("k2te", "k2tm", "eps")}}


def _panels_vectorised(y_low):
    """Initial panels for modes with lower limits ``y_low``.

    Widths grow geometrically from half the distance to y = 0 (the nearest
    singularity of the integrand) up to MAX_PANEL, then stay constant up to
    Y_END. The zero mode starts at 0 with a fine geometric grading.
    """
    y_low = np.asarray(y_low, dtype=float)
    n = len(y_low)
    zero = y_low == 0
    first = np.where(zero, ZERO_MODE_GRADING, np.minimum(0.5 * y_low, MAX_PANEL))
    start = np.where(zero, ZERO_MODE_GRADING, y_low)
    upper = np.maximum(y_low + MAX_PANEL, Y_END)
    # geometric part: widths first * 2^k until MAX_PANEL
    n_geo = np.ceil(np.log2(MAX_PANEL / first)).astype(int)
    n_geo = np.maximum(n_geo, 0)
    k_max = int(n_geo.max()) if n else 0
    k = np.arange(k_max + 1)
    widths = np.minimum(first[:, None] * 2.0 ** k[None, :], MAX_PANEL)
    widths = np.where(k[None, :] < n_geo[:, None], widths, 0.0)
    geo_edges = start[:, None] + np.concatenate([np.zeros((n, 1)), np.cumsum(widths, axis=1)], axis=1)
    geo_top = geo_edges[:, -1]
    n_flat = np.maximum(np.ceil((upper - geo_top) / MAX_PANEL).astype(int), 0)
    f_max = int(n_flat.max()) if n else 0
    j = np.arange(1, f_max + 1)
    flat_edges = np.minimum(geo_top[:, None] + MAX_PANEL * j[None, :], upper[:, None])
    flat_edges = np.where(j[None, :] <= n_flat[:, None], flat_edges, np.nan)
    geo_valid = np.concatenate([np.ones((n, 1), bool), k[None, :] < n_geo[:, None]], axis=1)
    geo_edges = np.where(geo_valid, geo_edges, np.nan)
    edges = np.concatenate([np.where(zero, 0.0, np.nan)[:, None], geo_edges, flat_edges], axis=1)
    valid = ~np.isnan(edges)
    # compact each row: valid edges are contiguous except the leading zero column
    rows, cols = np.nonzero(valid)
    vals = edges[rows, cols]
    same = rows[1:] == rows[:-1]
    a = vals[:-1][same]
    b = vals[1:][same]
    owner = rows[:-1][same].astype(np.intp)
    keep = b > a
    return a[keep], b[keep], owner[keep]


def mode_integrals(cfg: ThermalConfiguration, xi, zero, channel, kind, rtol, y_low=None):
    """Raw y-integrals (no prefactor, no prime weight) for a batch of modes.

    ``y_low`` defaults to 2 xi d / c. Returns ``(values, errors)``; the
    error is the summed panel estimate.
    """
    xi = np.asarray(xi, dtype=float)
    zero = np.asarray(zero, dtype=bool)
    if y_low is None:
        y_low = 2 * xi * cfg.gap / C
    y_low = np.where(zero, 0.0, y_low)
    a, b, owner = _panels_vectorised(y_low)
    f = _mode_integrand(cfg, kind, channel, xi, zero)
    hi, err = quad.evaluate_panels(f, a, b, owner)
    target = rtol * math.fsum(np.abs(hi))
    if target > 0:
        a, b, owner, hi, err = quad.refine(f, a, b, owner, hi, err, target)
    return quad.per_owner(hi, owner, len(xi)), quad.per_owner(err, owner, len(xi))


def _ideal_tail_bound(n_from, y1, d, kind):
    """Upper bound on sum_{m >= n_from} of one channel's raw mode integral.

    |ln(1 - R e^-y)| and R e^-y / (1 - R e^-y) are both at most
    e^-y / (1 - e^-y) for |R| <= 1, so the ideal metal bounds every material.
    Vectorised over ``n_from`` (must be >= 1).
    """
    a = np.asarray(n_from, dtype=float) * y1
    q = math.exp(-y1)
    s0 = 1 / (1 - q)
    s1 = q / (1 - q) ** 2
    s2 = q * (1 + q) / (1 - q) ** 3
    b = y1
    # sum_k P(a + k b) q^k with P the antiderivative tail of y^j e^-y
    if kind == FREE_ENERGY:
        total = (a + 1) * s0 + b * s1
        scale = 4 * d * d
    else:
        total = (a * a + 2 * a + 2) * s0 + (2 * a * b + 2 * b) * s1 + b * b * s2
        scale = 8 * d**3
    with np.errstate(over="ignore", divide="ignore"):
        return np.exp(-a) * total / (scale * -np.expm1(-a))


def check_tolerance(tolerance):
    if not MIN_TOLERANCE <= tolerance < MAX_TOLERANCE:
        raise ValueError(f"tolerance must lie in [{MIN_TOLERANCE}, {MAX_TOLERANCE})")


def _matsubara_channel(cfg: ThermalConfiguration, channel: str, kind: str, tolerance: float) -> ChannelResult:
    check_tolerance(tolerance)
    T = cfg.temperature
    if T == 0:
        raise ValueError("T = 0 has no Matsubara sum; use thermo.zero_temperature_* instead")
    d = cfg.gap
    xi1 = float(matsubara_frequency(1, T))
    y1 = 2 * xi1 * d / C
    raw_parts, err_parts = [], []
    partial = 0.0
    n_start = 0
    chunk = 64
    n_max = None
    while n_max is None:
        n = np.arange(n_start, n_start + chunk)
        xi = n * xi1
        vals, errs = mode_integrals(cfg, xi, n == 0, channel, kind, tolerance, y_low=n * y1)
        w = np.where(n == 0, 0.5, 1.0)
        contrib = w * vals
        cums = partial + np.cumsum(np.abs(contrib))
        bounds = _ideal_tail_bound(n + 1, y1, d, kind)
        ok = np.nonzero((bounds < TRUNCATION_REL * cums) | (cums == 0) & (bounds < 1e-300))[0]
        if len(ok):
            stop = ok[0]
            n_max = int(n[stop])
            raw_parts.append(contrib[: stop + 1])
            err_parts.append(w[: stop + 1] * errs[: stop + 1])
            trunc = bounds[stop]
        else:
            raw_parts.append(contrib)
            err_parts.append(w * errs)
            partial = cums[-1]
            n_start += chunk
            chunk = min(chunk * 2, 16384)
            if n_start > MAX_TERMS:
                raise NonConvergence(f"Matsubara sum not converged after {n_start} terms")
    raw = np.concatenate(raw_parts)
    errs = np.concatenate(err_parts)
    # k_B T = hbar xi_1 / (2 pi) with xi_1 = c y_1 / (2 d): deriving the
    # prefactor from the same y_1 that spaces the modes keeps F(T) smooth
    # in T at the last-bit level.
    with mpmath.workdps(EXACT_DPS):
        mp_pref = mpmath.mpf(HBAR) * mpmath.mpf(C) * mpmath.mpf(y1) / (mpmath.pi**2 * mpmath.mpf(d))
        mp_pref = mp_pref / 8 if kind == FREE_ENERGY else -mp_pref / 4
    pref = float(mp_pref)
    terms = pref * raw
    value = math.fsum(terms)
    quad_err = abs(pref) * math.fsum(errs)
    trunc_err = abs(pref) * trunc
    limit = tolerance * abs(value)
    if quad_err > max(limit, 1e-300) and value != 0:
        raise quad.QuadratureFailure(
            f"quadrature error {quad_err:.3e} exceeds tolerance at d = {d:.6g} m"
        )
    return ChannelResult(channel, kind, value, terms, n_max, trunc_err, quad_err, raw, mp_pref)


def free_energy_channel(cfg: ThermalConfiguration, channel: str, tolerance: float = 1e-10) -> ChannelResult:
    """One polarisation of the plate-plate free energy per unit area (J/m^2)."""
    if channel not in CHANNELS:
        raise ValueError(f"channel must be one of {CHANNELS}")
    return _matsubara_channel(cfg, channel, FREE_ENERGY, tolerance)


def free_energy(cfg: ThermalConfiguration, tolerance: float = 1e-10) -> CasimirResult:
    """Plate-plate free energy per unit area, TE and TM."""
    if cfg.temperature == 0:
        from . import thermo

        return thermo.zero_temperature_result(cfg, FREE_ENERGY, tolerance)
    te = _matsubara_channel(cfg, TE, FREE_ENERGY, tolerance)
    tm = _matsubara_channel(cfg, TM, FREE_ENERGY, tolerance)
    return CasimirResult(FREE_ENERGY, te, tm)


def pressure(cfg: ThermalConfiguration, tolerance: float = 1e-10) -> CasimirResult:
    """Casimir pressure between plates (Pa); negative means attraction."""
    if not isinstance(cfg.geometry, ParallelPlates):
        raise GeometryError("pressure needs the parallel-plate geometry")
    if cfg.temperature == 0:
        from . import thermo

        return thermo.zero_temperature_result(cfg, PRESSURE, tolerance)
    te = _matsubara_channel(cfg, TE, PRESSURE, tolerance)
    tm = _matsubara_channel(cfg, TM, PRESSURE, tolerance)
    return CasimirResult(PRESSURE, te, tm)


def sphere_plate_force(cfg: ThermalConfiguration, tolerance: float = 1e-10) -> CasimirResult:
    """Proximity-force sphere-plate force 2 pi R F_pp(d) in newtons."""
    if not isinstance(cfg.geometry, SpherePlate):
        raise GeometryError("sphere_plate_force needs the sphere-plate geometry")
    plates = free_energy(cfg, tolerance)
    plates.kind = "force"
    plates.scale = 2 * np.pi * cfg.geometry.radius
    return plates
