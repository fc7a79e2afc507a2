"""Low-temperature behaviour of the Lifshitz free energy.

The primed Matsubara sum is split with the Abel-Plana formula

    sum'_n f(n) = int_0^inf f(t) dt + int_0^inf g(t) / (e^{2 pi t} - 1) dt,
    g(t) = i [f(it) - f(-it)],

into a frequency integral (the zero-temperature energy when the material is
frozen) and a boundary term that vanishes as T -> 0. Entropies come from
central differences in T with Richardson extrapolation; the entropy left
over at T = 0 by a discontinuous TE zero mode has a closed quadrature form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import mpmath
import numpy as np
from scipy import integrate

from . import lifshitz as lf
from . import quadrature as quad
from .constants import C, HBAR, K_B
from .materials import Material, MaterialError, Plasma, dielectric_coupling

FINITE_DIFFERENCE = "FiniteDifference"
ABEL_PLANA = "AbelPlanaAnalytic"
CLOSED_FORM = "ZeroTemperatureClosedForm"

VIOLATES = "VIOLATES"
SATISFIES = "SATISFIES"
INCONCLUSIVE = "INCONCLUSIVE"

ENTROPY_TOLERANCE = lf.MIN_TOLERANCE


class StepTooLarge(ValueError):
    """Finite-difference step outside the asymptotic h^2 regime."""


class ExtrapolationError(RuntimeError):
    """The low-temperature fit did not settle."""


@dataclass(frozen=True)
class AbelPlanaResult:
    integral_term: float
    boundary_term: float
    total: float
    error_estimate: float


@dataclass(frozen=True)
class EntropyPoint:
    temperature: float
    entropy: float
    method: str
    error: float = 0.0


@dataclass(frozen=True)
class NernstVerdict:
    verdict: str
    S0_extrapolated: float
    S0_error: float
    S0_closed_form: float
    discrepancy: float
    points: tuple = ()

    def format(self) -> str:
        return (
            f"verdict={self.verdict}, S0_extrapolated={self.S0_extrapolated:.12e}, "
            f"S0_error={self.S0_error:.12e}, S0_closed_form={self.S0_closed_form:.12e}, "
            f"discrepancy={self.discrepancy:.12e}"
        )


# ---------------------------------------------------------------- Abel-Plana


def abel_plana_sum(
    f: Callable[[np.ndarray], np.ndarray],
    g: Callable[[np.ndarray], np.ndarray],
    tolerance: float = 1e-12,
) -> AbelPlanaResult:
    """Primed sum of ``f`` over the non-negative integers.

    Parameters
    ----------
    f : callable
        Vectorised summand of a continuous index ``t >= 0``.
    g : callable
        The continued difference ``i [f(it) - f(-it)]`` as a real function
        of ``t``; supplied by the caller.
    tolerance : float
        Relative tolerance of each of the two integrals.
    """

    def boundary(t):
        with np.errstate(over="ignore"):
            return g(t) / np.expm1(2 * np.pi * t)

    integral, e1 = quad.integrate_to_infinity(f, rtol=tolerance)
    edge, e2 = quad.integrate_to_infinity(boundary, rtol=tolerance)
    total = integral + edge
    err = e1 + e2 + 4 * np.finfo(float).eps * (abs(integral) + abs(edge))
    return AbelPlanaResult(integral, edge, total, err)


def primed_sum(f: Callable[[np.ndarray], np.ndarray], rtol: float = 1e-15, max_terms: int = 10**7) -> float:
    """Direct primed summation of a decaying ``f``, stopped once a block of
    terms no longer moves the partial sum."""
    total = [0.5 * float(f(np.array([0.0]))[0])]
    start, block = 1, 256
    while start < max_terms:
        vals = f(np.arange(start, start + block, dtype=float))
        total.extend(vals.tolist())
        if np.max(np.abs(vals[-16:])) <= rtol * abs(math.fsum(total)):
            return math.fsum(total)
        start += block
        block = min(2 * block, 1 << 16)
    raise lf.NonConvergence("primed sum did not converge")


def _polylog_real(s, x):
    return np.frompyfunc(lambda v: float(mpmath.polylog(s, v)), 1, 1)(x).astype(float)


def ideal_metal_summand(d: float, T: float):
    """Per-mode function of the ideal-metal free energy (both polarisations).

    Returns ``(f, g, prefactor)`` with ``F = prefactor * sum'_n f(n)``. In
    terms of ``theta = 4 pi k_B T d t / (hbar c)``,
    ``f = -(Li3(e^-theta) + theta Li2(e^-theta)) / (2 d^2)`` and the
    continued difference is ``(theta Re Li2(e^{i theta}) - Im Li3(e^{i theta})) / d^2``,
    evaluated with the Bernoulli-polynomial closed forms on the unit circle.
    """
    coef = 4 * np.pi * K_B * T * d / (HBAR * C)

    def f(t):
        th = coef * np.asarray(t, dtype=float)
        x = np.exp(-th)
        return -(_polylog_real(3, x) + th * _polylog_real(2, x)) / (2 * d * d)

    def g(t):
        return _ideal_g(coef * np.asarray(t, dtype=float)) / (d * d)

    return f, g, K_B * T / (2 * np.pi)


def _ideal_g(theta):
    # theta = phi + 2 pi k; the k = 0 part is expanded so no O(theta) terms cancel.
    k = np.floor(theta / (2 * np.pi))
    phi = theta - 2 * np.pi * k
    c2 = np.pi**2 / 6 - np.pi * phi / 2 + phi * phi / 4
    return -np.pi * phi * phi / 4 + phi**3 / 6 + 2 * np.pi * k * c2


def _frequency_integral(cfg: lf.ThermalConfiguration, kind: str, channel: str, tolerance: float):
    """``int_0^inf dx`` of the raw mode integral, ``x = 2 xi d / c``; the
    material is evaluated at ``cfg.material_temperature``."""
    d = cfg.gap

    def f(x):
        flat = x.ravel()
        vals, _ = lf.mode_integrals(
            cfg, flat * C / (2 * d), np.zeros(flat.shape, bool), channel, kind, 0.1 * tolerance, y_low=flat
        )
        return vals.reshape(x.shape)

    return quad.integrate_to_infinity(f, rtol=tolerance)


def _continuum_channel(cfg, kind, channel, tolerance) -> lf.ChannelResult:
    value, err = _frequency_integral(cfg, kind, channel, tolerance)
    with mpmath.workdps(lf.EXACT_DPS):
        pref = mpmath.mpf(HBAR) * mpmath.mpf(C) / (mpmath.pi**2 * mpmath.mpf(cfg.gap))
        pref = pref / 8 if kind == lf.FREE_ENERGY else -pref / 4
    p = float(pref)
    return lf.ChannelResult(
        channel, kind, p * value, np.array([p * value]), 0, 0.0, abs(p) * err, np.array([value]), pref
    )


def zero_temperature_result(cfg: lf.ThermalConfiguration, kind: str, tolerance: float = 1e-10) -> lf.CasimirResult:
    """Free energy or pressure at T = 0: the integral term of the Abel-Plana
    split with the material at zero temperature."""
    lf.check_tolerance(tolerance)
    if cfg.temperature != 0:
        cfg = cfg.at(temperature=0.0, frozen_temperature=None)
    te = _continuum_channel(cfg, kind, lf.TE, tolerance)
    tm = _continuum_channel(cfg, kind, lf.TM, tolerance)
    return lf.CasimirResult(kind, te, tm)


def lifshitz_abel_plana(cfg: lf.ThermalConfiguration, tolerance: float = 1e-10) -> AbelPlanaResult:
    """Abel-Plana split of the plate-plate free energy at ``cfg.temperature``.

    The integral term is the frequency integral with the material held at
    the configured temperature. For ideal metals the boundary term comes
    from the continued summand; otherwise it is the remainder of the direct
    Matsubara sum, which also carries any zero-mode discontinuity.
    """
    if cfg.temperature <= 0:
        raise ValueError("the Abel-Plana split needs T > 0")
    te = _continuum_channel(cfg, lf.FREE_ENERGY, lf.TE, tolerance)
    tm = _continuum_channel(cfg, lf.FREE_ENERGY, lf.TM, tolerance)
    integral = te.value + tm.value
    ierr = te.error + tm.error
    if all(b.is_ideal for b in cfg.bodies):
        f, g, pref = ideal_metal_summand(cfg.gap, cfg.temperature)
        res = abel_plana_sum(lambda t: np.zeros_like(t), g, tolerance)
        edge = pref * res.boundary_term
        err = ierr + pref * res.error_estimate
    else:
        direct = lf.free_energy(cfg, tolerance)
        edge = direct.total - integral
        err = ierr + direct.error
    return AbelPlanaResult(integral, edge, integral + edge, err)


def boundary_term_derivative(cfg: lf.ThermalConfiguration, h: float | None = None, tolerance: float = 1e-10) -> float:
    """Central difference of the Abel-Plana boundary term in T (J/(K m^2))."""
    T = cfg.temperature
    h = T / 10 if h is None else h
    up = lifshitz_abel_plana(cfg.at(temperature=T + h), tolerance).boundary_term
    down = lifshitz_abel_plana(cfg.at(temperature=T - h), tolerance).boundary_term
    return (up - down) / (2 * h)


def ideal_metal_entropy(d: float, T: float, tolerance: float = 1e-12) -> EntropyPoint:
    """Entropy of ideal-metal plates from the T-derivative of the boundary term.

    With ``beta = hbar c / (2 k_B T d)`` the boundary free energy is
    ``hbar c / (8 pi^2 d^3) int G(theta) / (e^{beta theta} - 1) dtheta``,
    which is differentiated under the integral.
    """
    if T <= 0:
        return EntropyPoint(0.0, 0.0, ABEL_PLANA, 0.0)
    beta = HBAR * C / (2 * K_B * T * d)

    def integrand(u):
        with np.errstate(over="ignore"):
            w = np.where(u < 700, u * np.exp(-u) / np.expm1(-u) ** 2, 0.0)
        return _ideal_g(u / beta) * w

    val, err = quad.integrate_to_infinity(integrand, rtol=tolerance)
    scale = -HBAR * C / (8 * np.pi**2 * d**3) / (beta * T)
    return EntropyPoint(T, scale * val, ABEL_PLANA, abs(scale) * err)


# ------------------------------------------------------------------ entropy


def _exact_free_energy(cfg, T, tolerance):
    return lf.free_energy(cfg.at(temperature=T), tolerance).exact_total()


def entropy_finite_difference(
    cfg: lf.ThermalConfiguration,
    T: float,
    h: float | None = None,
    tolerance: float = ENTROPY_TOLERANCE,
    frozen: bool = False,
) -> EntropyPoint:
    """Entropy per unit area ``-dF/dT`` by central differences.

    Differences at steps ``h``, ``h/2`` and ``h/4`` are combined by two
    Richardson extrapolations; the reported value is the finer one and the
    error their difference. All temperature dependences of the material
    follow ``T`` unless ``frozen`` pins them at ``T``.

    Raises
    ------
    StepTooLarge
        If ``h > T/10`` or the three differences do not shrink like ``h^2``.
    """
    h = T / 10 if h is None else h
    if not (0 < h <= T / 10 * (1 + 1e-12)):
        raise StepTooLarge("step must satisfy 0 < h <= T/10")
    if frozen:
        cfg = cfg.at(frozen_temperature=T)
    with mpmath.workdps(lf.EXACT_DPS):
        s = []
        for step in (h, h / 2, h / 4):
            up = _exact_free_energy(cfg, T + step, tolerance)
            down = _exact_free_energy(cfg, T - step, tolerance)
            s.append(-(up - down) / (2 * step))
        r1 = (4 * s[1] - s[0]) / 3
        r2 = (4 * s[2] - s[1]) / 3
        d1, d2 = s[0] - s[1], s[1] - s[2]
        noise = 64 * np.finfo(float).eps * abs(float(_exact_free_energy(cfg, T, tolerance))) / h
        if abs(d2) > noise and not 2.5 <= float(d1 / d2) <= 6.5:
            raise StepTooLarge(f"curvature test failed at T = {T:g} K, h = {h:g} K")
        return EntropyPoint(T, float(r2), FINITE_DIFFERENCE, float(abs(r2 - r1)))


# ------------------------------------------------------- closed form at T = 0


def _jump_integrand(u, a_one, a_two):
    """``u ln[(1 - R1 e^-2u) / (1 - R2 e^-2u)]`` for TE reflections with
    scaled couplings ``a = K^2 d^2`` per body (``None`` = ideal)."""

    def refl(a):
        # r and log r; 1 - r = 2u / (u + s) keeps both accurate near r = 1
        if a is None:
            return np.ones_like(u), np.zeros_like(u)
        s = np.sqrt(u * u + a)
        return a / (u + s) ** 2, np.log1p(-2 * u / (u + s))

    def gap(a1, a2):
        # r(a2) - r(a1) without cancellation
        if a1 is None:
            return np.zeros_like(u)
        s1 = np.sqrt(u * u + a1)
        s2 = np.sqrt(u * u + a2)
        return 2 * u * (a2 - a1) / ((s1 + s2) * (u + s1) * (u + s2))

    # a = 0 gives log r = -inf, which is the correct r = 0 limit
    with np.errstate(divide="ignore", over="ignore", invalid="ignore"):
        r1b, _ = refl(a_one[1])
        r2a, l2a = refl(a_two[0])
        _, l2b = refl(a_two[1])
        dp = r2a * gap(a_one[1], a_two[1]) + r1b * gap(a_one[0], a_two[0])
        one_minus = -np.expm1(l2a + l2b - 2 * u)
        val = np.log1p(np.exp(-2 * u) * dp / one_minus)
    return np.where(u > 0, u * val, 0.0)


def _entropy_jump(d: float, a_one, a_two, tolerance: float = 1e-10) -> float:
    """``k_B/(4 pi d^2) int_0^inf u du ln[...]`` split at ``u = 1``."""
    if all(a is None for a in a_one):
        return 0.0
    total = 0.0
    for lo, hi in ((0.0, 1.0), (1.0, np.inf)):
        val, err, *info = integrate.quad(
            lambda u: float(_jump_integrand(np.array([u]), a_one, a_two)[0]),
            lo, hi, epsabs=0.0, epsrel=tolerance, limit=500, full_output=1,
        )
        if len(info) > 1 and err > 10 * tolerance * abs(val):
            raise quad.QuadratureFailure(f"zero-temperature entropy quadrature: {info[1]}")
        total += val
    return K_B / (4 * np.pi * d * d) * total


def entropy_zero_temp(d: float, plasma_frequency: float, inverse_sq: float, tolerance: float = 1e-10) -> float:
    """Entropy per unit area at T = 0 left by a discontinuous TE zero mode.

    ``S(0) = k_B/(4 pi) int q dq ln{[1 - r1^2 e^{-2qd}] / [1 - r2^2 e^{-2qd}]}``
    with ``r_i = (q - delta_i)/(q + delta_i)``,
    ``delta_1 = sqrt(q^2 + inverse_sq + omega_p^2/c^2)`` and
    ``delta_2 = sqrt(q^2 + inverse_sq)``. Evaluated in ``u = q d``.
    """
    if not d > 0:
        raise ValueError("d must be positive")
    if not plasma_frequency >= 0 or not inverse_sq >= 0:
        raise ValueError("plasma frequency and inverse square length must be >= 0")
    a1 = (inverse_sq + (plasma_frequency / C) ** 2) * d * d
    a2 = inverse_sq * d * d
    if a1 == a2:
        return 0.0
    return _entropy_jump(d, (a1, a1), (a2, a2), tolerance)


def _zero_limits(mat: Material):
    """Scaled-free TE couplings (1/m^2) just above and at the zero mode as T -> 0."""
    if mat.is_ideal:
        return None, None
    model = mat.model
    if mat.screening_length == "debye-huckel" and mat.screening != "none":
        raise MaterialError("Debye-Hückel screening has no finite T -> 0 limit; use thomas-fermi")
    policy = mat.policy(1.0)
    above = float(dielectric_coupling(model, 0.0, 0.0)) + policy.at(1)
    dissipative = not isinstance(model, Plasma) and model.relaxation > 0
    at_zero = (0.0 if dissipative else (model.plasma_frequency / C) ** 2) + policy.at(0)
    return above, at_zero


def zero_temperature_entropy(cfg: lf.ThermalConfiguration, tolerance: float = 1e-10) -> EntropyPoint:
    """T = 0 entropy of ``cfg`` from the TE zero-mode jump (both bodies).

    The TM zero mode reflects perfectly on both sides of the jump and does
    not contribute.
    """
    d = cfg.gap
    limits = [_zero_limits(b) for b in cfg.bodies]
    a_one = tuple(None if a is None else a * d * d for a, _ in limits)
    a_two = tuple(None if b is None else b * d * d for _, b in limits)
    if a_one == a_two:
        return EntropyPoint(0.0, 0.0, CLOSED_FORM)
    if any(a is None for a in a_one):
        raise MaterialError("closed form needs two real bodies or two ideal ones")
    return EntropyPoint(0.0, _entropy_jump(d, a_one, a_two, tolerance), CLOSED_FORM)


# ---------------------------------------------------------------- Nernst


EXTRAPOLATION_BASES = {"low-t": (0, 2, 3), "even": (0, 2), "quadratic": (0, 1, 2)}


def extrapolate_to_zero(temperatures, values, errors=None, basis: str = "low-t"):
    """Low-temperature extrapolation of S(T) by polynomial interpolation.

    ``basis`` names the powers of T: ``"low-t"`` is ``S0 + b T^2 + c T^3``
    (the form of the ideal-metal and plasma low-temperature expansions),
    ``"even"`` drops the cubic, ``"quadratic"`` is ``S0 + a T + b T^2``.
    The curve goes through the lowest temperatures; the error is the shift
    of S0 when the stencil moves up by one temperature plus the propagated
    point errors.
    """
    powers = EXTRAPOLATION_BASES.get(basis)
    if powers is None:
        raise ValueError(f"basis must be one of {sorted(EXTRAPOLATION_BASES)}")
    order = np.argsort(temperatures)
    T = np.asarray(temperatures, float)[order]
    S = np.asarray(values, float)[order]
    E = np.zeros_like(S) if errors is None else np.asarray(errors, float)[order]
    width = len(powers)
    if len(T) < width + 1:
        raise ValueError(f"need at least {width + 1} temperatures")

    def fit(sl):
        A = T[sl, None] ** np.array(powers)[None, :]
        row = np.linalg.inv(A)[0]
        return float(row @ S[sl]), float(np.abs(row) @ E[sl])

    s0, e0 = fit(slice(0, width))
    s1, _ = fit(slice(1, width + 1))
    err = abs(s0 - s1) + e0
    if not math.isfinite(err) or err > np.max(np.abs(S)):
        raise ExtrapolationError("low-temperature fit did not settle")
    return s0, err


def nernst_verdict(
    cfg: lf.ThermalConfiguration,
    T_sequence: Sequence[float],
    basis: str = "low-t",
    tolerance: float = ENTROPY_TOLERANCE,
) -> NernstVerdict:
    """Decide whether the entropy of ``cfg`` extrapolates to zero at T = 0.

    VIOLATES when the extrapolated S(0) is more than three errors from zero
    with the sign of the closed form, SATISFIES when it is zero within three
    errors, INCONCLUSIVE otherwise.
    """
    T_sequence = [float(t) for t in T_sequence]
    if len(T_sequence) < 4:
        raise ValueError("need at least 4 temperatures")
    if any(b >= a for a, b in zip(T_sequence, T_sequence[1:])):
        raise ValueError("temperatures must be strictly decreasing")
    points = tuple(entropy_finite_difference(cfg, T, tolerance=tolerance) for T in T_sequence)
    s0, err = extrapolate_to_zero(
        [p.temperature for p in points], [p.entropy for p in points], [p.error for p in points], basis
    )
    try:
        closed = zero_temperature_entropy(cfg).entropy
    except MaterialError:
        closed = math.nan
    if abs(s0) <= 3 * err:
        verdict = SATISFIES
    elif not math.isnan(closed) and closed != 0 and np.sign(s0) == np.sign(closed):
        verdict = VIOLATES
    else:
        verdict = INCONCLUSIVE
    discrepancy = abs(s0 - closed) / abs(closed) if closed else abs(s0 - closed)
    return NernstVerdict(verdict, s0, err, closed, discrepancy, points)


def format_entropy_sweep(points: Sequence[EntropyPoint]) -> str:
    lines = ["T_K,S,method,err"]
    for p in points:
        lines.append(f"{p.temperature:.12e},{p.entropy:.12e},{p.method},{p.error:.12e}")
    return "\n".join(lines) + "\n"
