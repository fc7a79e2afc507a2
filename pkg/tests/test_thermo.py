import math

import numpy as np
import pytest
from scipy import special

from thermocasimir import lifshitz as lf
from thermocasimir import materials as mt
from thermocasimir import thermo as th

HBAR = 6.62607015e-34 / (2 * math.pi)
KB = 1.380649e-23
C = 299792458.0
ZETA3 = 1.2020569031595942
IDEAL = mt.Material(mt.IdealMetal())
AU_TF = dict(screening="all", screening_length="thomas-fermi", relaxation_exponent=5)


# --------------------------------------------------------------- Abel-Plana


@pytest.mark.parametrize("a", [0.5, 1.0, 2.0])
def test_abel_plana_exponential(a):
    res = th.abel_plana_sum(lambda t: np.exp(-a * t), lambda t: 2 * np.sin(a * t))
    assert res.total == pytest.approx(math.exp(-a) / (1 - math.exp(-a)) + 0.5, abs=1e-10)
    assert res.total == res.integral_term + res.boundary_term
    assert res.integral_term == pytest.approx(1 / a, rel=1e-12)


def test_abel_plana_exponential_value_at_one():
    res = th.abel_plana_sum(lambda t: np.exp(-t), lambda t: 2 * np.sin(t))
    # sum over n >= 1 excludes the half-weighted n = 0 term
    assert res.total - 0.5 == pytest.approx(0.5819767068693265, abs=1e-10)


@pytest.mark.parametrize("b", [1.0, 2.5, 0.3])
def test_abel_plana_rational(b):
    res = th.abel_plana_sum(lambda t: 1 / (t + b) ** 2, lambda t: 4 * b * t / (b * b + t * t) ** 2)
    oracle = special.polygamma(1, b) - 0.5 / b**2
    assert res.total == pytest.approx(oracle, abs=max(1e-8, 10 * res.error_estimate))
    if b == 1.0:
        assert res.total == pytest.approx(math.pi**2 / 6 - 0.5, abs=1e-10)


def test_abel_plana_even_function_has_no_boundary_term():
    res = th.abel_plana_sum(lambda t: np.exp(-t * t), lambda t: np.zeros_like(t))
    assert res.boundary_term == 0.0
    assert res.total == pytest.approx(math.sqrt(math.pi) / 2, rel=1e-12)


@pytest.mark.parametrize("T", [30.0, 300.0, 3000.0])
def test_abel_plana_ideal_lifshitz_family(T):
    d = 200e-9
    f, g, pref = th.ideal_metal_summand(d, T)
    res = th.abel_plana_sum(f, g, 1e-11)
    direct = th.primed_sum(f)
    assert res.total == pytest.approx(direct, rel=1e-10, abs=res.error_estimate)
    e0 = -(math.pi**2) * HBAR * C / (720 * d**3)
    assert pref * res.integral_term == pytest.approx(e0, rel=1e-10)


@pytest.mark.parametrize("material", [IDEAL, mt.gold(screening="n0")])
def test_lifshitz_abel_plana_total_matches_direct_sum(material):
    c = lf.ThermalConfiguration(200e-9, 300.0, material)
    res = th.lifshitz_abel_plana(c)
    assert res.total == pytest.approx(lf.free_energy(c).total, rel=1e-9)


def test_boundary_term_vanishes_as_temperature_drops():
    c = lf.ThermalConfiguration(200e-9, 1.0, mt.gold(**AU_TF))
    b = [abs(th.lifshitz_abel_plana(c.at(temperature=T)).boundary_term) for T in (300.0, 100.0, 30.0)]
    assert b[0] > b[1] > b[2]
    ideal = [abs(th.lifshitz_abel_plana(c.at(temperature=T, material=IDEAL)).boundary_term) for T in (300, 30, 3)]
    assert ideal[0] > ideal[1] > ideal[2] > 0


def test_boundary_derivative_is_ideal_entropy():
    c = lf.ThermalConfiguration(200e-9, 300.0, IDEAL)
    assert -th.boundary_term_derivative(c) == pytest.approx(th.ideal_metal_entropy(200e-9, 300.0).entropy, rel=1e-5)


@pytest.mark.parametrize("T", [0.5, 30.0, 300.0])
def test_ideal_metal_entropy_low_temperature_expansion(T):
    d = 200e-9
    oracle = 3 * ZETA3 * KB**3 * T**2 / (2 * math.pi * HBAR**2 * C**2) - 4 * math.pi**2 * KB**4 * T**3 * d / (
        45 * HBAR**3 * C**3
    )
    assert th.ideal_metal_entropy(d, T).entropy == pytest.approx(oracle, rel=1e-10)


def test_zero_temperature_result_is_integral_term():
    c = lf.ThermalConfiguration(200e-9, 300.0, mt.gold(model="plasma"))
    zero = th.zero_temperature_result(c.at(temperature=0.0), lf.FREE_ENERGY)
    assert zero.te.n_max == 0
    assert zero.total == pytest.approx(th.lifshitz_abel_plana(c).integral_term, rel=1e-12)


# ------------------------------------------------------------------ entropy


def test_entropy_step_must_be_small():
    c = lf.ThermalConfiguration(200e-9, 10.0, IDEAL)
    with pytest.raises(th.StepTooLarge):
        th.entropy_finite_difference(c, 10.0, h=2.0)
    with pytest.raises(th.StepTooLarge):
        th.entropy_finite_difference(c, 10.0, h=-1.0)


def test_ideal_entropy_finite_difference_matches_analytic():
    d = 200e-9
    c = lf.ThermalConfiguration(d, 10.0, IDEAL)
    p = th.entropy_finite_difference(c, 10.0)
    assert p.method == th.FINITE_DIFFERENCE
    assert p.entropy == pytest.approx(th.ideal_metal_entropy(d, 10.0).entropy, rel=1e-7, abs=3 * p.error)


def test_ideal_entropy_vanishes_from_above():
    c = lf.ThermalConfiguration(1e-6, 4.0, IDEAL)
    s = [th.entropy_finite_difference(c, T).entropy for T in (4.0, 2.0, 1.0)]
    assert 0 < s[2] < s[1] < s[0]
    assert s[1] / s[0] == pytest.approx(0.25, rel=0.01)


def test_frozen_material_changes_entropy():
    au = mt.gold(relaxation_exponent=2)
    c = lf.ThermalConfiguration(200e-9, 300.0, au)
    full = th.entropy_finite_difference(c, 300.0, tolerance=1e-10)
    frozen = th.entropy_finite_difference(c, 300.0, tolerance=1e-10, frozen=True)
    assert abs(full.entropy - frozen.entropy) > 1e-3 * abs(full.entropy)
    ideal = lf.ThermalConfiguration(200e-9, 300.0, IDEAL)
    a = th.entropy_finite_difference(ideal, 300.0, tolerance=1e-10)
    b = th.entropy_finite_difference(ideal, 300.0, tolerance=1e-10, frozen=True)
    assert a.entropy == b.entropy


def test_drude_minus_plasma_entropy_at_one_kelvin_is_closed_form(entropy_fixture):
    d = 200e-9
    drude = lf.ThermalConfiguration(d, 1.0, mt.gold(**AU_TF))
    plasma = drude.at(material=mt.gold(model="plasma"))
    diff = th.entropy_finite_difference(drude, 1.0).entropy - th.entropy_finite_difference(plasma, 1.0).entropy
    s0 = next(c["S0"] for c in entropy_fixture["cases"] if c["d_nm"] == 200)
    assert diff == pytest.approx(s0, rel=0.05)


# ----------------------------------------------------------- closed form


def test_entropy_zero_temp_matches_fixture(entropy_fixture):
    wp = entropy_fixture["plasma_frequency_rad_s"]
    lam = entropy_fixture["thomas_fermi_inverse_sq"]
    for case in entropy_fixture["cases"]:
        got = th.entropy_zero_temp(case["d_nm"] * 1e-9, wp, lam)
        assert got == pytest.approx(case["S0"], rel=1e-6)
        assert got < 0


def test_entropy_zero_temp_trivial_limits():
    assert th.entropy_zero_temp(200e-9, 0.0, 5.8e20) == 0.0
    small = th.entropy_zero_temp(200e-9, 1e12, 5.8e20)
    assert -1e-25 < small < 0
    with pytest.raises(ValueError):
        th.entropy_zero_temp(0.0, 1e16, 1e20)


def test_entropy_zero_temp_increases_towards_zero_with_distance():
    wp = mt.gold().model.plasma_frequency
    lam = mt.thomas_fermi_inverse_sq(mt.gold().carriers)
    s = [th.entropy_zero_temp(d * 1e-9, wp, lam) for d in (50, 100, 200, 400, 800, 1600)]
    assert all(a < b < 0 for a, b in zip(s, s[1:]))


def test_jump_integrand_is_nonpositive():
    u = np.geomspace(1e-8, 40, 2000)
    for a1, a2 in ((1e3, 1e2), (5e4, 5e4 - 1), (10.0, 0.0)):
        vals = th._jump_integrand(u, (a1, a1), (a2, a2))
        assert np.all(vals <= 0)


def test_configuration_closed_form():
    d = 200e-9
    au = mt.gold(**AU_TF)
    got = th.zero_temperature_entropy(lf.ThermalConfiguration(d, 1.0, au))
    lam = mt.thomas_fermi_inverse_sq(au.carriers)
    assert got.entropy == pytest.approx(th.entropy_zero_temp(d, au.model.plasma_frequency, lam), rel=1e-12)
    assert got.method == th.CLOSED_FORM
    for mat in (IDEAL, mt.gold(model="plasma"), mt.gold()):
        assert th.zero_temperature_entropy(lf.ThermalConfiguration(d, 1.0, mat)).entropy == 0.0
    with pytest.raises(mt.MaterialError):
        th.zero_temperature_entropy(lf.ThermalConfiguration(d, 1.0, mt.gold(screening="n0")))


# ----------------------------------------------------------- extrapolation


def test_extrapolation_recovers_polynomials():
    T = [4.0, 2.0, 1.0, 0.5]
    s = [-1.2e-20 + 1.5e-18 * t**2 + 2e-22 * t**3 for t in T]
    s0, err = th.extrapolate_to_zero(T, s)
    assert s0 == pytest.approx(-1.2e-20, rel=1e-9)
    assert err < 1e-9 * 1.2e-20
    q = [3.0 + 2.0 * t + 0.5 * t**2 for t in T]
    assert th.extrapolate_to_zero(T, q, basis="quadratic")[0] == pytest.approx(3.0, rel=1e-12)
    e0, e_err = th.extrapolate_to_zero(T, s, basis="even")
    assert abs(e0 + 1.2e-20) <= e_err


def test_extrapolation_errors():
    with pytest.raises(ValueError):
        th.extrapolate_to_zero([2.0, 1.0, 0.5], [1.0, 1.0, 1.0])
    with pytest.raises(ValueError):
        th.extrapolate_to_zero([4.0, 2.0, 1.0, 0.5], [1.0] * 4, basis="cubic")
    with pytest.raises(th.ExtrapolationError):
        th.extrapolate_to_zero([4.0, 2.0, 1.0, 0.5], [1.0, -1.0, 1.0, -1.0])


@pytest.mark.parametrize("temps", [[4.0, 2.0, 1.0], [4.0, 1.0, 2.0, 0.5], [1.0, 1.0, 0.5, 0.25]])
def test_nernst_verdict_preconditions(temps):
    with pytest.raises(ValueError):
        th.nernst_verdict(lf.ThermalConfiguration(200e-9, 1.0, IDEAL), temps)


def test_verdict_record_format():
    v = th.NernstVerdict(th.VIOLATES, -1.2e-20, 1e-22, -1.23e-20, 0.02)
    text = v.format()
    for key in ("verdict=VIOLATES", "S0_extrapolated=", "S0_closed_form=", "discrepancy="):
        assert key in text


def test_entropy_sweep_format():
    pts = [th.EntropyPoint(1.0, 2.5e-18, th.FINITE_DIFFERENCE, 1e-23), th.EntropyPoint(0.0, -1e-20, th.CLOSED_FORM)]
    lines = th.format_entropy_sweep(pts).splitlines()
    assert lines[0] == "T_K,S,method,err"
    assert lines[1] == "1.000000000000e+00,2.500000000000e-18,FiniteDifference,1.000000000000e-23"
    assert lines[2].split(",")[2] == "ZeroTemperatureClosedForm"
