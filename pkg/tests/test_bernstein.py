import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma as G

from subheat import bernstein
from subheat.errors import ConfigError, ValidationError

CATALOG_CASES = [
    ("relativistic", dict(alpha="1/2")),
    ("relativistic", dict(alpha="1/3")),
    ("shifted-power", dict(alpha="1/2", c=1)),
    ("sqrt-exponential", dict(c=1)),
    ("gamma-ratio-1", dict(c=1)),
    ("gamma-ratio-2", dict(alpha="1/2")),
    ("gamma-ratio-2", dict(alpha="1/3")),
]


@pytest.mark.parametrize("name,kw", CATALOG_CASES)
def test_levy_integral_matches_closed_form(name, kw):
    spec = bernstein.catalog(name, **kw)
    lam = np.array([0.05, 0.3, 2.0, 50.0, 1e3])
    ref = spec.bernstein(lam)
    assert np.allclose(bernstein.eval_f(spec, lam), ref, rtol=1e-10, atol=0)
    assert np.allclose(bernstein.eval_f_direct(spec, lam), ref, rtol=1e-9, atol=0)


def test_relativistic_shift_and_expansion(rel):
    # m(t) = t^(-3/2) e^(-t) / (2 sqrt(pi)); mbar = -1 and
    # f ~ lam^(1/2) - 1 + lam^(-1/2)/2 - lam^(-3/2)/8 + lam^(-5/2)/16
    assert abs(rel.mbar + 1.0) < 1e-12
    terms = bernstein.watson_expand(rel, 4)
    got = {e: c for e, c in terms}
    ref = {Fraction(1, 2): 1.0, Fraction(0): -1.0, Fraction(-1, 2): 0.5, Fraction(-3, 2): -0.125,
           Fraction(-5, 2): 0.0625}
    assert set(got) == set(ref)
    for e, c in ref.items():
        assert abs(got[e] - c) < 1e-12


def test_relativistic_p_coefficients(rel):
    c = 1 / (2 * math.sqrt(math.pi))
    assert np.allclose(rel.p[:4], [c, -c, c / 2, -c / 6], rtol=1e-14)
    assert rel.p_sqrtpi_exact[:3] == (Fraction(1, 2), Fraction(-1, 2), Fraction(1, 4))


def test_gamma_ratio_shift(gr2):
    # the printed Bernstein function carries the killing term 1/Gamma(1 - alpha)
    assert abs(gr2.mbar + 1 / math.sqrt(math.pi)) < 1e-12


def test_truncated_stable_against_quadpack():
    from scipy.integrate import quad

    spec = bernstein.truncated_stable("2/5", p0=0.7)
    assert abs(spec.mbar + 0.7 / 0.4) < 1e-9
    for lam in (0.5, 10.0, 300.0):
        # algebraic endpoint weight t^(-1-a) handled by QUADPACK's qaws
        ref, _ = quad(lambda t: -math.expm1(-lam * t) / t if t > 0 else lam, 0.0, 1.0, weight="alg", wvar=(-0.4, 0.0),
                      epsabs=1e-13, epsrel=1e-12)
        assert abs(bernstein.eval_f(spec, lam) - 0.7 * ref) < 1e-9 * max(1.0, ref)


def test_derivatives_alternate(rel):
    lam = 3.0
    d1 = bernstein.f_derivative(rel, 1, lam)
    d2 = bernstein.f_derivative(rel, 2, lam)
    assert abs(d1 - 0.5 * (lam + 1) ** -0.5) < 1e-10
    assert abs(d2 + 0.25 * (lam + 1) ** -1.5) < 1e-10


def test_sigma_tilde(rel):
    r = np.array([0.0, 1.0, 7.0])
    assert np.allclose(bernstein.sigma_tilde(rel, r), np.sqrt(r**2 + 1), rtol=1e-12)


@pytest.mark.parametrize("N", [0, 1, 2, 3])
def test_watson_remainder_is_small_and_consistent(rel, N):
    lam = np.array([1e2, 1e4])
    rem = np.asarray(bernstein.watson_remainder(rel, N, lam))
    direct = rel.bernstein(lam) - bernstein.watson_partial_sum(rel, N, lam)
    # the closed form minus the partial sum loses ~eps*f absolute accuracy
    assert np.allclose(rem, direct, rtol=1e-6, atol=1e-13)


def test_expansion_slope(rel):
    chk = bernstein.check_expansion(rel, 2, np.logspace(2, 6, 9))
    assert chk.ok
    assert abs(chk.slope - (0.5 - 2)) < 0.05


def test_expansion_grid_rules(rel):
    with pytest.raises(ValueError):
        bernstein.check_expansion(rel, 2, [1.0, 100.0])
    with pytest.raises(ValueError):
        bernstein.check_expansion(rel, 2, [1e3, 1e2])


def test_validation_accepts_and_rejects(rel):
    assert bernstein.validate(rel).ok
    bad = bernstein.catalog("shifted-power", alpha="1/2", c=1)
    rep = bernstein.validate(bad)
    assert not rep.ok and any("mbar" in p for p in rep.problems)
    with pytest.raises(ValidationError):
        bernstein.require_valid(bad)


def test_validation_catches_wrong_coefficient(rel):
    p = list(rel.p)
    p[1] *= 1.5
    spec = bernstein.custom(rel.alpha, p, rel.density)
    rep = bernstein.validate(spec)
    assert any("order 1" in x for x in rep.problems)


def test_validation_catches_negative_density():
    spec = bernstein.custom("1/2", [1.0], lambda t: np.where(np.asarray(t) < 5, np.asarray(t) ** -1.5, -1e-3))
    rep = bernstein.validate(spec)
    assert any("negative" in x for x in rep.problems)
    assert not rep.ok


def test_catalog_errors():
    with pytest.raises(ConfigError):
        bernstein.catalog("nope", alpha="1/2")
    with pytest.raises(ConfigError):
        bernstein.catalog("relativistic")
    with pytest.raises(ConfigError):
        bernstein.catalog("relativistic", alpha="3/2")
    with pytest.raises(ConfigError):
        bernstein.catalog("sqrt-exponential", c=-1)


def test_as_rational():
    assert bernstein.as_rational("2/7") == Fraction(2, 7)
    assert bernstein.as_rational(0.5) == Fraction(1, 2)


@settings(max_examples=25, deadline=None)
@given(st.fractions(min_value=Fraction(1, 10), max_value=Fraction(9, 10), max_denominator=12),
       st.floats(0.2, 5.0))
def test_truncated_stable_is_bernstein(alpha, p0):
    spec = bernstein.truncated_stable(alpha, p0)
    lam = np.array([0.1, 1.0, 10.0, 100.0])
    f = np.asarray(bernstein.eval_f(spec, lam))
    assert np.all(f > 0) and np.all(np.diff(f) > 0)
    # concave: secant slopes decrease
    assert np.all(np.diff(np.diff(f) / np.diff(lam)) < 0)
