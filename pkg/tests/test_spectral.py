import cmath
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import gamma as G, kv, rgamma

from subheat import bernstein, spectral
from subheat.errors import ConfigError, TruncationError

PI = math.pi
EULER = 0.5772156649015329


def zeta_n2(z):
    # relativistic, n = 2, direct normalisation: (1/2pi) int_0^inf (1 + r^2)^(-z/2) r dr
    return (1 / (2 * PI)) / (z - 2)


def zeta_n3(z):
    # (1/2pi^2) int_0^inf (1 + r^2)^(-z/2) r^2 dr = (1/2pi^2) Gamma(3/2) Gamma(z/2 - 3/2) / (2 Gamma(z/2))
    return (1 / (2 * PI**2)) * G(1.5) * G(z / 2 - 1.5) * rgamma(z / 2) / 2


def test_kappa():
    assert spectral.kappa(3, "direct") == 1
    assert spectral.kappa(3, "paper") == Fraction(1, 3)
    with pytest.raises(ConfigError):
        spectral.kappa(3, "other")


def test_n2_table_reduced_kappa(rel):
    t = spectral.pole_table(rel, 2, 4, "paper")
    poles = t.poles()
    assert [e.z for e in poles] == [2]
    assert abs(poles[0].residue - 1 / (4 * PI)) < 1e-12
    # k = 4 is structurally analytic: (z^2 + 2z)/8 vanishes at z = -2
    assert t.entry_at(Fraction(-2)).analytic


def test_n3_table_both_normalisations(rel):
    reduced = spectral.pole_table(rel, 3, 4, "paper")
    direct = spectral.pole_table(rel, 3, 4, "direct")
    ref = {3: 1 / (6 * PI**2), 1: -1 / (12 * PI**2), -1: -1 / (48 * PI**2)}
    assert {int(e.z): e.residue for e in reduced.poles()} == pytest.approx(ref, abs=1e-12)
    for e_p, e_d in zip(reduced.entries, direct.entries):
        assert e_d.residue == pytest.approx(3 * e_p.residue, abs=1e-15)


def test_direct_residues_match_closed_form(rel):
    # residues of the closed form at z = 3, 1, -1
    h = 1e-6
    for z0 in (3.0, 1.0, -1.0):
        num = h * zeta_n3(z0 + h)
        e = spectral.pole_table(rel, 3, 4, "direct").entry_at(Fraction(int(z0)))
        assert e.residue == pytest.approx(num, rel=1e-5)


@pytest.mark.parametrize("z", [0, -1, -2, -3.5, 0.5, 4.0, 0.5 + 1j, -1.25 - 2j])
def test_zeta_continuation_n2(rel, z):
    v = spectral.zeta_continue(rel, 2, z)
    assert abs(v.value - zeta_n2(z)) < 1e-9
    assert v.error < 1e-8


@pytest.mark.parametrize("z", [0, -2, 2.5, 0.3 + 0.7j])
def test_zeta_continuation_n3(rel, z):
    v = spectral.zeta_continue(rel, 3, z)
    assert abs(v.value - zeta_n3(z)) < 1e-9


def test_zeta_reduced_normalisation_scales(rel):
    d = spectral.zeta_continue(rel, 3, 2.5, normalization="direct")
    p = spectral.zeta_continue(rel, 3, 2.5, normalization="paper")
    assert p.value == pytest.approx(d.value / 3, rel=1e-14)


@settings(max_examples=15, deadline=None)
@given(st.floats(-4, 5), st.floats(-3, 3))
def test_zeta_continuation_random_points(x, y):
    rel = bernstein.catalog("relativistic", alpha="1/2")
    z = complex(x, y)
    if abs(z - 2) < 0.05:
        return
    assert abs(spectral.zeta_continue(rel, 2, z).value - zeta_n2(z)) < 1e-8


def test_zeta_refuses_poles_and_bad_truncation(rel):
    with pytest.raises(ConfigError):
        spectral.zeta_continue(rel, 2, 2.0)
    with pytest.raises(TruncationError):
        spectral.zeta_continue(rel, 2, -1.0, K=1)
    with pytest.raises(ConfigError):
        spectral.zeta_continue(rel, 2, 0.0, R=0.5)


def test_heat_trace_n2_against_closed_form(rel):
    # (1/2pi) e^-t (1+t)/t^2 = (1/2pi) sum_k (-1)^k (1-k)/k! t^(k-2)
    _, _, exp = spectral.assemble(rel, 2, 4)
    assert not exp.log_terms
    for k in range(5):
        ref = (1 / (2 * PI)) * (-1) ** k * (1 - k) / math.factorial(k)
        assert exp.coefficient(k - 2) == pytest.approx(ref, abs=1e-9)


def test_heat_trace_n3_against_bessel_expansion(rel):
    # K_2(t)/(2 pi^2 t) = 1/(pi^2 t^3) - 1/(4 pi^2 t) - t (log t - log 2 + gamma - 3/4)/(16 pi^2) + ...
    _, _, exp = spectral.assemble(rel, 3, 4)
    assert exp.coefficient(-3) == pytest.approx(1 / PI**2, abs=1e-14)
    assert exp.coefficient(-2) == 0
    assert exp.coefficient(-1) == pytest.approx(-1 / (4 * PI**2), abs=1e-14)
    assert exp.coefficient(0) == pytest.approx(0.0, abs=1e-10)
    assert exp.log_coefficient(1) == pytest.approx(1 / (16 * PI**2), abs=1e-14)
    assert exp.unresolved_finite_parts == (1,)
    t = np.array([1e-3, 1e-2])
    finite = (math.log(2) + 0.75 - EULER) / (16 * PI**2)
    ref = kv(2, t) / (2 * PI**2 * t) - finite * t
    assert np.allclose(exp.evaluate(t), ref, rtol=1e-9)


def test_shifted_expansion(rel):
    _, _, exp = spectral.assemble(rel, 2, 4)
    shifted = spectral.apply_shift(exp, rel.mbar)
    t = 0.01
    assert shifted.evaluate(t) == pytest.approx(math.exp(t) * exp.evaluate(t), rel=1e-14)


def test_irrational_flag_records_collision():
    spec = bernstein.catalog("relativistic", alpha="1/2", treat_as_irrational=True)
    _, _, exp = spectral.assemble(spec, 3, 4)
    assert not exp.log_terms
    assert exp.collisions and exp.unresolved_finite_parts == (1,)


def test_banuelos_leading_term(rel):
    _, _, exp = spectral.assemble(rel, 3, 4)
    assert spectral.banuelos_crosscheck(3, rel.alpha, 1.0) == pytest.approx(exp.coefficient(-3), rel=1e-14)


def test_missing_zeta_value_is_reported(rel):
    t = spectral.pole_table(rel, 2, 4)
    with pytest.raises(ConfigError):
        spectral.heat_trace_expansion(t, {})


def test_exports(rel):
    t, _, exp = spectral.assemble(rel, 3, 4)
    assert spectral.table_to_csv(t).startswith("k,z,residue")
    assert "log" in spectral.expansion_to_csv(exp)
    assert "natural log" in spectral.expansion_to_text(exp)
    d = exp.to_dict()
    assert d["log_convention"] == "natural"
