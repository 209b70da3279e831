import itertools
import math
from collections import Counter
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate as si
from scipy.special import gamma as G

from subheat import symbolic
from subheat.errors import TruncationError, ValidationError
from subheat.symbolic import HeatTerm, PoleTerm, PowerTerm, SymbolSeries

A1, A2, A1SQ = (1,), (0, 1), (2,)


def generic(alpha="1/3", coeffs=(1, Fraction(1, 2), Fraction(-1, 8), Fraction(1, 16))):
    return SymbolSeries(Fraction(alpha), tuple(Fraction(c) for c in coeffs), 1.0, True)


def test_parametrix_general_form():
    s = generic()
    a = s.alpha
    b = symbolic.parametrix(s, 4)
    assert b[0].terms == (PoleTerm(Fraction(0), 1, (), Fraction(1)),)
    assert b[1].is_zero() and b[3].is_zero()
    assert b[2].terms == (PoleTerm(2 * a - 2, 2, A1, Fraction(1)),)
    assert set(b[4].terms) == {PoleTerm(2 * a - 4, 2, A2, Fraction(1)), PoleTerm(4 * a - 4, 3, A1SQ, Fraction(1))}


def test_heat_symbol_general_form():
    s = generic()
    a = s.alpha
    h = symbolic.heat_symbol(symbolic.parametrix(s, 4))
    assert h.term(0) == (HeatTerm(0, Fraction(0), (), Fraction(1)),)
    assert h.term(2) == (HeatTerm(1, 2 * a - 2, A1, Fraction(-1)),)
    assert set(h.term(4)) == {HeatTerm(1, 2 * a - 4, A2, Fraction(-1)), HeatTerm(2, 4 * a - 4, A1SQ, Fraction(1, 2))}


def test_complex_power_general_form():
    c = symbolic.complex_power_symbol(symbolic.parametrix(generic(), 4))
    assert c.term(0) == (PowerTerm(0, (Fraction(1),), ()),)
    assert c.term(2) == (PowerTerm(1, (Fraction(0), Fraction(-1)), A1),)
    # -a0^(-z-1) a2 z + (1/2) a0^(-z-2) a1^2 z (z+1)
    assert set(c.term(4)) == {PowerTerm(1, (Fraction(0), Fraction(-1)), A2),
                              PowerTerm(2, (Fraction(0), Fraction(1, 2), Fraction(1, 2)), A1SQ)}


def test_relativistic_values(rel):
    s = symbolic.shifted_symbol(rel, 2, exact=True)
    assert s.coeffs == (1, Fraction(1, 2), Fraction(-1, 8))
    b = symbolic.parametrix(s, 4)
    # b_{-3} = (1/2) r^-1 / (lam - r)^2
    assert b[2].coefficient_tuples(s) == [(Fraction(-1), 2, None, Fraction(1, 2))]
    # b_{-5} = (1/4) r^-2 / (lam - r)^3 - (1/8) r^-3 / (lam - r)^2
    assert sorted(b[4].coefficient_tuples(s)) == [(Fraction(-3), 2, None, Fraction(-1, 8)),
                                                   (Fraction(-2), 3, None, Fraction(1, 4))]
    c = symbolic.complex_power_symbol(b, s)
    z = Fraction(3, 7)
    assert c.s_exact(2, z) == -z / 2
    assert c.s_exact(4, z) == (z * z + 2 * z) / 8


def test_relativistic_heat_values(rel):
    s = symbolic.shifted_symbol(rel, 2, exact=True)
    h = symbolic.heat_symbol(symbolic.parametrix(s, 4))
    vals = Counter()
    for k in (2, 4):
        for t in h.term(k):
            vals[(t.tpow, t.e)] += t.coeff * s.mono_value(t.mono)
    # [-r^-1/2 + r^-3/8] t + r^-2 t^2 / 8
    assert vals == {(1, Fraction(-1)): Fraction(-1, 2), (1, Fraction(-3)): Fraction(1, 8),
                    (2, Fraction(-2)): Fraction(1, 8)}


def _neumann_oracle(alpha: Fraction, k: int):
    """b_{-2a-k} from 1/(lam-a-d) = sum d^m/(lam-a)^(m+1), d = sum_j a_j r^(2a-2j).

    Returns {(q, m+1, mono): coeff} by enumerating ordered compositions of k/2.
    """
    out = Counter()
    if k % 2:
        return out
    J = k // 2
    for m in range(1, J + 1):
        for parts in itertools.product(range(1, J + 1), repeat=m):
            if sum(parts) != J:
                continue
            cnt = Counter(parts)
            mono = tuple(cnt.get(i, 0) for i in range(1, max(cnt) + 1))
            q = 2 * alpha * m - k
            out[(q, m + 1, mono)] += 1
    return out


@pytest.mark.parametrize("alpha", ["1/2", "1/3", "3/4"])
@pytest.mark.parametrize("k", [2, 4, 6, 7, 8])
def test_parametrix_against_neumann_series(alpha, k):
    s = generic(alpha, (1, 2, 3, 5, 7))
    b = symbolic.parametrix(s, 8)
    got = Counter({(t.q, t.m, t.mono): t.coeff for t in b[k].terms})
    assert got == _neumann_oracle(Fraction(alpha), k)


def test_recursion_identity(rel):
    s = symbolic.shifted_symbol(rel, 4)
    b = symbolic.parametrix(s, 8)
    assert symbolic.verify_parametrix(s, b)
    # (lam - sigma) * sum_{k<=8} b_k - 1 is of relative order r^-10 along lam = 2 i r
    rs = np.array([1.5, 3.0, 6.0])
    errs = [abs((2j * r - s.evaluate(r, 8)) * sum(bk.evaluate(s, r, 2j * r) for bk in b) - 1) for r in rs]
    slope = np.polyfit(np.log(rs), np.log(errs), 1)[0]
    assert abs(slope + 10) < 0.3


@pytest.mark.parametrize("z", [0.7, 2.3])
@pytest.mark.parametrize("k", [0, 2, 4, 6])
def test_power_symbol_is_mellin_transform_of_heat_symbol(rel, z, k):
    # sigma(A^-z) = Gamma(z)^-1 int_0^inf t^(z-1) sigma(e^-tA) dt, term by term at r = 3
    s = symbolic.shifted_symbol(rel, 3)
    b = symbolic.parametrix(s, 6)
    h = symbolic.heat_symbol(b)
    c = symbolic.complex_power_symbol(b, s)
    r = 3.0
    a = float(s.alpha0) * r ** (2 * float(s.alpha))

    def integrand(t):
        return t ** (z - 1) * sum(float(x.coeff) * float(s.mono_value(x.mono)) * t**x.tpow * r ** float(x.e)
                                  for x in h.term(k)) * math.exp(-t * a)

    val, _ = si.quad(integrand, 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    ref = float(c.s(k, z)) * r ** (-2 * float(s.alpha) * z - k)
    assert abs(val / G(z) - ref) <= 1e-6 * max(abs(ref), 1e-12)


def test_truncation_is_refused(rel):
    s = symbolic.shifted_symbol(rel, 2)
    with pytest.raises(TruncationError):
        symbolic.parametrix(s, 6)
    with pytest.raises(TruncationError):
        symbolic.shifted_symbol(rel, rel.K + 1)


def test_nonpositive_leading_coefficient():
    with pytest.raises(ValidationError):
        SymbolSeries(Fraction(1, 2), (Fraction(-1),), 0.0, True)


def test_ellipticity(rel):
    s = symbolic.shifted_symbol(rel)
    assert symbolic.ellipticity_check(s, rel) > 0.5
    # the relativistic symbol is elliptic with constant 1/sqrt(2) on theta in (pi/4, pi/2)
    assert symbolic.sector_ellipticity_check(s, rel, 0.3 * math.pi) >= 1 / math.sqrt(2)


def test_printers_roundtrip(rel):
    s = symbolic.shifted_symbol(rel, 2, exact=True)
    b = symbolic.parametrix(s, 4)
    assert "b[-2a-1] = 0" in symbolic.parametrix_to_text(b)
    d = symbolic.parametrix_to_dict(b, s)
    assert d[2]["terms"][0]["value"] == "1/2"
    assert symbolic.to_json(symbolic.power_symbol_to_dict(symbolic.complex_power_symbol(b, s)))


# ---------------------------------------------------------------------------
# invariants

alphas = st.fractions(min_value=Fraction(1, 20), max_value=Fraction(19, 20), max_denominator=20)
coefs = st.lists(st.fractions(min_value=-5, max_value=5, max_denominator=9), min_size=4, max_size=4)


def _rising(j):
    # Gamma(z + j)/Gamma(z) as polynomial coefficients in z
    p = (Fraction(1),)
    for i in range(j):
        q = [Fraction(0)] * (len(p) + 1)
        for d, c in enumerate(p):
            q[d] += i * c
            q[d + 1] += c
        p = tuple(q)
    return p


@settings(max_examples=30, deadline=None)
@given(alphas, st.fractions(min_value=Fraction(1, 4), max_value=4, max_denominator=5), coefs)
def test_homogeneity_and_mellin_relation(alpha, a0, tail):
    s = SymbolSeries(alpha, (a0, *tail), 0.0, True)
    b = symbolic.parametrix(s, 8)
    for bk in b:
        for t in bk.terms:
            assert t.q == 2 * alpha * (t.m - 1) - bk.k
    h = symbolic.heat_symbol(b)
    c = symbolic.complex_power_symbol(b)
    for k in range(9):
        # power-symbol polynomial = sum over heat terms of coeff * (z)_tpow / tpow-weight
        lhs = Counter()
        for pt in c.term(k):
            for d, v in enumerate(pt.poly):
                lhs[(pt.j, pt.mono, d)] += v
        rhs = Counter()
        for ht in h.term(k):
            for d, v in enumerate(_rising(ht.tpow)):
                rhs[(ht.tpow, ht.mono, d)] += ht.coeff * v
        assert +lhs == +rhs
