"""
Symbol calculus for the shifted generator.

The shifted symbol has the classical expansion

    sigma~(r) ~ sum_j alpha_j r**(2 alpha - 2j),   alpha_j = -Gamma(j - alpha) p_j,

in the radial variable r = |xi|.  Homogeneity is indexed in steps of one:
slot k carries degree 2 alpha - k, so alpha_j lives in slot k = 2j and odd
slots are identically zero.

Parametrix, heat symbol and complex-power symbol terms are kept as exact
combinatorial objects: every coefficient is a rational number times a
monomial alpha_1**e_1 * alpha_2**e_2 * ...  (``mono`` below is the exponent
tuple).  alpha_0 enters only through the pole location a = alpha_0 r**(2 alpha)
and through explicit powers alpha_0**(-z-j).  Numbers appear only when a
series is evaluated against a :class:`SymbolSeries`.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .bernstein import LevySpec, sigma_tilde
from .errors import TruncationError, ValidationError
from .special import gamma

Mono = tuple  # exponents of (alpha_1, alpha_2, ...)


def _gamma_over_sqrtpi(j: int) -> Fraction:
    """Gamma(j - 1/2)/sqrt(pi) as an exact rational."""
    if j == 0:
        return Fraction(-2)
    return Fraction(math.factorial(2 * j - 2), 4 ** (j - 1) * math.factorial(j - 1))


def _mono_mul(a: Mono, b: Mono) -> Mono:
    n = max(len(a), len(b))
    a = a + (0,) * (n - len(a))
    b = b + (0,) * (n - len(b))
    out = tuple(x + y for x, y in zip(a, b))
    while out and out[-1] == 0:
        out = out[:-1]
    return out


def _unit(j: int) -> Mono:
    """Monomial alpha_j (j >= 1)."""
    return (0,) * (j - 1) + (1,)


def _mono_degree(mono: Mono) -> int:
    """Step-one slot of a monomial: alpha_j contributes 2j."""
    return sum(2 * (i + 1) * e for i, e in enumerate(mono))


def mono_str(mono: Mono) -> str:
    parts = []
    for i, e in enumerate(mono):
        if e == 1:
            parts.append(f"a{i + 1}")
        elif e > 1:
            parts.append(f"a{i + 1}^{e}")
    return "*".join(parts) or "1"


# ---------------------------------------------------------------------------
# the symbol


@dataclass(frozen=True)
class SymbolSeries:
    """Coefficients alpha_j of the shifted symbol.

    ``coeffs[j]`` is alpha_j, sitting at step-one slot k = 2j with degree
    2 alpha - 2j.  ``exact`` is set when every coefficient is a Fraction.
    ``shift`` is -mbar, the constant added to the generator.
    """

    alpha: Fraction
    coeffs: tuple
    shift: float
    exact: bool = False

    def __post_init__(self):
        if not self.coeffs or not self.coeffs[0] > 0:
            raise ValidationError("alpha_0 must be positive")

    @property
    def alpha0(self):
        return self.coeffs[0]

    @property
    def max_slot(self) -> int:
        return 2 * (len(self.coeffs) - 1)

    @property
    def terms(self) -> list[tuple[int, object]]:
        """(k, coefficient) for step-one slots 0..max_slot; odd slots are zero."""
        zero = Fraction(0) if self.exact else 0.0
        return [(k, self.coeffs[k // 2] if k % 2 == 0 else zero) for k in range(self.max_slot + 1)]

    def degree(self, k: int) -> Fraction:
        return 2 * self.alpha - k

    def mono_value(self, mono: Mono):
        val = Fraction(1) if self.exact else 1.0
        for i, e in enumerate(mono):
            if e:
                if i + 1 >= len(self.coeffs):
                    raise TruncationError(f"alpha_{i + 1} is not available")
                val = val * self.coeffs[i + 1] ** e
        return val

    def evaluate(self, r, K: int | None = None):
        """Truncated homogeneous expansion sum_{2j<=K} alpha_j r**(2 alpha - 2j)."""
        r = np.asarray(r, dtype=float)
        K = self.max_slot if K is None else K
        a = float(self.alpha)
        return sum(float(self.coeffs[j]) * r ** (2 * a - 2 * j) for j in range(K // 2 + 1))

    def scaled(self, s) -> "SymbolSeries":
        return SymbolSeries(self.alpha, tuple(s * c for c in self.coeffs), self.shift * s,
                            self.exact and isinstance(s, (int, Fraction)))

    def to_dict(self) -> dict:
        return {
            "alpha": str(self.alpha),
            "shift": self.shift,
            "terms": [{"k": k, "degree": str(self.degree(k)), "coeff": _num(c)} for k, c in self.terms],
        }


def _num(c):
    if isinstance(c, Fraction):
        return str(c) if c.denominator != 1 else int(c)
    return float(c)


def shifted_symbol(spec: LevySpec, K: int | None = None, exact: bool = False) -> SymbolSeries:
    """alpha_j = -Gamma(j - alpha) p_j for j = 0..K (K counts p-coefficients).

    With ``exact=True`` and alpha = 1/2 the coefficients are rationals,
    which requires ``spec.p_sqrtpi_exact``.
    """
    K = spec.K if K is None else K
    if K > spec.K:
        raise TruncationError(f"K = {K} exceeds the known expansion order {spec.K}")
    if exact:
        if spec.alpha != Fraction(1, 2) or spec.p_sqrtpi_exact is None:
            raise ValueError("exact coefficients need alpha = 1/2 and rational sqrt(pi)*p_k")
        coeffs = tuple(-_gamma_over_sqrtpi(j) * spec.p_sqrtpi_exact[j] for j in range(K + 1))
    else:
        coeffs = tuple(-gamma(j - spec.alpha) * spec.p[j] for j in range(K + 1))
    return SymbolSeries(spec.alpha, coeffs, -spec.mbar, exact)


def _need_slots(series: SymbolSeries, K: int):
    # conservative: order K asks for ceil(K/2) coefficients beyond alpha_0, never zero-padded
    if math.ceil(K / 2) > len(series.coeffs) - 1:
        raise TruncationError(f"order {K} needs alpha_1..alpha_{math.ceil(K / 2)}; "
                              f"only {len(series.coeffs) - 1} known")


# ---------------------------------------------------------------------------
# ellipticity


def _bracket(r):
    return np.sqrt(1.0 + np.asarray(r, dtype=float) ** 2)


def ellipticity_check(series: SymbolSeries, spec: LevySpec, xi_grid: Sequence[float] | None = None) -> float:
    """inf over the grid of sigma~(xi)/<xi>**(2 alpha); must be positive."""
    r = np.asarray(xi_grid if xi_grid is not None else np.concatenate([[0.0], np.logspace(-3, 3, 241)]))
    if r.min() > 0 or r.max() < 1e3:
        raise ValueError("grid must cover |xi| in [0, 1e3]")
    vals = np.asarray(sigma_tilde(spec, r)) / _bracket(r) ** (2 * float(series.alpha))
    C = float(vals.min())
    if not C > 0:
        raise ValidationError(f"symbol is not elliptic on the grid (inf ratio {C:.3g})")
    return C


def sector_ellipticity_check(series: SymbolSeries, spec: LevySpec, theta: float,
                             grid: Sequence[float] | None = None, n_rays: int = 64) -> float:
    """min of |lam - sigma~(xi)|/<xi>**(2 alpha) over lam on the sector boundary.

    The sector is {|arg lam| >= theta}; its boundary rays arg lam = +-theta
    and the negative real axis are sampled with |lam| on a log grid.
    """
    if not math.pi / 4 < theta < math.pi / 2:
        raise ValueError("theta must lie in (pi/4, pi/2)")
    r = np.asarray(grid if grid is not None else np.concatenate([[0.0], np.logspace(-3, 3, 121)]))
    s = np.asarray(sigma_tilde(spec, r))
    br = _bracket(r) ** (2 * float(series.alpha))
    mags = np.concatenate([[0.0], np.logspace(-4, 7, 12 * n_rays // 4)])
    worst = math.inf
    for phase in (theta, -theta, math.pi):
        lam = mags * np.exp(1j * phase)
        d = np.abs(lam[None, :] - s[:, None]) / br[:, None]
        worst = min(worst, float(d.min()))
    if not worst > 0:
        raise ValidationError(f"symbol is not sector-elliptic (min ratio {worst:.3g})")
    return worst


# ---------------------------------------------------------------------------
# parametrix


@dataclass(frozen=True)
class PoleTerm:
    """coeff * mono(alpha) * r**q * (lam - a)**(-m)."""

    q: Fraction
    m: int
    mono: Mono
    coeff: Fraction


@dataclass(frozen=True)
class PoleSeries:
    """Parametrix term b_{-2 alpha - k}."""

    k: int
    alpha: Fraction
    terms: tuple[PoleTerm, ...]

    def is_zero(self) -> bool:
        return not self.terms

    def evaluate(self, series: SymbolSeries, r, lam):
        r = np.asarray(r, dtype=float)
        a = float(series.alpha0) * r ** (2 * float(self.alpha))
        out = 0.0
        for t in self.terms:
            out = out + float(t.coeff) * float(series.mono_value(t.mono)) * r ** float(t.q) * (lam - a) ** (-t.m)
        return out

    def coefficient_tuples(self, series: SymbolSeries | None = None) -> list[tuple]:
        """(q, m, coefficient) with the monomial folded in when ``series`` is given."""
        out = []
        for t in self.terms:
            c = t.coeff if series is None else t.coeff * series.mono_value(t.mono)
            out.append((t.q, t.m, t.mono if series is None else None, c))
        return out


def _collect(terms: list[PoleTerm]) -> tuple[PoleTerm, ...]:
    acc: dict = {}
    for t in terms:
        key = (t.m, t.mono, t.q)
        acc[key] = acc.get(key, Fraction(0)) + t.coeff
    out = [PoleTerm(q, m, mono, c) for (m, mono, q), c in acc.items() if c != 0]
    out.sort(key=lambda t: (t.m, t.mono))
    return tuple(out)


def parametrix(series: SymbolSeries, K: int) -> list[PoleSeries]:
    """b_{-2 alpha - k} for k = 0..K.

    b_0 = (lam - a)**-1 and b_k = sum_{j>=1, 2j<=k} alpha_j r**(2 alpha - 2j)
    b_{k-2j} (lam - a)**-1.  Odd k are empty.
    """
    _need_slots(series, K)
    a2 = 2 * series.alpha
    b: list[PoleSeries] = [PoleSeries(0, series.alpha, (PoleTerm(Fraction(0), 1, (), Fraction(1)),))]
    for k in range(1, K + 1):
        new = []
        for j in range(1, k // 2 + 1):
            for t in b[k - 2 * j].terms:
                new.append(PoleTerm(t.q + a2 - 2 * j, t.m + 1, _mono_mul(t.mono, _unit(j)), t.coeff))
        b.append(PoleSeries(k, series.alpha, _collect(new)))
    for ps in b:
        for t in ps.terms:
            assert t.q - a2 * t.m == -a2 - ps.k, "homogeneity violated"
    return b


def verify_parametrix(series: SymbolSeries, terms: list[PoleSeries]) -> bool:
    """Check that (lam - a - sum alpha_j r^(2 alpha-2j)) * sum b_k = 1 through degree -K.

    The product is expanded exactly; every retained slot k <= K must vanish
    except the constant at k = 0.
    """
    K = len(terms) - 1
    a2 = 2 * series.alpha
    for k in range(K + 1):
        prod = []
        # (lam - a) * b_k lowers the pole order by one
        for t in terms[k].terms:
            prod.append(PoleTerm(t.q, t.m - 1, t.mono, t.coeff))
        for j in range(1, k // 2 + 1):
            for t in terms[k - 2 * j].terms:
                prod.append(PoleTerm(t.q + a2 - 2 * j, t.m, _mono_mul(t.mono, _unit(j)), -t.coeff))
        got = _collect(prod)
        want = (PoleTerm(Fraction(0), 0, (), Fraction(1)),) if k == 0 else ()
        if got != want:
            return False
    return True


# ---------------------------------------------------------------------------
# residue rules


@dataclass(frozen=True)
class HeatTerm:
    """coeff * mono * t**tpow * r**e, multiplying exp(-t alpha_0 r**(2 alpha))."""

    tpow: int
    e: Fraction
    mono: Mono
    coeff: Fraction


@dataclass(frozen=True)
class HeatSymbolSeries:
    alpha: Fraction
    terms: tuple[tuple[int, tuple[HeatTerm, ...]], ...]  # (k, terms)

    def term(self, k: int) -> tuple[HeatTerm, ...]:
        return dict(self.terms)[k]

    def evaluate(self, series: SymbolSeries, r, t, K: int | None = None):
        r = np.asarray(r, dtype=float)
        a = float(series.alpha0) * r ** (2 * float(self.alpha))
        out = 0.0
        for k, ts in self.terms:
            if K is not None and k > K:
                continue
            for h in ts:
                out = out + float(h.coeff) * float(series.mono_value(h.mono)) * t**h.tpow * r ** float(h.e)
        return out * np.exp(-t * a)


def heat_symbol(terms: list[PoleSeries]) -> HeatSymbolSeries:
    """(1/2 pi i) \\oint e^{-t lam} (lam - a)^{-m} dlam = (-t)^{m-1}/(m-1)! e^{-t a}."""
    out = []
    for ps in terms:
        hs = []
        for t in ps.terms:
            j = t.m - 1
            hs.append(HeatTerm(j, t.q, t.mono, t.coeff * Fraction((-1) ** j, math.factorial(j))))
        hs.sort(key=lambda h: (h.tpow, h.mono))
        out.append((ps.k, tuple(hs)))
    return HeatSymbolSeries(terms[0].alpha, tuple(out))


def _poly_mul(u: tuple, v: tuple) -> tuple:
    out = [Fraction(0)] * (len(u) + len(v) - 1)
    for i, x in enumerate(u):
        for j, y in enumerate(v):
            out[i + j] += x * y
    return tuple(out)


def _poly_eval(p: tuple, z):
    acc = 0
    for c in reversed(p):
        acc = acc * z + c
    return acc


def falling_poly(m: int) -> tuple:
    """(-z)(-z-1)...(-z-m+2)/(m-1)! as ascending Fraction coefficients in z."""
    p = (Fraction(1),)
    for i in range(m - 1):
        p = _poly_mul(p, (Fraction(-i), Fraction(-1)))
    f = math.factorial(m - 1)
    return tuple(c / f for c in p)


@dataclass(frozen=True)
class PowerTerm:
    """poly(z) * mono * alpha_0**(-z-j)."""

    j: int
    poly: tuple
    mono: Mono


@dataclass(frozen=True)
class ComplexPowerSeries:
    """sigma_{-2 alpha z - k}(r; z) = sum poly_j(z) mono alpha_0^(-z-j) r^(-2 alpha z - k)."""

    alpha: Fraction
    terms: tuple[tuple[int, tuple[PowerTerm, ...]], ...]
    series: SymbolSeries | None = field(default=None, compare=False)

    @property
    def K(self) -> int:
        return max(k for k, _ in self.terms)

    def term(self, k: int) -> tuple[PowerTerm, ...]:
        return dict(self.terms)[k]

    def s(self, k: int, z, series: SymbolSeries | None = None):
        """Radial coefficient s_k(z) (complex z allowed)."""
        series = series or self.series
        a0 = series.alpha0
        out = 0
        for pt in self.term(k):
            out = out + _poly_eval(pt.poly, z) * series.mono_value(pt.mono) * _a0_power(a0, -z - pt.j)
        return out

    def ds(self, k: int, z, series: SymbolSeries | None = None):
        """d s_k / dz; alpha_0**(-z-j) contributes -log(alpha_0)."""
        series = series or self.series
        a0 = series.alpha0
        la0 = math.log(float(a0))
        out = 0
        for pt in self.term(k):
            dp = tuple(i * c for i, c in enumerate(pt.poly))[1:] or (Fraction(0),)
            val = _poly_eval(dp, z) - la0 * _poly_eval(pt.poly, z)
            out = out + val * series.mono_value(pt.mono) * _a0_power(a0, -z - pt.j)
        return out

    def s_exact(self, k: int, z: Fraction, series: SymbolSeries | None = None):
        """s_k(z) as a Fraction when alpha_0 = 1 and the coefficients are exact, else None."""
        series = series or self.series
        if not series.exact or series.alpha0 != 1:
            return None
        return sum((_poly_eval(pt.poly, z) * series.mono_value(pt.mono) for pt in self.term(k)), Fraction(0))

    def structurally_zero(self, k: int, z: Fraction) -> bool:
        """Every summand of s_k vanishes at z irrespective of the alpha_j."""
        return all(_poly_eval(pt.poly, z) == 0 for pt in self.term(k))


def _a0_power(a0, expo):
    if a0 == 1:
        return 1.0
    return complex(float(a0)) ** expo if isinstance(expo, complex) else float(a0) ** float(expo)


def complex_power_symbol(terms: list[PoleSeries], series: SymbolSeries | None = None) -> ComplexPowerSeries:
    """(1/2 pi i) \\oint lam^{-z}(lam - a)^{-m} dlam = [(-z)...(-z-m+2)/(m-1)!] a^{-z-m+1}."""
    out = []
    for ps in terms:
        acc: dict = {}
        for t in ps.terms:
            j = t.m - 1
            key = (j, t.mono)
            p = tuple(c * t.coeff for c in falling_poly(t.m))
            prev = acc.get(key)
            acc[key] = p if prev is None else tuple(x + y for x, y in zip(prev, p))
        pts = tuple(PowerTerm(j, p, mono) for (j, mono), p in sorted(acc.items()) if any(p))
        out.append((ps.k, pts))
    return ComplexPowerSeries(terms[0].alpha, tuple(out), series)


# ---------------------------------------------------------------------------
# printing


def _poly_str(p: tuple, var: str) -> str:
    parts = []
    for i, c in enumerate(p):
        if c == 0:
            continue
        mon = "" if i == 0 else (var if i == 1 else f"{var}^{i}")
        parts.append(f"{c}" + (f"*{mon}" if mon else ""))
    return " + ".join(parts) or "0"


def parametrix_to_dict(terms: list[PoleSeries], series: SymbolSeries | None = None) -> list[dict]:
    out = []
    for ps in terms:
        rows = []
        for t in ps.terms:
            row = {"q": str(t.q), "m": t.m, "monomial": mono_str(t.mono), "coeff": _num(t.coeff)}
            if series is not None:
                row["value"] = _num(t.coeff * series.mono_value(t.mono))
            rows.append(row)
        out.append({"k": ps.k, "degree": str(-2 * ps.alpha - ps.k), "terms": rows})
    return out


def heat_symbol_to_dict(hs: HeatSymbolSeries, series: SymbolSeries | None = None) -> list[dict]:
    out = []
    for k, ts in hs.terms:
        rows = []
        for h in ts:
            row = {"t_power": h.tpow, "r_exponent": str(h.e), "monomial": mono_str(h.mono), "coeff": _num(h.coeff)}
            if series is not None:
                row["value"] = _num(h.coeff * series.mono_value(h.mono))
            rows.append(row)
        out.append({"k": k, "terms": rows})
    return out


def power_symbol_to_dict(cps: ComplexPowerSeries) -> list[dict]:
    out = []
    for k, ts in cps.terms:
        rows = [{"j": pt.j, "a0_power": f"-z-{pt.j}" if pt.j else "-z", "monomial": mono_str(pt.mono),
                 "poly_z": [_num(c) for c in pt.poly]} for pt in ts]
        out.append({"k": k, "r_exponent": f"-{2 * cps.alpha}*z-{k}", "terms": rows})
    return out


def to_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)


def parametrix_to_text(terms: list[PoleSeries]) -> str:
    lines = []
    for ps in terms:
        if ps.is_zero():
            lines.append(f"b[-2a-{ps.k}] = 0")
            continue
        body = " + ".join(f"({t.coeff})*{mono_str(t.mono)}*r^({t.q})*(lam-a)^(-{t.m})" for t in ps.terms)
        lines.append(f"b[-2a-{ps.k}] = {body}")
    return "\n".join(lines)


def heat_symbol_to_text(hs: HeatSymbolSeries) -> str:
    lines = []
    for k, ts in hs.terms:
        body = " + ".join(f"({h.coeff})*{mono_str(h.mono)}*t^{h.tpow}*r^({h.e})" for h in ts) or "0"
        lines.append(f"k={k}: [{body}] * exp(-t*a0*r^(2a))")
    return "\n".join(lines)


def power_symbol_to_text(cps: ComplexPowerSeries) -> str:
    lines = []
    for k, ts in cps.terms:
        body = " + ".join(f"[{_poly_str(pt.poly, 'z')}]*{mono_str(pt.mono)}*a0^(-z-{pt.j})" for pt in ts) or "0"
        lines.append(f"k={k}: ({body}) * r^(-2a*z-{k})")
    return "\n".join(lines)


# ---------------------------------------------------------------------------
# sign conventions, fixed against the printed k = 0, 2, 4 outputs


def _self_test():
    s = SymbolSeries(Fraction(1, 2), (Fraction(1), Fraction(1, 2), Fraction(-1, 8)), 1.0, True)
    b = parametrix(s, 4)
    a1, a2 = (1,), (0, 1)
    assert b[2].terms == (PoleTerm(Fraction(-1), 2, a1, Fraction(1)),)
    assert set(b[4].terms) == {PoleTerm(Fraction(-3), 2, a2, Fraction(1)), PoleTerm(Fraction(-2), 3, (2,), Fraction(1))}
    h = heat_symbol(b)
    assert h.term(0) == (HeatTerm(0, Fraction(0), (), Fraction(1)),)
    assert h.term(2) == (HeatTerm(1, Fraction(-1), a1, Fraction(-1)),)
    assert set(h.term(4)) == {HeatTerm(1, Fraction(-3), a2, Fraction(-1)), HeatTerm(2, Fraction(-2), (2,), Fraction(1, 2))}
    c = complex_power_symbol(b)
    assert c.term(0) == (PowerTerm(0, (Fraction(1),), ()),)
    assert c.term(2) == (PowerTerm(1, (Fraction(0), Fraction(-1)), a1),)
    assert set(c.term(4)) == {PowerTerm(1, (Fraction(0), Fraction(-1)), a2),
                              PowerTerm(2, (Fraction(0), Fraction(1, 2), Fraction(1, 2)), (2,))}


_self_test()
