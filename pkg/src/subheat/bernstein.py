"""
Bernstein functions given by a Levy density with a power expansion at 0.

A subordinator is described by its Levy density m(t) on (0, inf) with

    m(t) ~ t**(-1-alpha) * sum_k p_k t**k      (t -> 0+),

rapid decay at infinity, and a negative shift constant

    mbar = int_0^inf (m(t) - p_0 t**(-1-alpha)) dt.

The Bernstein (Laplace) exponent is f(lam) = int (1 - exp(-lam t)) m(t) dt.
Integrals are evaluated with the double-exponential rules of
:mod:`subheat.quadrature`, always split at t = 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

import numpy as np
from scipy import special as sp

from . import series
from .errors import ConfigError, QuadratureError, TruncationError, ValidationError
from .quadrature import DEFAULT_QUAD, QuadConfig, integrate
from .special import gamma

CATALOG = ("relativistic", "shifted-power", "sqrt-exponential", "gamma-ratio-1", "gamma-ratio-2")
BUILTIN_DENSITIES = CATALOG + ("truncated-stable",)

DEFAULT_ORDER = 12
_EPS = np.finfo(float).eps


def as_rational(value) -> Fraction:
    """Parse ``value`` ("p/q", int, Fraction or float) into a Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    try:
        return Fraction(str(value).strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"cannot parse {value!r} as a rational number") from exc


@dataclass(frozen=True, eq=False)
class LevySpec:
    """A subordinator of the admissible class.

    ``density`` must accept numpy arrays.  ``bernstein`` is an optional closed
    form of f used for fast symbol evaluation; quadrature routines never
    consult it.  ``p_sqrtpi_exact`` holds sqrt(pi)*p_k as exact rationals when
    they exist (alpha = 1/2 catalog entries with rational parameters).
    """

    alpha: Fraction
    p: tuple[float, ...]
    density: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    treat_as_irrational: bool = False
    catalog_id: str | None = None
    params: tuple[tuple[str, object], ...] = ()
    bernstein: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)
    p_sqrtpi_exact: tuple[Fraction, ...] | None = field(default=None, repr=False)
    cutoff: float | None = None

    def __post_init__(self):
        alpha = as_rational(self.alpha)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "p", tuple(float(x) for x in self.p))
        if not 0 < alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {alpha}")
        if not self.p:
            raise ConfigError("at least p_0 is required")
        if not self.p[0] > 0:
            raise ConfigError("p_0 must be positive")

    @property
    def K(self) -> int:
        return len(self.p) - 1

    @property
    def a(self) -> float:
        return float(self.alpha)

    @cached_property
    def mbar(self) -> float:
        return mbar(self)

    @property
    def param_dict(self) -> dict:
        return dict(self.params)

    def describe(self) -> dict:
        return {
            "catalog_id": self.catalog_id,
            "params": {k: str(v) for k, v in self.params},
            "alpha": str(self.alpha),
            "treat_as_irrational": self.treat_as_irrational,
            "K": self.K,
            "p": list(self.p),
        }

    # -- density helpers -------------------------------------------------

    def series_cutoff(self) -> float:
        """Below this t the density is evaluated from its expansion."""
        if self.cutoff is not None:
            return self.cutoff
        return min(0.05, _EPS ** (1.0 / (self.K + 1)))

    def density_remainder(self, t, N: int = 1) -> np.ndarray:
        """m(t) - sum_{k<N} p_k t**(k-1-alpha), free of cancellation near 0."""
        if not 0 <= N <= self.K + 1:
            raise TruncationError(f"remainder order {N} exceeds K+1 = {self.K + 1}")
        t = np.asarray(t, dtype=float)
        a = self.a
        small = t < self.series_cutoff()
        out = np.empty_like(t)
        ts = t[small]
        acc = np.zeros_like(ts)
        for k in range(N, self.K + 1):
            acc = acc + self.p[k] * ts ** (k - 1 - a)
        out[small] = acc
        tl = t[~small]
        val = np.asarray(self.density(tl), dtype=float)
        for k in range(N):
            val = val - self.p[k] * tl ** (k - 1 - a)
        out[~small] = val
        return out


# ---------------------------------------------------------------------------
# catalog


def _finish(alpha, prefactor, q, **kw) -> tuple:
    return tuple(float(prefactor) * float(c) for c in q)


def catalog(name: str, alpha=None, c=None, order: int = DEFAULT_ORDER, treat_as_irrational=False) -> LevySpec:
    """One of the five example subordinators, with p_k from a Taylor expansion.

    ``alpha`` is the parameter of the Bernstein function as usually written;
    for ``shifted-power`` (f = lam/(lam+c)**alpha) the density order is
    1 - alpha.  ``sqrt-exponential`` and ``gamma-ratio-1`` have order 1/2 and
    take only ``c``; ``gamma-ratio-2`` takes only ``alpha``.
    """
    if order < 4:
        raise ConfigError("catalog expansions are produced to order >= 4")
    if name not in CATALOG:
        raise ConfigError(f"unknown catalog entry {name!r}; choose from {', '.join(CATALOG)}")

    def need_alpha():
        if alpha is None:
            raise ConfigError(f"{name} requires alpha")
        a = as_rational(alpha)
        if not 0 < a < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {a}")
        return a

    def need_c():
        if c is None:
            raise ConfigError(f"{name} requires c")
        cc = as_rational(c)
        if not cc > 0:
            raise ConfigError(f"c must be positive, got {cc}")
        return cc

    half = Fraction(1, 2)
    exact = None

    if name == "relativistic":
        a = need_alpha()
        af = float(a)
        pref = af / gamma(1 - af)
        q = series.exp_series(Fraction(-1), order)
        p = _finish(a, pref, q)
        if a == half:
            exact = tuple(half * x for x in q)

        def density(t, af=af, pref=pref):
            t = np.asarray(t, dtype=float)
            return pref * np.exp(-t) * t ** (-1 - af)

        def bern(lam, af=af):
            return np.power(np.asarray(lam, dtype=float) + 1.0, af) - 1.0

        params = (("alpha", a),)
        spec_alpha = a

    elif name == "shifted-power":
        a = need_alpha()
        cc = need_c()
        ap = 1 - a
        af, cf = float(a), float(cc)
        pref = 1.0 / gamma(af)
        e = series.exp_series(-cc, order)
        q = series.add([ap * x for x in e], [0] + [cc * x for x in e[:-1]])
        p = _finish(ap, pref, q)
        if a == half:
            exact = tuple(Fraction(x) for x in q)

        def density(t, af=af, cf=cf, pref=pref):
            t = np.asarray(t, dtype=float)
            return pref * np.exp(-cf * t) * t ** (af - 2.0) * (cf * t + 1.0 - af)

        def bern(lam, af=af, cf=cf):
            lam = np.asarray(lam, dtype=float)
            return lam / np.power(lam + cf, af)

        params = (("alpha", a), ("c", cc))
        spec_alpha = ap

    elif name == "sqrt-exponential":
        cc = need_c()
        cf = float(cc)
        pref = 1.0 / (2.0 * math.sqrt(math.pi))
        e = series.exp_series(-cc, order)
        q = series.mul(e, [Fraction(1), 2 * cc], order)
        p = _finish(half, pref, q)
        exact = tuple(half * x for x in q)

        def density(t, cf=cf, pref=pref):
            t = np.asarray(t, dtype=float)
            with np.errstate(over="ignore", divide="ignore"):
                inv = np.exp(-1.0 / t)
                body = 2.0 * inv + t * (-np.expm1(-1.0 / t)) * (1.0 + 2.0 * cf * t)
            return pref * np.exp(-cf * t) * body * t ** -2.5

        def bern(lam, cf=cf):
            lam = np.asarray(lam, dtype=float)
            s = np.sqrt(lam + cf)
            return lam * (-np.expm1(-2.0 * s)) / s

        params = (("c", cc),)
        spec_alpha = half

    elif name == "gamma-ratio-1":
        cc = need_c()
        cf = float(cc)
        pref = 1.0 / math.sqrt(32.0 * math.pi)
        qe = series.mul(series.exp_series(Fraction(1), order),
                        series.power(series.expm1_quotient(Fraction(1), order), Fraction(-3, 2), order), order)
        q = series.scale_argument(qe, 2 * cc)
        p = _finish(half, pref, q)

        def density(t, cf=cf):
            t = np.asarray(t, dtype=float)
            return cf**1.5 * np.exp(-cf * t) / (2.0 * math.sqrt(math.pi) * (-np.expm1(-2.0 * cf * t)) ** 1.5)

        # the printed density integrates to one half of Gamma((lam+c)/2c)/Gamma(lam/2c)
        def bern(lam, cf=cf):
            lam = np.asarray(lam, dtype=float)
            return 0.5 * sp.poch(lam / (2.0 * cf), 0.5)

        params = (("c", cc),)
        spec_alpha = half

    else:  # gamma-ratio-2
        a = need_alpha()
        af = float(a)
        pref = af ** (1.0 + af) / gamma(1.0 - af)
        qe = series.mul(series.exp_series(Fraction(-1), order),
                        series.power(series.expm1_quotient(Fraction(-1), order), -1 - a, order), order)
        q = series.scale_argument(qe, 1 / a)
        p = _finish(a, pref, q)
        g1 = gamma(1.0 - af)

        def density(t, af=af, g1=g1):
            t = np.asarray(t, dtype=float)
            return np.exp(-t / af) / (g1 * (-np.expm1(-t / af)) ** (1.0 + af))

        # the density carries no killing term, so f(0) = 0 requires subtracting 1/Gamma(1-alpha)
        def bern(lam, af=af, g1=g1):
            lam = np.asarray(lam, dtype=float)
            return sp.poch(af * lam + 1.0 - af, af) - 1.0 / g1

        params = (("alpha", a),)
        spec_alpha = a

    return LevySpec(
        alpha=spec_alpha,
        p=p,
        density=density,
        treat_as_irrational=treat_as_irrational,
        catalog_id=name,
        params=params,
        bernstein=bern,
        p_sqrtpi_exact=exact,
        # exp(-1/t) is invisible to the expansion; keep it below 1e-40 at the cutoff
        cutoff=0.01 if name == "sqrt-exponential" else None,
    )


def truncated_stable(alpha, p0=1.0, order: int = 4) -> LevySpec:
    """p_0 t**(-1-alpha) on (0, 1], zero beyond; mbar = -p_0/alpha."""
    a = as_rational(alpha)
    af = float(a)
    p0 = float(p0)

    def density(t, af=af, p0=p0):
        t = np.asarray(t, dtype=float)
        return np.where(t <= 1.0, p0 * t ** (-1.0 - af), 0.0)

    return LevySpec(alpha=a, p=(p0,) + (0.0,) * order, density=density,
                    catalog_id=None, params=(("density", "truncated-stable"), ("p0", p0)))


def custom(alpha, p: Sequence[float], density: Callable, treat_as_irrational=False, **kw) -> LevySpec:
    """A user-supplied density; p_k are verified, never extracted."""
    return LevySpec(alpha=as_rational(alpha), p=tuple(p), density=density,
                    treat_as_irrational=treat_as_irrational, **kw)


# ---------------------------------------------------------------------------
# integrals


def _power_tail(alpha: float, x: float) -> float:
    """int_1^inf (1 - e^{-x t}) t**(-1-alpha) dt = 1/alpha - x**alpha Gamma(-alpha, x)."""
    if x == 0:
        return 1.0 / alpha
    # Gamma(-a, x) = (Gamma(1-a, x) - x**-a e^-x) / (-a)
    upper = sp.gammaincc(1.0 - alpha, x) * gamma(1.0 - alpha)
    return 1.0 / alpha + (x**alpha * upper - math.exp(-x)) / alpha


def _split_integral(spec: LevySpec, weight, x: float, quad: QuadConfig) -> float:
    """int_0^inf weight(t) (m(t) - p_0 t**(-1-alpha)) dt.

    The subtracted power is only integrated numerically on (0, 1]; beyond 1
    the density decays fast and the power term has the closed form above.
    ``weight`` must be 1 - e^{-x t} (x > 0) or 1 (x = 0).
    """
    cut = spec.series_cutoff()
    near = integrate(lambda t: weight(t) * spec.density_remainder(t, 1), 0.0, 1.0, quad,
                     tuple(p for p in (cut, 1.0 / x if x > 0 else 0.0) if 0 < p < 1))
    far = integrate(lambda t: weight(t) * spec.density(t), 1.0, math.inf, quad,
                    (1.0 / x,) if x > 0 and 1.0 / x > 1 else ())
    return float(near.value) + float(far.value) - spec.p[0] * _power_tail(spec.a, x)


def mbar(spec: LevySpec, quad: QuadConfig = DEFAULT_QUAD) -> float:
    """int_0^inf (m(t) - p_0 t**(-1-alpha)) dt."""
    return _split_integral(spec, lambda t: np.ones_like(np.asarray(t, dtype=float)), 0.0, quad)


def _scalar_or_array(fn, lam):
    arr = np.asarray(lam, dtype=float)
    if arr.ndim == 0:
        return fn(float(arr))
    return np.array([fn(float(x)) for x in arr.ravel()]).reshape(arr.shape)


def eval_f(spec: LevySpec, lam, quad: QuadConfig = DEFAULT_QUAD):
    """f(lam) = -Gamma(-alpha) p_0 lam**alpha + int (1-e^{-lam t}) mbar(t) dt."""

    def one(x):
        if x < 0:
            raise ValueError("lambda must be non-negative")
        if x == 0:
            return 0.0
        rest = _split_integral(spec, lambda t: -np.expm1(-x * np.asarray(t, dtype=float)), x, quad)
        return -gamma(-spec.a) * spec.p[0] * x**spec.a + rest

    return _scalar_or_array(one, lam)


def eval_f_direct(spec: LevySpec, lam, quad: QuadConfig = DEFAULT_QUAD):
    """f(lam) by direct quadrature of int (1-e^{-lam t}) m(t) dt (no splitting)."""

    def one(x):
        if x == 0:
            return 0.0
        pts = (1.0 / x,) if x > 1 else ()
        def g(t):
            # below 1e-100 the density itself overflows; use its leading term
            tiny = t < 1e-100
            with np.errstate(over="ignore", invalid="ignore"):
                body = -np.expm1(-x * t) * spec.density(np.where(tiny, 1.0, t))
            return np.where(tiny, x * spec.p[0] * t ** (-spec.a), body)

        return float(integrate(g, 0.0, math.inf, quad, pts).value)

    return _scalar_or_array(one, lam)


def f_derivative(spec: LevySpec, l: int, lam, quad: QuadConfig = DEFAULT_QUAD):
    """f^(l)(lam) = (-1)**(l+1) int e^{-lam t} t**l m(t) dt."""
    if l < 1:
        raise ValueError("derivative order must be >= 1")
    sign = (-1) ** (l + 1)

    def one(x):
        if x < 0:
            raise ValueError("lambda must be non-negative")
        pts = (1.0 / x,) if x > 1 else ()
        def g(t):
            # below 1e-100 the density overflows; t**l m(t) ~ p_0 t**(l-1-alpha) there
            tiny = t < 1e-100
            with np.errstate(over="ignore", invalid="ignore"):
                body = np.exp(-x * t) * t**l * spec.density(np.where(tiny, 1.0, t))
            return np.where(tiny, spec.p[0] * t ** (l - 1 - spec.a), body)

        res = integrate(g, 0.0, math.inf, quad, pts)
        return sign * float(res.value)

    return _scalar_or_array(one, lam)


def sigma_tilde(spec: LevySpec, r, quad: QuadConfig = DEFAULT_QUAD):
    """Shifted symbol f(r**2) - mbar; uses the closed form of f when one is known."""
    r = np.asarray(r, dtype=float)
    if spec.bernstein is not None:
        fv = np.asarray(spec.bernstein(r * r), dtype=float)
    else:
        fv = np.asarray(eval_f(spec, r * r, quad), dtype=float)
    out = fv - spec.mbar
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# large-lambda expansion


def watson_expand(spec: LevySpec, N: int) -> list[tuple[Fraction, float]]:
    """f(lam) ~ mbar - sum_{k<N} Gamma(k-alpha) p_k lam**(alpha-k).

    Returns (exponent, coefficient) pairs by decreasing exponent, including
    the constant term.
    """
    if N > spec.K + 1:
        raise TruncationError(f"N = {N} exceeds K+1 = {spec.K + 1}")
    terms = [(spec.alpha - k, -gamma(k - spec.a) * spec.p[k]) for k in range(N)]
    terms.append((Fraction(0), spec.mbar))
    terms.sort(key=lambda e: e[0], reverse=True)
    return terms


def watson_partial_sum(spec: LevySpec, N: int, lam):
    lam = np.asarray(lam, dtype=float)
    return sum(c * lam ** float(e) for e, c in watson_expand(spec, N))


def watson_remainder(spec: LevySpec, N: int, lam, quad: QuadConfig | None = None):
    """f(lam) - S_N(lam) computed without forming f.

    For N >= 1 the remainder equals -int e^{-lam t} (m(t) - sum_{k<N} p_k
    t^{k-1-alpha}) dt, which is integrated in the scaled variable s = lam t.
    """
    if N > spec.K + 1:
        raise TruncationError(f"N = {N} exceeds K+1 = {spec.K + 1}")
    quad = quad or QuadConfig(tol=1e-300, rtol=1e-10)

    def one(x):
        if x <= 0:
            raise ValueError("lambda must be positive")
        n_eff = max(N, 1)
        # the switch to the series at the cutoff is a (tiny) kink; split there
        res = integrate(lambda s: np.exp(-s) * spec.density_remainder(s / x, n_eff), 0.0, math.inf, quad,
                        (x * spec.series_cutoff(),))
        rem = -float(res.value) / x
        if N == 0:
            rem += -gamma(-spec.a) * spec.p[0] * x**spec.a
        return rem

    return _scalar_or_array(one, lam)


@dataclass(frozen=True)
class ExpansionCheck:
    N: int
    lambdas: tuple[float, ...]
    remainders: tuple[float, ...]
    max_scaled_remainder: float
    slope: float
    expected_slope: float
    slope_tolerance: float = 0.15

    @property
    def ok(self) -> bool:
        return abs(self.slope - self.expected_slope) <= self.slope_tolerance


def check_expansion(spec: LevySpec, N: int, lambda_grid: Sequence[float], quad: QuadConfig | None = None) -> ExpansionCheck:
    """Scaled remainder sup and log-log decay slope of f - S_N on ``lambda_grid``."""
    lam = np.asarray(lambda_grid, dtype=float)
    if lam.ndim != 1 or lam.size < 2 or np.any(np.diff(lam) <= 0):
        raise ValueError("lambda_grid must be increasing with at least two points")
    if lam[0] < 10:
        raise ValueError("lambda_grid must start at 10 or above")
    rem = np.asarray(watson_remainder(spec, N, lam, quad), dtype=float)
    scaled = np.abs(rem) * lam ** (N - spec.a)
    slope = float(np.polyfit(np.log(lam), np.log(np.abs(rem)), 1)[0])
    return ExpansionCheck(
        N=N,
        lambdas=tuple(lam),
        remainders=tuple(rem),
        max_scaled_remainder=float(scaled.max()),
        slope=slope,
        expected_slope=spec.a - N,
    )


# ---------------------------------------------------------------------------
# hypothesis checks


@dataclass(frozen=True)
class SpecReport:
    mbar: float
    problems: tuple[str, ...]

    @property
    def ok(self) -> bool:
        return not self.problems


def _consistency_problems(spec: LevySpec) -> list[str]:
    """Truncated expansions must leave an O(t**(k+1)) remainder.

    On t = 2**-4 ... 2**-40 the ratio |t**(1+alpha) m(t) - sum_{j<=k} p_j t**j|
    / t**(k+1) is tracked while it stays above roundoff.  A wrong p_j makes it
    grow like 2**(k+1-j) per halving.
    """
    problems = []
    t = 2.0 ** -np.arange(4, 41)
    h = np.asarray(spec.density(t), dtype=float) * t ** (1 + spec.a)
    noise = 64 * _EPS * np.maximum(np.abs(h), spec.p[0])
    for k in range(spec.K + 1):
        partial = sum(spec.p[j] * t**j for j in range(k + 1))
        diff = np.abs(h - partial)
        keep = diff > 1e3 * noise
        if keep.sum() < 3:
            continue
        ratio = diff[keep] / t[keep] ** (k + 1)
        if ratio[-1] > 4 * ratio[0]:
            problems.append(f"density expansion inconsistent at order {k}: scaled remainder grows "
                            f"from {ratio[0]:.3g} to {ratio[-1]:.3g}")
    return problems


def validate(spec: LevySpec, quad: QuadConfig = DEFAULT_QUAD) -> SpecReport:
    """Check the admissibility hypotheses on finite samples."""
    problems = []
    grid = np.logspace(-6, 3, 400)
    vals = np.asarray(spec.density(grid), dtype=float)
    if not np.all(np.isfinite(vals)) or np.any(vals < 0):
        problems.append("density is negative or non-finite on the sample grid")
    tail = np.logspace(0, 3, 200)
    tv = np.asarray(spec.density(tail), dtype=float)
    for beta in (1, 2, 4, 8):
        w = tv * tail**beta
        if not np.all(np.isfinite(w)) or (w.max() > 0 and w[-1] > 1e-2 * w.max()):
            problems.append(f"density times t^{beta} does not decay on [1, 1e3]")
            break
    problems.extend(_consistency_problems(spec))
    try:
        mb = mbar(spec, quad)
    except QuadratureError as exc:
        # a non-integrable density is a hypothesis failure, not a numerical one
        problems.append(f"shift constant mbar does not converge ({exc})")
        return SpecReport(mbar=math.nan, problems=tuple(problems))
    # mbar = 0 exactly is as much a violation as mbar > 0; allow for quadrature noise
    if not mb < -max(100 * quad.tol, 1e-8):
        problems.append(f"shift constant mbar = {mb:.3g} is not negative")
    return SpecReport(mbar=mb, problems=tuple(problems))


def require_valid(spec: LevySpec, quad: QuadConfig = DEFAULT_QUAD) -> SpecReport:
    rep = validate(spec, quad)
    if not rep.ok:
        raise ValidationError("; ".join(rep.problems))
    return rep
