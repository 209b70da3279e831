"""
Double-exponential quadrature.

Two rules are provided:

* ``tanh_sinh`` on a finite interval [a, b]; tolerates integrable algebraic
  singularities at either endpoint because nodes are generated from the
  endpoint distance rather than from the absolute abscissa.
* ``exp_sinh`` on a half line [a, inf).

``integrate`` splits a range at the supplied break points (and at 1 for
ranges touching both 0 and infinity) and sums the pieces.

Integrands are vectorised: they receive a 1-d array of abscissae and return
an array whose last axis matches it (leading axes are treated as a batch of
integrands sharing the nodes).  Errors are estimated from the difference of
successive halvings of the step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import QuadratureError

_HALF_PI = 0.5 * math.pi

# Node range in the transformed variable.  For tanh-sinh the endpoint distance
# at |t| = 6 is ~1e-300, far enough for t**(-alpha) singularities with alpha < 1.
_TS_TMAX = 6.0
_ES_TLO = 4.0
_ES_THI = 5.0
_MIN_LEVEL = 3


@dataclass(frozen=True)
class QuadConfig:
    """Tolerance and evaluation budget for one integral."""

    tol: float = 1e-10
    rtol: float = 0.0
    max_evals: int = 200_000

    def __post_init__(self):
        if not (self.tol >= 0 and self.rtol >= 0 and self.tol + self.rtol > 0):
            raise ValueError("quadrature tolerance must be positive")
        if self.max_evals < 16:
            raise ValueError("quadrature budget too small")

    def label(self) -> str:
        return f"quadrature({self.tol:g})"


DEFAULT_QUAD = QuadConfig()


@dataclass(frozen=True)
class QuadResult:
    value: float | np.ndarray
    error: float
    evals: int

    def __iter__(self):
        yield self.value
        yield self.error


def _ts_nodes(t: np.ndarray, half: float):
    """Endpoint distances and weights (without the step h) of tanh-sinh nodes."""
    u = _HALF_PI * np.sinh(t)
    au = np.abs(u)
    e = np.exp(-2.0 * au)
    # distance of x from the near endpoint, scaled to [a, b]
    near = half * 2.0 * e / (1.0 + e)
    sech2 = 4.0 * e / (1.0 + e) ** 2
    w = half * _HALF_PI * np.cosh(t) * sech2
    return near, w


def _es_nodes(t: np.ndarray):
    v = np.exp(_HALF_PI * np.sinh(t))
    w = _HALF_PI * np.cosh(t) * v
    return v, w


def _accumulate(f, x, w):
    if x.size == 0:
        return 0.0
    with np.errstate(over="ignore", under="ignore", invalid="ignore", divide="ignore"):
        y = np.asarray(f(x))
        if not np.iscomplexobj(y):
            y = y.astype(float)
        c = np.where(w == 0.0, 0.0, y * w)
        c = np.where(y == 0.0, 0.0, c)
    if not np.all(np.isfinite(c)):
        raise QuadratureError("integrand produced non-finite values")
    return c.sum(axis=-1)


def _run_levels(f, make_nodes, tmin, tmax, quad: QuadConfig, what: str) -> QuadResult:
    h = 1.0
    t = np.arange(math.floor(tmin), math.ceil(tmax) + 1, dtype=float)
    t = t[(t >= tmin) & (t <= tmax)]
    x, w = make_nodes(t)
    total = _accumulate(f, x, w)
    evals = x.size
    prev = h * total
    err = math.inf
    level = 0
    while evals < quad.max_evals:
        level += 1
        h *= 0.5
        start = math.ceil(tmin / h)
        if start % 2 == 0:
            start += 1
        t = np.arange(start, math.floor(tmax / h) + 1, 2, dtype=float) * h
        x, w = make_nodes(t)
        total = total + _accumulate(f, x, w)
        evals += x.size
        cur = h * total
        err = float(np.max(np.abs(np.asarray(cur - prev))))
        prev = cur
        bound = max(quad.tol, quad.rtol * float(np.max(np.abs(np.asarray(cur)))))
        if level >= _MIN_LEVEL and err <= bound:
            return QuadResult(cur if np.ndim(cur) else (complex(cur) if np.iscomplexobj(cur) else float(cur)), err, evals)
    raise QuadratureError(
        f"{what}: tolerance {quad.tol:g} not reached within {quad.max_evals} evaluations "
        f"(last error estimate {err:.3g})"
    )


def tanh_sinh(f: Callable, a: float, b: float, quad: QuadConfig = DEFAULT_QUAD) -> QuadResult:
    """Integrate ``f`` over the finite interval [a, b]."""
    if not (math.isfinite(a) and math.isfinite(b)):
        raise ValueError("tanh_sinh needs finite limits")
    if a == b:
        return QuadResult(0.0, 0.0, 0)
    if a > b:
        r = tanh_sinh(f, b, a, quad)
        return QuadResult(-r.value, r.error, r.evals)
    half = 0.5 * (b - a)

    def make(t):
        near, w = _ts_nodes(t, half)
        x = np.where(t < 0, a + near, b - near)
        ok = (near > 0) & (x > a) & (x < b)
        return x[ok], w[ok]

    return _run_levels(f, make, -_TS_TMAX, _TS_TMAX, quad, "tanh-sinh")


def exp_sinh(f: Callable, a: float, quad: QuadConfig = DEFAULT_QUAD) -> QuadResult:
    """Integrate ``f`` over [a, inf); the integrand must decay at infinity."""

    def make(t):
        v, w = _es_nodes(t)
        x = a + v
        ok = np.isfinite(x) & np.isfinite(w) & (x > a)
        return x[ok], w[ok]

    return _run_levels(f, make, -_ES_TLO, _ES_THI, quad, "exp-sinh")


def integrate(
    f: Callable,
    a: float,
    b: float,
    quad: QuadConfig = DEFAULT_QUAD,
    points: Sequence[float] = (),
) -> QuadResult:
    """Integrate over [a, b] (``b`` may be ``inf``), splitting at ``points``.

    Ranges of the form [0, inf) are always split at 1.  The tolerance is
    shared evenly between the pieces.
    """
    cuts = sorted({p for p in points if a < p < b})
    if a <= 1.0 < b and math.isinf(b) and 1.0 not in cuts:
        cuts = sorted(set(cuts) | {1.0})
    edges = [a, *cuts, b]
    npieces = len(edges) - 1
    sub = QuadConfig(tol=quad.tol / npieces, rtol=quad.rtol, max_evals=quad.max_evals)
    value = 0.0
    err = 0.0
    evals = 0
    for lo, hi in zip(edges[:-1], edges[1:]):
        if math.isinf(hi):
            r = exp_sinh(f, lo, sub)
        else:
            r = tanh_sinh(f, lo, hi, sub)
        value = value + r.value
        err += r.error
        evals += r.evals
    return QuadResult(value, err, evals)
