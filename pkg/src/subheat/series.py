"""Truncated power series in one variable.

Coefficient lists are plain Python lists so the same routines work on
``fractions.Fraction`` (exact) and ``float`` data.
"""

from __future__ import annotations

from fractions import Fraction
from math import factorial
from typing import Sequence


def _one(*xs):
    return Fraction(1) if all(isinstance(x, (int, Fraction)) for x in xs) else 1.0


def exp_series(a, order: int) -> list:
    """Coefficients of exp(a*x) up to x**order."""
    out = []
    term = _one(a)
    for k in range(order + 1):
        out.append(term)
        term = term * a / (k + 1)
    return out


def expm1_quotient(a, order: int) -> list:
    """Coefficients of (exp(a*x) - 1)/(a*x), i.e. a**k/(k+1)!."""
    one = _one(a)
    return [one * a**k / factorial(k + 1) for k in range(order + 1)]


def mul(u: Sequence, v: Sequence, order: int) -> list:
    out = []
    for k in range(order + 1):
        acc = 0
        for j in range(max(0, k - len(v) + 1), min(k, len(u) - 1) + 1):
            acc = acc + u[j] * v[k - j]
        out.append(acc)
    return out


def power(u: Sequence, p, order: int) -> list:
    """u(x)**p for a series with u[0] == 1 (J.C.P. Miller recurrence)."""
    if u[0] != 1:
        raise ValueError("power() needs a unit constant term")
    w = [_one(p, *u)]
    for k in range(1, order + 1):
        acc = 0
        for j in range(1, min(k, len(u) - 1) + 1):
            acc = acc + ((p + 1) * j - k) * u[j] * w[k - j]
        w.append(acc / k)
    return w


def scale_argument(u: Sequence, s) -> list:
    """Coefficients of u(s*x)."""
    return [c * s**k for k, c in enumerate(u)]


def add(u: Sequence, v: Sequence) -> list:
    n = max(len(u), len(v))
    return [(u[k] if k < len(u) else 0) + (v[k] if k < len(v) else 0) for k in range(n)]
