"""Gamma function guards and Euclidean geometry constants."""

from __future__ import annotations

import math
from fractions import Fraction

from scipy import special as _sp


class GammaPoleError(ValueError):
    """Gamma evaluated at a non-positive integer."""


def is_nonpositive_integer(x) -> bool:
    if isinstance(x, Fraction):
        return x.denominator == 1 and x <= 0
    return float(x) <= 0 and float(x) == math.floor(float(x))


def gamma(x) -> float:
    """Gamma at a non-pole argument; poles raise instead of returning inf."""
    if is_nonpositive_integer(x):
        raise GammaPoleError(f"Gamma has a pole at {x}")
    return float(_sp.gamma(float(x)))


def gamma_residue(l: int) -> Fraction:
    """Residue of Gamma at -l, (-1)**l / l!."""
    if l < 0:
        raise ValueError("l must be non-negative")
    return Fraction((-1) ** l, math.factorial(l))


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n, 2 pi^(n/2) / Gamma(n/2)."""
    if n < 1:
        raise ValueError("dimension must be positive")
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def trace_constant(n: int) -> float:
    """Omega_n / (2 pi)^n, the radial trace normalisation."""
    return sphere_area(n) / (2.0 * math.pi) ** n
