"""
Numerical ground truth for the heat trace.

    TR(e^{-t A~}) = (2 pi)^-n Omega_n int_0^inf exp(-t sigma~(r)) r^(n-1) dr

is computed by quadrature, independently of the symbol calculus; for the
relativistic symbol sigma~ = <xi> closed forms exist in n = 2 and n = 3.
Asymptotic coefficients are recovered from samples by weighted least squares.
"""

from __future__ import annotations

import io
import csv
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy import optimize, special

from .bernstein import LevySpec, sigma_tilde
from .errors import IllConditionedFit, QuadratureError
from .quadrature import DEFAULT_QUAD, QuadConfig, integrate
from .spectral import HeatTraceExpansion, assemble, pole_table
from .special import trace_constant


@dataclass(frozen=True)
class TraceSample:
    t: float
    value: float
    est_error: float

    def __post_init__(self):
        if not self.value > 0 or not self.est_error >= 0:
            raise QuadratureError(f"invalid trace sample at t={self.t}: {self.value} +- {self.est_error}")


def _effective_radius(sig, t: float, level: float = 50.0) -> float:
    """r with t*sigma~(r) = level (sigma~ is increasing)."""
    target = level / t
    if sig(np.array([0.0]))[0] >= target:
        return 0.0
    hi = 1.0
    while sig(np.array([hi]))[0] < target:
        hi *= 2.0
        if hi > 1e300:
            raise QuadratureError("symbol does not grow; cannot bound the radial integral")
    return float(optimize.brentq(lambda r: sig(np.array([r]))[0] - target, 0.0, hi, xtol=1e-12 * hi))


def tr_heat_numeric(spec: LevySpec, n: int, t: float, quad: QuadConfig | None = None) -> TraceSample:
    """Radial quadrature of the heat trace, split where t*sigma~ = 50.

    The default accuracy is relative: 1e-11 of the leading small-t size.
    """
    if not t > 0:
        raise ValueError("t must be positive")
    a = float(spec.alpha)
    sig = lambda r: np.asarray(sigma_tilde(spec, r), dtype=float)  # noqa: E731
    r_s = _effective_radius(sig, t)
    if quad is None:
        # size of the integral, roughly int_0^r_s r^(n-1) dr
        scale = max(r_s, 1.0) ** n / n
        quad = QuadConfig(tol=1e-12 * scale, rtol=1e-12)

    def f(r):
        return np.exp(-t * sig(r)) * r ** (n - 1)

    pts = tuple(p for p in (1.0, r_s) if p > 0)
    lo = integrate(f, 0.0, r_s if r_s > 0 else 1.0, quad, pts)
    hi = integrate(f, r_s if r_s > 0 else 1.0, math.inf, quad)
    C = trace_constant(n)
    val = C * (lo.value + hi.value)
    err = C * (lo.error + hi.error)
    return TraceSample(float(t), float(val), float(err))


def trace_samples(spec: LevySpec, n: int, t_grid: Sequence[float], quad: QuadConfig | None = None) -> list[TraceSample]:
    return [tr_heat_numeric(spec, n, float(t), quad) for t in t_grid]


def closed_form_n2_relativistic(t):
    """(1/2 pi) e^-t (1 + t)/t^2, the n = 2 trace for sigma~ = <xi>."""
    t = np.asarray(t, dtype=float)
    return np.exp(-t) * (1.0 + t) / (2.0 * math.pi * t * t)


def closed_form_n3_relativistic(t):
    """(1/2 pi^2) K_2(t)/t, the n = 3 trace for sigma~ = <xi>."""
    t = np.asarray(t, dtype=float)
    return special.kv(2, t) / (2.0 * math.pi**2 * t)


# ---------------------------------------------------------------------------
# fitting


@dataclass(frozen=True)
class FitResult:
    exponents: tuple[float, ...]
    coefficients: tuple[float, ...]
    log_at: tuple[int, ...]
    log_coefficients: tuple[float, ...]  # c~_l in the model -c~_l t^l log t
    include_log: bool
    residual_norm: float
    condition: float

    def coefficient(self, exponent: float) -> float:
        for e, c in zip(self.exponents, self.coefficients):
            if abs(e - exponent) < 1e-12:
                return c
        raise KeyError(exponent)

    def to_dict(self) -> dict:
        return {
            "exponents": list(self.exponents),
            "coefficients": list(self.coefficients),
            "log_at": list(self.log_at),
            "log_coefficients": list(self.log_coefficients),
            "residual_norm": self.residual_norm,
            "condition": self.condition,
            "provenance": "fit(weighted least squares)",
        }


def fit_asymptotics(samples: Sequence[TraceSample], exponents: Sequence[float], include_log_at: Sequence[int] = (),
                    weight_power: float | None = None, max_condition: float = 1e10,
                    subtract=None) -> FitResult:
    """Weighted least squares of TR against sum c_e t^e - sum c~_l t^l log t.

    Rows are scaled by t^w with w = -min(exponents) unless ``weight_power``
    is given, which equalises the leading term across decades.  Columns are
    normalised before the condition number is taken.  ``subtract`` is an
    optional callable whose values are removed from the data first (known
    terms).
    """
    t = np.array([s.t for s in samples], dtype=float)
    y = np.array([s.value for s in samples], dtype=float)
    if subtract is not None:
        y = y - np.asarray(subtract(t), dtype=float)
    exponents = tuple(float(e) for e in exponents)
    logs = tuple(int(l) for l in include_log_at)
    nterms = len(exponents) + len(logs)
    if nterms == 0:
        raise ValueError("empty model")
    if len(samples) < 2 * nterms:
        raise ValueError(f"need at least {2 * nterms} samples for {nterms} model terms")
    cols = [t**e for e in exponents] + [-(t**l) * np.log(t) for l in logs]
    A = np.stack(cols, axis=1)
    w = t ** (-min(exponents) if weight_power is None else weight_power)
    Aw = A * w[:, None]
    yw = y * w
    norms = np.linalg.norm(Aw, axis=0)
    norms[norms == 0] = 1.0
    An = Aw / norms
    cond = float(np.linalg.cond(An))
    if not cond < max_condition:
        raise IllConditionedFit(f"design condition {cond:.3g} exceeds {max_condition:.3g}; shrink the model")
    sol, *_ = np.linalg.lstsq(An, yw, rcond=None)
    coef = sol / norms
    resid = float(np.linalg.norm(An @ sol - yw))
    ne = len(exponents)
    return FitResult(exponents, tuple(map(float, coef[:ne])), logs, tuple(map(float, coef[ne:])),
                     bool(logs), resid, cond)


def ansatz(spec: LevySpec, n: int, K: int) -> tuple[list[float], list[int]]:
    """Exponents and log positions of the small-t expansion through order K.

    Power terms come from nonzero residues off the nonpositive integers and
    from every integer l in range; log terms from residues on z = -l.
    """
    table = pole_table(spec, n, K)
    zK = Fraction(n - K) / (2 * spec.alpha)
    exps, logs = set(), []
    for e in table.entries:
        if e.analytic:
            continue
        if e.z.denominator == 1 and e.z <= 0:
            logs.append(int(-e.z))
        else:
            exps.add(float(-e.z))
    l = 0
    while -l >= zK:
        exps.add(float(l))
        l += 1
    return sorted(exps), sorted(logs)


# ---------------------------------------------------------------------------
# end-to-end comparison


@dataclass(frozen=True)
class VerifyReport:
    n: int
    K: int
    normalization: str
    t: tuple[float, ...]
    numeric: tuple[float, ...]
    expansion: tuple[float, ...]
    max_rel_deviation: float
    remainder_slope: float | None
    expected_remainder_slope: float
    leading_coefficient: float
    fitted_leading_coefficient: float
    kappa_flag: str | None
    log_fit: dict | None
    tol: float
    numeric_provenance: str

    @property
    def ok(self) -> bool:
        return self.max_rel_deviation <= self.tol

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "K": self.K,
            "normalization": self.normalization,
            "log_convention": "natural",
            "max_rel_deviation": self.max_rel_deviation,
            "tol": self.tol,
            "pass": self.ok,
            "remainder_slope": self.remainder_slope,
            "expected_remainder_slope": self.expected_remainder_slope,
            "leading_coefficient": {"value": self.leading_coefficient, "provenance": "symbolic"},
            "fitted_leading_coefficient": {"value": self.fitted_leading_coefficient,
                                           "provenance": "fit(" + self.numeric_provenance + ")"},
            "kappa_flag": self.kappa_flag,
            "log_fit": self.log_fit,
            "samples": [
                {"t": t, "numeric": a, "expansion": b, "provenance": self.numeric_provenance}
                for t, a, b in zip(self.t, self.numeric, self.expansion)
            ],
        }


def verify_expansion(spec: LevySpec, n: int, K: int, normalization: str = "direct",
                     t_grid: Sequence[float] | None = None, tol: float = 1e-6,
                     expansion: HeatTraceExpansion | None = None) -> VerifyReport:
    """Compare the assembled expansion with the numeric trace of A~.

    Reports the maximal relative deviation on ``t_grid``, the empirical
    remainder order, and a free fit of the leading coefficient.  A leading
    coefficient off by the factor n is flagged as the normalisation
    discrepancy.  Where log terms exist, the coefficient of t log t is fitted
    from the numeric data with the power terms removed.
    """
    if t_grid is None:
        t_grid = np.logspace(-3, -1, 12)
    t = np.asarray(t_grid, dtype=float)
    if expansion is None:
        _, _, expansion = assemble(spec, n, K, normalization)
    samples = trace_samples(spec, n, t)
    num = np.array([s.value for s in samples])
    ser = np.asarray(expansion.evaluate(t, include_prefactor=False), dtype=float)
    rel = np.abs(num - ser) / num
    remainder = np.abs(num - ser)
    slope = None
    good = remainder > 1e3 * np.finfo(float).eps * num
    if good.sum() >= 3:
        slope = float(np.polyfit(np.log(t[good]), np.log(remainder[good]), 1)[0])
    lead_exp = min(p.exponent for p in expansion.power_terms)
    lead = expansion.coefficient(lead_exp)
    # free fit of the two most singular residue-family terms on the same grid
    fit_exps = sorted({float(p.exponent) for p in expansion.power_terms if p.exponent < 0})[:2]
    fit = fit_asymptotics(samples, fit_exps)
    fitted = fit.coefficient(float(lead_exp))
    ratio = fitted / lead
    flag = None
    if abs(ratio - 1.0) > 0.01:
        if abs(ratio - n) < 0.01 * n:
            flag = (f"kappa discrepancy: numeric leading coefficient is {n} x the {normalization} value; "
                    f"the numeric trace follows the direct normalisation")
        else:
            flag = f"leading coefficient mismatch: fitted/expansion = {ratio:.6g}"
    log_fit = None
    if expansion.log_terms:
        lt = expansion.log_terms[0]
        exps, logs = ansatz(spec, n, min(2 * spec.K, K + 2))
        lf = fit_asymptotics(samples, exps, include_log_at=logs)
        log_fit = {
            "l": lt.l,
            "fitted_t_log_t_coefficient": -lf.log_coefficients[logs.index(lt.l)],
            "expansion_t_log_t_coefficient": -lt.coefficient,
            "fitted_finite_part": lf.coefficient(float(lt.l)),
            "model_exponents": list(exps),
            "model_log_at": list(logs),
            "condition": lf.condition,
            "provenance": "fit(quadrature)",
        }
    return VerifyReport(
        n=n, K=K, normalization=normalization, t=tuple(map(float, t)), numeric=tuple(map(float, num)),
        expansion=tuple(map(float, ser)), max_rel_deviation=float(rel.max()), remainder_slope=slope,
        expected_remainder_slope=float(min([expansion.remainder_exponent(), *expansion.unresolved_finite_parts])), leading_coefficient=float(lead),
        fitted_leading_coefficient=float(fitted), kappa_flag=flag, log_fit=log_fit, tol=tol,
        numeric_provenance="quadrature(1e-12)",
    )


# ---------------------------------------------------------------------------
# export


def samples_to_csv(samples: Sequence[TraceSample]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t", "value", "est_error"])
    for s in samples:
        w.writerow([repr(s.t), repr(s.value), repr(s.est_error)])
    return buf.getvalue()


def samples_to_json(samples: Sequence[TraceSample]) -> str:
    return json.dumps([{"t": s.t, "value": s.value, "est_error": s.est_error, "provenance": "quadrature"}
                       for s in samples], sort_keys=True, indent=2)
