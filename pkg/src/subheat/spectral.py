"""
Zeta-function poles and the short-time heat-trace expansion.

With the radial trace TR(sigma) = (2 pi)^-n Omega_n int_0^inf sigma(r) r^(n-1) dr,
the zeta function zeta(z) = TR(A~^-z) has candidate simple poles at
z_k = (n - k)/(2 alpha) with residue

    kappa * Omega_n/(2 pi)^n * s_k(z_k)/(2 alpha),

where s_k is the radial coefficient of the degree -2 alpha z - k term of the
complex-power symbol.  kappa = 1 is the direct normalisation; kappa = 1/n
reproduces the worked-example convention that averages over the sphere.

The heat trace follows from the Mellin pairing with Gamma(z): simple poles of
Gamma(z) zeta(z) give power terms, double poles (a zeta pole on top of a Gamma
pole at z = -l) give -c~_l t^l log t.  Logarithms are natural.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .bernstein import LevySpec, sigma_tilde
from .errors import ConfigError, QuadratureError, TruncationError
from .quadrature import DEFAULT_QUAD, QuadConfig, integrate
from .special import gamma, gamma_residue, sphere_area, trace_constant
from .symbolic import ComplexPowerSeries, complex_power_symbol, parametrix, shifted_symbol

NORMALIZATIONS = ("direct", "paper")


def kappa(n: int, normalization: str) -> Fraction:
    if normalization == "direct":
        return Fraction(1)
    if normalization == "paper":
        return Fraction(1, n)
    raise ConfigError(f"normalization must be one of {NORMALIZATIONS}, got {normalization!r}")


def _is_nonpos_int(z: Fraction) -> bool:
    return z.denominator == 1 and z <= 0


@dataclass(frozen=True)
class PoleEntry:
    k: int
    z: Fraction
    residue: float
    analytic: bool
    # residue / (Omega_n/(2 pi)^n) when it is rational, else None
    residue_exact: Fraction | None = None


@dataclass(frozen=True)
class ZetaPoleTable:
    n: int
    alpha: Fraction
    normalization: str
    entries: tuple[PoleEntry, ...]

    @property
    def kappa(self) -> Fraction:
        return kappa(self.n, self.normalization)

    def poles(self) -> list[PoleEntry]:
        return [e for e in self.entries if not e.analytic]

    def entry_at(self, z: Fraction) -> PoleEntry | None:
        for e in self.entries:
            if e.z == z:
                return e
        return None

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "alpha": str(self.alpha),
            "normalization": self.normalization,
            "kappa": str(self.kappa),
            "entries": [
                {
                    "k": e.k,
                    "z": str(e.z),
                    "residue": e.residue,
                    "residue_over_trace_constant": None if e.residue_exact is None else str(e.residue_exact),
                    "analytic": e.analytic,
                    "provenance": "symbolic",
                }
                for e in self.entries
            ],
        }


def zeta_poles(cps: ComplexPowerSeries, n: int, normalization: str = "direct") -> ZetaPoleTable:
    """Pole table for k = 0..cps.K."""
    if n < 1:
        raise ConfigError("dimension must be positive")
    series = cps.series
    if series is None:
        raise ValueError("complex power series must carry its SymbolSeries")
    kap = kappa(n, normalization)
    a2 = 2 * cps.alpha
    const = trace_constant(n)
    entries = []
    for k, _ in cps.terms:
        z = Fraction(n - k) / a2
        if cps.structurally_zero(k, z):
            entries.append(PoleEntry(k, z, 0.0, True, Fraction(0)))
            continue
        ex = cps.s_exact(k, z)
        if ex is not None:
            rel = kap * ex / a2
            entries.append(PoleEntry(k, z, float(rel) * const, rel == 0, rel))
        else:
            s = cps.s(k, float(z))
            res = float(kap) * const * float(s) / float(a2)
            entries.append(PoleEntry(k, z, res, res == 0.0, None))
    return ZetaPoleTable(n, cps.alpha, normalization, tuple(entries))


def pole_table(spec: LevySpec, n: int, K: int, normalization: str = "direct", exact: bool | None = None) -> ZetaPoleTable:
    """Convenience: spec -> symbol -> parametrix -> complex powers -> poles."""
    return zeta_poles(power_series(spec, K, exact), n, normalization)


def power_series(spec: LevySpec, K: int, exact: bool | None = None) -> ComplexPowerSeries:
    if exact is None:
        exact = spec.alpha == Fraction(1, 2) and spec.p_sqrtpi_exact is not None
    J = math.ceil(K / 2)
    if J > spec.K:
        raise TruncationError(f"order {K} needs p_0..p_{J}; only p_0..p_{spec.K} are known")
    series = shifted_symbol(spec, J, exact=exact)
    return complex_power_symbol(parametrix(series, K), series)


# ---------------------------------------------------------------------------
# numeric continuation


@dataclass(frozen=True)
class ZetaValue:
    z: complex
    value: complex
    error: float
    K: int
    R: float
    normalization: str

    @property
    def provenance(self) -> str:
        return f"quadrature({self.error:.1e})"


def _sigma_fn(spec: LevySpec, quad: QuadConfig):
    return lambda r: np.asarray(sigma_tilde(spec, r, quad), dtype=float)


def zeta_continue(spec: LevySpec, n: int, z, K: int | None = None, R: float = 4.0,
                  quad: QuadConfig = DEFAULT_QUAD, normalization: str = "direct",
                  cps: ComplexPowerSeries | None = None) -> ZetaValue:
    """Meromorphic continuation of zeta by tail subtraction at radius R.

    zeta(z) = C [ int_0^R sigma~^-z r^(n-1) dr
                  + int_R^inf (sigma~^-z - sum_{k<=K} s_k r^(-2 alpha z-k)) r^(n-1) dr
                  - sum_{k<=K} s_k R^(e_k)/e_k ],   e_k = n - 2 alpha z - k,

    with C = kappa Omega_n/(2 pi)^n.  The subtracted tail is integrated
    numerically on [R, 2R] only; beyond 2R the symbol terms K < k <= k_extra
    are integrated analytically and the first omitted one bounds the error.
    """
    z = complex(z)
    a = float(spec.alpha)
    a2 = 2 * a
    if K is None:
        # smallest K with Re(n - 2 alpha z - K) < -1
        K = max(0, math.floor(n - a2 * z.real + 1) + 1)
    if n - a2 * z.real - K >= -1 + 1e-12:
        raise TruncationError(f"K = {K} too small: the subtracted tail does not converge at z = {z}")
    k_extra = min(2 * spec.K, K + 12)
    if cps is None or cps.K < k_extra:
        cps = power_series(spec, k_extra, exact=False)
    # distance to poles with nonzero residue
    table = zeta_poles(cps, n, "direct")
    for e in table.poles():
        if abs(z - float(e.z)) < 1e-3:
            raise ConfigError(f"z = {z} is within 1e-3 of the pole z_{e.k} = {e.z}")
    if R <= 1.0:
        raise ConfigError("split radius must exceed 1")
    sig = _sigma_fn(spec, quad)
    s = [complex(cps.s(k, z)) for k in range(k_extra + 1)]
    ex = [n - a2 * z - k for k in range(k_extra + 1)]
    # where e_k = 0 the point z is z_k itself and s_k(z_k) = 0 (otherwise it would be
    # a pole); the analytic tail term then takes its limit s_k'(z_k)/(2 alpha)
    flat = [abs(ex[k]) < 1e-12 for k in range(k_extra + 1)]

    def tail_term(k, rad):
        if flat[k]:
            return -complex(cps.ds(k, z)) / a2
        return s[k] * rad ** ex[k] / ex[k]

    def head(r):
        return np.exp(-z * np.log(sig(r))) * r ** (n - 1)

    def tail(r):
        sub = sum(s[k] * r ** (ex[k] - n) for k in range(K + 1))
        return (np.exp(-z * np.log(sig(r))) - sub) * r ** (n - 1)

    # a short subtracted stretch keeps roundoff of the subtraction small; the
    # analytic terms K < k <= k_extra carry the rest of the tail
    r_c = 2 * R
    q = QuadConfig(tol=quad.tol / 4, rtol=quad.rtol, max_evals=quad.max_evals)
    h = integrate(head, 0.0, R, q, (1.0,) if R > 1 else ())
    tl = integrate(tail, R, r_c, q)
    far = -sum(tail_term(k, r_c) for k in range(K + 1, k_extra + 1) if not flat[k])
    analytic = -sum(tail_term(k, R) for k in range(K + 1))
    trunc = abs(s[k_extra] * r_c ** ex[k_extra]) if k_extra > K else 0.0
    C = float(kappa(n, normalization)) * trace_constant(n)
    val = C * (h.value + tl.value + far + analytic)
    err = C * (h.error + tl.error + trunc)
    return ZetaValue(z, complex(val), float(err), K, R, normalization)


# ---------------------------------------------------------------------------
# heat trace


@dataclass(frozen=True)
class PowerTerm:
    """coefficient * t**exponent."""

    exponent: Fraction
    coefficient: float
    k: int | None  # table index, None for the Gamma-pole family
    source: str  # "residue", "zeta-value", "gamma-pole"

    def to_dict(self) -> dict:
        return {"exponent": str(self.exponent), "coefficient": self.coefficient, "k": self.k,
                "source": self.source, "provenance": "symbolic" if self.source == "residue" else "quadrature"}


@dataclass(frozen=True)
class LogTerm:
    """-coefficient * t**l * log t (natural log)."""

    l: int
    coefficient: float
    k: int

    def to_dict(self) -> dict:
        return {"l": self.l, "coefficient": self.coefficient, "k": self.k, "provenance": "symbolic",
                "meaning": "-coefficient * t^l * log(t)"}


@dataclass(frozen=True)
class HeatTraceExpansion:
    n: int
    alpha: Fraction
    normalization: str
    power_terms: tuple[PowerTerm, ...]
    log_terms: tuple[LogTerm, ...]
    prefactor_rate: float = 0.0
    unresolved_finite_parts: tuple[int, ...] = ()
    collisions: tuple[str, ...] = ()
    K: int = 0

    def remainder_exponent(self) -> Fraction:
        """Exponent of the first neglected residue-family term."""
        return -Fraction(self.n - self.K - 1) / (2 * self.alpha)

    def evaluate(self, t, include_prefactor: bool = True):
        """Partial sum of the expansion (finite parts in unresolved slots are omitted)."""
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for p in self.power_terms:
            out = out + p.coefficient * t ** float(p.exponent)
        for lt in self.log_terms:
            out = out - lt.coefficient * t**lt.l * np.log(t)
        if include_prefactor and self.prefactor_rate:
            out = out * np.exp(-self.prefactor_rate * t)
        return out

    def coefficient(self, exponent) -> float:
        exponent = Fraction(exponent)
        return sum(p.coefficient for p in self.power_terms if p.exponent == exponent)

    def log_coefficient(self, l: int) -> float:
        return sum(lt.coefficient for lt in self.log_terms if lt.l == l)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "alpha": str(self.alpha),
            "normalization": self.normalization,
            "K": self.K,
            "log_convention": "natural",
            "prefactor": f"exp(-({self.prefactor_rate!r}) t)",
            "prefactor_rate": self.prefactor_rate,
            "power_terms": [p.to_dict() for p in self.power_terms],
            "log_terms": [lt.to_dict() for lt in self.log_terms],
            "unresolved_finite_parts": list(self.unresolved_finite_parts),
            "collisions": list(self.collisions),
        }


def required_zeta_points(table: ZetaPoleTable, K: int | None = None) -> list[int]:
    """l >= 0 for which zeta(-l) must be supplied (analytic nonpositive integers in range)."""
    K = table.entries[-1].k if K is None else K
    zK = Fraction(table.n - K) / (2 * table.alpha)
    out = []
    l = 0
    while -l >= zK:
        e = table.entry_at(Fraction(-l))
        if e is None or e.analytic:
            out.append(l)
        l += 1
    return out


def heat_trace_expansion(table: ZetaPoleTable, zeta_values: Mapping[int, float], n: int | None = None,
                         treat_as_irrational: bool = False) -> HeatTraceExpansion:
    """Assemble power and log terms from the pole table.

    ``zeta_values[l]`` is zeta(-l) (same normalisation as the table) for every
    analytic point required.  At a zeta pole on z = -l a log term is emitted
    and the t^l finite part is listed as unresolved.  With
    ``treat_as_irrational`` no log terms are produced; a coincidence with a
    nonzero residue is then reported as a collision and the slot left
    unresolved.
    """
    n = table.n if n is None else n
    K = table.entries[-1].k
    power, logs, unresolved, collisions = [], [], [], []
    for e in table.entries:
        expo = -e.z
        if _is_nonpos_int(e.z):
            l = int(-e.z)
            if e.analytic:
                if l not in zeta_values:
                    raise ConfigError(f"zeta({-l}) is required but was not supplied")
                power.append(PowerTerm(expo, float(gamma_residue(l)) * float(zeta_values[l]), e.k, "zeta-value"))
            elif treat_as_irrational:
                collisions.append(f"z_{e.k} = {e.z} meets a Gamma pole although alpha is flagged irrational")
                unresolved.append(l)
            else:
                logs.append(LogTerm(l, float(gamma_residue(l)) * e.residue, e.k))
                unresolved.append(l)
        else:
            power.append(PowerTerm(expo, gamma(e.z) * e.residue if not e.analytic else 0.0, e.k, "residue"))
    # Gamma-pole family at t^l not covered by any table entry
    zK = Fraction(n - K) / (2 * table.alpha)
    l = 0
    while -l >= zK:
        if table.entry_at(Fraction(-l)) is None:
            if l not in zeta_values:
                raise ConfigError(f"zeta({-l}) is required but was not supplied")
            power.append(PowerTerm(Fraction(l), float(gamma_residue(l)) * float(zeta_values[l]), None, "gamma-pole"))
        l += 1
    power.sort(key=lambda p: p.exponent)
    logs.sort(key=lambda x: x.l)
    return HeatTraceExpansion(n, table.alpha, table.normalization, tuple(power), tuple(logs), 0.0,
                              tuple(sorted(set(unresolved))), tuple(collisions), K)


def assemble(spec: LevySpec, n: int, K: int, normalization: str = "direct", quad: QuadConfig = DEFAULT_QUAD,
             R: float = 4.0) -> tuple[ZetaPoleTable, dict, HeatTraceExpansion]:
    """Pole table, continued zeta values and heat-trace expansion in one call."""
    cps = power_series(spec, max(K, min(2 * spec.K, K + 12)))
    table = zeta_poles(_truncate(cps, K), n, normalization)
    values = {}
    for l in required_zeta_points(table):
        zv = zeta_continue(spec, n, -l, R=R, quad=quad, normalization=normalization, cps=cps)
        values[l] = zv
    exp = heat_trace_expansion(table, {l: v.value.real for l, v in values.items()}, n, spec.treat_as_irrational)
    return table, values, exp


def _truncate(cps: ComplexPowerSeries, K: int) -> ComplexPowerSeries:
    return ComplexPowerSeries(cps.alpha, tuple((k, t) for k, t in cps.terms if k <= K), cps.series)


def apply_shift(expansion: HeatTraceExpansion, mbar: float) -> HeatTraceExpansion:
    """Expansion for A = A~ + mbar: the series gains the factor exp(-mbar t)."""
    return HeatTraceExpansion(expansion.n, expansion.alpha, expansion.normalization, expansion.power_terms,
                              expansion.log_terms, float(mbar), expansion.unresolved_finite_parts,
                              expansion.collisions, expansion.K)


def banuelos_crosscheck(n: int, alpha, alpha0: float) -> float:
    """Omega_n Gamma(n/2 alpha) / ((2 pi)^n 2 alpha) * alpha0^(-n/2 alpha)."""
    a = float(alpha)
    return sphere_area(n) * gamma(n / (2 * a)) / ((2 * math.pi) ** n * 2 * a) * alpha0 ** (-n / (2 * a))


# ---------------------------------------------------------------------------
# export


def table_to_text(table: ZetaPoleTable) -> str:
    lines = [f"# zeta pole table: n={table.n} alpha={table.alpha} normalization={table.normalization}",
             f"{'k':>3} {'z_k':>8} {'residue':>24} analytic"]
    for e in table.entries:
        lines.append(f"{e.k:>3} {str(e.z):>8} {e.residue!r:>24} {str(e.analytic).lower()}")
    return "\n".join(lines)


def table_to_csv(table: ZetaPoleTable) -> str:
    rows = ["k,z,residue,analytic,provenance"]
    for e in table.entries:
        rows.append(f"{e.k},{e.z},{e.residue!r},{str(e.analytic).lower()},symbolic")
    return "\n".join(rows) + "\n"


def expansion_to_text(exp: HeatTraceExpansion) -> str:
    lines = [f"# heat trace expansion: n={exp.n} alpha={exp.alpha} normalization={exp.normalization} (natural log)",
             f"# prefactor exp(-({exp.prefactor_rate!r}) t)"]
    for p in exp.power_terms:
        lines.append(f"t^({p.exponent})  {p.coefficient!r}  [{p.source}]")
    for lt in exp.log_terms:
        lines.append(f"-t^{lt.l} log t  {lt.coefficient!r}  [log]")
    if exp.unresolved_finite_parts:
        lines.append("# unresolved finite parts at t^l for l in " + ", ".join(map(str, exp.unresolved_finite_parts)))
    for c in exp.collisions:
        lines.append("# collision: " + c)
    return "\n".join(lines)


def expansion_to_csv(exp: HeatTraceExpansion) -> str:
    rows = ["kind,exponent,coefficient,k,source,provenance"]
    for p in exp.power_terms:
        prov = "symbolic" if p.source == "residue" else "quadrature"
        rows.append(f"power,{p.exponent},{p.coefficient!r},{'' if p.k is None else p.k},{p.source},{prov}")
    for lt in exp.log_terms:
        rows.append(f"log,{lt.l},{lt.coefficient!r},{lt.k},double-pole,symbolic")
    return "\n".join(rows) + "\n"


def to_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2)
