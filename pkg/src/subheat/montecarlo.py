"""
Monte Carlo checks for the subordinator and subordinate Brownian motion.

Jumps of size >= epsilon form a compound Poisson process with rate
Lambda(eps) = int_eps^inf m and jump law m 1_{>=eps}/Lambda(eps); the jumps
below epsilon are replaced by the drift d(eps) = int_0^eps t m(t) dt.

Random numbers come from Philox streams keyed by SeedSequence([seed, block]).
Paths are processed in fixed blocks, and block statistics are combined in
block order, so results do not depend on the number of worker threads.
Brownian motion follows the convention E exp(i xi B_t) = exp(-t |xi|^2):
each coordinate has variance 2t.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bernstein import LevySpec, eval_f
from .errors import ConfigError, QuadratureError
from .quadrature import QuadConfig, integrate

DEFAULT_BLOCK = 4096
TABLE_SIZE = 2048
_FLOOR = 1e-12
_GL_X, _GL_W = np.polynomial.legendre.leggauss(8)


@dataclass(frozen=True)
class SimConfig:
    epsilon: float = 1e-4
    paths: int = 100_000
    horizon: float = 1.0
    seed: int = 0
    time_grid: tuple[float, ...] = (1.0,)
    block: int = DEFAULT_BLOCK
    threads: int = 1

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigError("epsilon must be positive")
        if self.paths < 1000:
            raise ConfigError("at least 1000 paths are required")
        if not self.horizon > 0 or any(not t > 0 for t in self.time_grid):
            raise ConfigError("times must be positive")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        if self.block < 1 or self.threads < 1:
            raise ConfigError("block size and thread count must be positive")

    @property
    def provenance(self) -> str:
        return f"monte-carlo({self.paths},{self.seed})"

    def blocks(self) -> list[tuple[int, int]]:
        """(block index, number of paths) in fixed order."""
        nb = -(-self.paths // self.block)
        return [(b, min(self.block, self.paths - b * self.block)) for b in range(nb)]

    def rng(self, block: int) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(np.random.SeedSequence([self.seed, block])))


# ---------------------------------------------------------------------------
# the approximating process


@dataclass(frozen=True)
class CompoundPoissonApprox:
    """Drift plus compound Poisson jumps sampled from an inverse-CDF table."""

    rate: float
    drift: float
    knots: np.ndarray | None = field(default=None, repr=False)
    cdf: np.ndarray | None = field(default=None, repr=False)
    epsilon: float = 0.0
    mean_jump: float = 0.0

    def __post_init__(self):
        if self.rate < 0 or self.drift < 0:
            raise ConfigError("rate and drift must be non-negative")
        if self.rate > 0 and (self.knots is None or self.cdf is None):
            raise ConfigError("a jump table is required when the rate is positive")

    @classmethod
    def from_spec(cls, spec: LevySpec, epsilon: float, size: int = TABLE_SIZE) -> "CompoundPoissonApprox":
        tmax = _tail_cut(spec, epsilon)
        knots = np.geomspace(epsilon, tmax, size)
        lo, hi = knots[:-1], knots[1:]
        # Gauss-Legendre on each cell in log t
        la, lb = np.log(lo), np.log(hi)
        mid, half = 0.5 * (la + lb), 0.5 * (lb - la)
        u = np.exp(mid[:, None] + half[:, None] * _GL_X[None, :])
        dens = np.asarray(spec.density(u.ravel()), dtype=float).reshape(u.shape)
        if not np.all(np.isfinite(dens)) or np.any(dens < 0):
            raise ConfigError("density evaluation failed while building the jump table")
        mass = (dens * u * _GL_W[None, :]).sum(axis=1) * half
        first = (dens * u * u * _GL_W[None, :]).sum(axis=1) * half
        rate = float(mass.sum())
        cdf = np.concatenate([[0.0], np.cumsum(mass)]) / rate
        return cls(rate=rate, drift=small_jump_drift(spec, epsilon), knots=knots, cdf=cdf,
                   epsilon=epsilon, mean_jump=float(first.sum()) / rate)

    def sample_jumps(self, rng: np.random.Generator, size: int) -> np.ndarray:
        u = rng.random(size)
        i = np.clip(np.searchsorted(self.cdf, u, side="right") - 1, 0, len(self.knots) - 2)
        w = (u - self.cdf[i]) / np.maximum(self.cdf[i + 1] - self.cdf[i], 1e-300)
        lk = np.log(self.knots)
        return np.exp(lk[i] + w * (lk[i + 1] - lk[i]))

    def mean_rate(self) -> float:
        """E X_1 of the approximation."""
        return self.drift + self.rate * self.mean_jump

    def laplace_exponent(self, lam: float) -> float:
        """Exponent of the approximation, d lam + Lambda E(1 - e^{-lam J}), from the table."""
        if self.rate == 0:
            return self.drift * lam
        lk = np.log(self.knots)
        la, lb = lk[:-1], lk[1:]
        mid, half = 0.5 * (la + lb), 0.5 * (lb - la)
        u = np.exp(mid[:, None] + half[:, None] * _GL_X[None, :])
        # piecewise log-linear CDF: density in each cell is mass/(u * log-width)
        cell = np.diff(self.cdf)[:, None] / (2 * half[:, None])
        val = (cell * -np.expm1(-lam * u) * _GL_W[None, :]).sum(axis=1) * half
        return self.drift * lam + self.rate * float(val.sum())


def _tail_cut(spec: LevySpec, epsilon: float) -> float:
    """Beyond this size the tail mass is below 1e-14 of the jump rate."""
    lam_eps = jump_rate(spec, epsilon)
    t = max(1.0, 2 * epsilon)
    while True:
        tail = float(integrate(lambda s: spec.density(s), t, math.inf, QuadConfig(tol=1e-18, rtol=1e-8)).value)
        if tail <= 1e-14 * lam_eps or t > 1e6:
            return t
        t *= 2.0


def jump_rate(spec: LevySpec, epsilon: float) -> float:
    """Lambda(eps) = int_eps^inf m(t) dt."""
    res = integrate(lambda s: spec.density(s), epsilon, math.inf, QuadConfig(tol=1e-12, rtol=1e-12),
                    (1.0,) if epsilon < 1 else ())
    return float(res.value)


def small_jump_drift(spec: LevySpec, epsilon: float) -> float:
    """d(eps) = int_0^eps t m(t) dt; the part below the series cutoff is done termwise."""
    a = spec.a
    c = min(epsilon, spec.series_cutoff())
    val = sum(pk * c ** (k + 1 - a) / (k + 1 - a) for k, pk in enumerate(spec.p))
    if epsilon > c:
        val += float(integrate(lambda s: s * spec.density(s), c, epsilon, QuadConfig(tol=1e-15, rtol=1e-12)).value)
    return float(val)


def approximation(process, epsilon: float) -> CompoundPoissonApprox:
    if isinstance(process, CompoundPoissonApprox):
        return process
    if isinstance(process, LevySpec):
        return CompoundPoissonApprox.from_spec(process, epsilon)
    raise TypeError("expected a LevySpec or CompoundPoissonApprox")


# ---------------------------------------------------------------------------
# path generation


def _increments(cp: CompoundPoissonApprox, rng, npaths: int, dt: np.ndarray) -> np.ndarray:
    """Subordinator increments over intervals dt, shape (npaths, len(dt))."""
    out = np.broadcast_to(cp.drift * dt, (npaths, dt.size)).copy()
    if cp.rate == 0:
        return out
    counts = rng.poisson(cp.rate * dt[None, :].repeat(npaths, axis=0))
    flat = counts.ravel()
    total = int(flat.sum())
    if total:
        jumps = cp.sample_jumps(rng, total)
        owner = np.repeat(np.arange(flat.size), flat)
        sums = np.bincount(owner, weights=jumps, minlength=flat.size)
        out += sums.reshape(counts.shape)
    return out


def _run_blocks(cfg: SimConfig, fn: Callable):
    blocks = cfg.blocks()
    if cfg.threads == 1:
        return [fn(b, n) for b, n in blocks]
    with ThreadPoolExecutor(max_workers=cfg.threads) as ex:
        return list(ex.map(lambda bn: fn(*bn), blocks))


def simulate_subordinator(process, cfg: SimConfig) -> np.ndarray:
    """X on cfg.time_grid for all paths, shape (paths, len(time_grid))."""
    cp = approximation(process, cfg.epsilon)
    grid = np.asarray(sorted(cfg.time_grid), dtype=float)
    dt = np.diff(np.concatenate([[0.0], grid]))

    def block(b, n):
        return np.cumsum(_increments(cp, cfg.rng(b), n, dt), axis=1)

    X = np.concatenate(_run_blocks(cfg, block), axis=0)
    if np.any(np.diff(np.concatenate([np.zeros((X.shape[0], 1)), X], axis=1), axis=1) < 0):
        raise AssertionError("simulated path decreased")
    return X


# ---------------------------------------------------------------------------
# statistics


def _combine(parts: list[tuple[int, float, float]]) -> tuple[float, float, int]:
    """Merge (count, mean, M2) block summaries in order (Chan et al. update)."""
    n, mean, m2 = 0, 0.0, 0.0
    for nb, mb, m2b in parts:
        if nb == 0:
            continue
        d = mb - mean
        tot = n + nb
        mean += d * nb / tot
        m2 += m2b + d * d * n * nb / tot
        n = tot
    return mean, m2, n


def _summary(x: np.ndarray) -> tuple[int, float, float]:
    m = float(x.mean())
    return x.size, m, float(((x - m) ** 2).sum())


@dataclass(frozen=True)
class Cell:
    functional: str
    t: float
    param: float
    estimate: float
    stderr: float
    target: float | None = None
    passed: bool | None = None

    def row(self, provenance: str) -> list:
        return [self.functional, repr(self.t), repr(self.param), repr(self.estimate), repr(self.stderr),
                "" if self.target is None else repr(self.target),
                "" if self.passed is None else str(self.passed).lower(), provenance]


@dataclass(frozen=True)
class PathStats:
    cells: tuple[Cell, ...]
    config: SimConfig
    streams: str = "philox(SeedSequence([seed, block]))"
    extra: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.cells) and self.extra.get("passed", True)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["functional", "t", "param", "estimate", "stderr", "target", "pass", "provenance"])
        for c in self.cells:
            w.writerow(c.row(self.config.provenance))
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "provenance": self.config.provenance,
            "epsilon": self.config.epsilon,
            "paths": self.config.paths,
            "seed": self.config.seed,
            "streams": self.streams,
            "block": self.config.block,
            "pass": self.passed,
            "cells": [c.__dict__ for c in self.cells],
            "extra": self.extra,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def _bernstein(spec, lam: float) -> float:
    if isinstance(spec, CompoundPoissonApprox):
        return spec.laplace_exponent(lam)
    if spec.bernstein is not None:
        return float(spec.bernstein(lam))
    return float(eval_f(spec, lam))


def laplace_check(process, cfg: SimConfig, lambdas: Sequence[float], times: Sequence[float] | None = None,
                  nsig: float = 4.0) -> PathStats:
    """E exp(-lam X_t) against exp(-t f(lam)) in every (lam, t) cell."""
    times = tuple(sorted(times if times is not None else cfg.time_grid))
    cp = approximation(process, cfg.epsilon)
    lambdas = tuple(float(l) for l in lambdas)
    dt = np.diff(np.concatenate([[0.0], times]))

    def block(b, n):
        X = np.cumsum(_increments(cp, cfg.rng(b), n, np.asarray(dt)), axis=1)
        if np.any(np.diff(X, axis=1) < 0) or np.any(X < 0):
            raise AssertionError("simulated path decreased")
        return [[_summary(np.exp(-lam * X[:, j])) for j in range(len(times))] for lam in lambdas]

    parts = _run_blocks(cfg, block)
    cells = []
    for i, lam in enumerate(lambdas):
        for j, t in enumerate(times):
            mean, m2, n = _combine([p[i][j] for p in parts])
            se = math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0
            target = math.exp(-t * _bernstein(process, lam)) if lam > 0 else 1.0
            # a roundoff floor keeps deterministic processes (se ~ 1e-18) from failing
            ok = abs(mean - target) <= nsig * se + _FLOOR * max(abs(target), 1.0)
            cells.append(Cell("laplace", t, lam, mean, se, target, ok))
    return PathStats(tuple(cells), cfg)


def compensator_check(process, cfg: SimConfig, t: float = 1.0, nsig: float = 4.0) -> PathStats:
    """Mean of X_t/t against d(eps) + Lambda E[jump]; variance of B_{X_t} against 2 E X_t."""
    cp = approximation(process, cfg.epsilon)

    def block(b, n):
        rng = cfg.rng(b)
        X = _increments(cp, rng, n, np.array([t]))[:, 0]
        B = rng.standard_normal(n) * np.sqrt(2.0 * X)
        return _summary(X / t), _summary(B * B)

    parts = _run_blocks(cfg, block)
    mx, m2x, n = _combine([p[0] for p in parts])
    mb, m2b, _ = _combine([p[1] for p in parts])
    sex = math.sqrt(m2x / (n - 1) / n)
    seb = math.sqrt(m2b / (n - 1) / n)
    target = cp.mean_rate()
    cells = (
        Cell("mean_X_over_t", t, 0.0, mx, sex, target, abs(mx - target) <= nsig * sex + _FLOOR * max(abs(target), 1.0)),
        Cell("var_B_X", t, 0.0, mb, seb, 2 * target * t, abs(mb - 2 * target * t) <= nsig * seb + _FLOOR * max(abs(target), 1.0)),
    )
    return PathStats(cells, cfg)


def epsilon_bias(spec: LevySpec, epsilons: Sequence[float], lam: float, t: float) -> list[float]:
    """|E_eps exp(-lam X_t) - exp(-t f(lam))| of the approximation itself (no sampling)."""
    exact = math.exp(-t * _bernstein(spec, lam))
    out = []
    for eps in epsilons:
        d = small_jump_drift(spec, eps)
        jl = integrate(lambda s: -np.expm1(-lam * s) * spec.density(s), eps, math.inf,
                       QuadConfig(tol=1e-13, rtol=1e-12), (1.0,) if eps < 1 else ()).value
        out.append(abs(math.exp(-t * (d * lam + jl)) - exact))
    return out


def epsilon_trend(spec: LevySpec, cfg: SimConfig, epsilons: Sequence[float] = (1e-2, 1e-3, 1e-4),
                  lam: float = 1.0, t: float = 1.0) -> PathStats:
    """Bias against epsilon: exact approximation bias plus a Monte Carlo estimate per epsilon."""
    eps = sorted(epsilons, reverse=True)
    bias = epsilon_bias(spec, eps, lam, t)
    cells = []
    for e, bb in zip(eps, bias):
        c = SimConfig(e, cfg.paths, t, cfg.seed, (t,), cfg.block, cfg.threads)
        cell = laplace_check(spec, c, [lam], [t]).cells[0]
        cells.append(Cell("epsilon_bias", t, e, abs(cell.estimate - cell.target), cell.stderr, bb, None))
    decreasing = all(b2 < b1 for b1, b2 in zip(bias, bias[1:]))
    return PathStats(tuple(cells), cfg, extra={"exact_bias": bias, "monotone": decreasing, "passed": decreasing})


# ---------------------------------------------------------------------------
# Blumenthal-Getoor trend


def bg_index_check(process, cfg: SimConfig, betas: Sequence[float], index: float | None = None,
                   t_points: Sequence[float] = (1e-1, 1e-2, 1e-3, 1e-4), per_decade: int = 40) -> PathStats:
    """Medians of t^(-1/beta) sup_{s<=t} |B_{X_s}| across paths.

    For beta above the index the medians must decrease as t decreases,
    below it they must increase; beta equal to the index is reported only.
    The supremum is taken over a geometric time grid with ``per_decade``
    points per decade starting two decades below the smallest t.
    ``index`` defaults to the Blumenthal-Getoor index 2 alpha of a LevySpec.
    """
    if index is None:
        if not isinstance(process, LevySpec):
            raise ConfigError("index is required for processes without an alpha")
        index = 2 * float(process.alpha)
    cp = approximation(process, cfg.epsilon)
    tp = np.array(sorted(t_points), dtype=float)
    lo, hi = tp[0] / 100.0, tp[-1]
    ndec = math.log10(hi / lo)
    grid = np.unique(np.concatenate([np.geomspace(lo, hi, int(round(ndec * per_decade)) + 1), tp]))
    idx = np.searchsorted(grid, tp)
    dt = np.diff(np.concatenate([[0.0], grid]))

    def block(b, n):
        rng = cfg.rng(b)
        dX = _increments(cp, rng, n, dt)
        dB = rng.standard_normal(dX.shape) * np.sqrt(2.0 * dX)
        run = np.maximum.accumulate(np.abs(np.cumsum(dB, axis=1)), axis=1)
        return run[:, idx]

    S = np.concatenate(_run_blocks(cfg, block), axis=0)
    n = S.shape[0]
    # distribution-free 95% interval of the median from order statistics
    half = 1.96 * math.sqrt(n) / 2
    lo_i, hi_i = max(int(math.floor(n / 2 - half)), 0), min(int(math.ceil(n / 2 + half)), n - 1)
    cells, verdicts = [], {}
    for beta in betas:
        stat = S * tp[None, :] ** (-1.0 / beta)
        srt = np.sort(stat, axis=0)
        med = np.median(stat, axis=0)
        ci_w = srt[hi_i] - srt[lo_i]
        # medians listed from large t to small t
        m_desc = med[::-1]
        if beta > index:
            ok = bool(np.all(np.diff(m_desc) < 0))
        elif beta < index:
            ok = bool(np.all(np.diff(m_desc) > 0))
        else:
            ok = None
        gaps = np.abs(np.diff(m_desc))
        stable = bool(np.all(gaps > ci_w[::-1][1:]))
        verdicts[str(beta)] = {"monotone": ok, "ci_separated": stable}
        for j, t in enumerate(tp):
            cells.append(Cell("bg_median", float(t), float(beta), float(med[j]), float(ci_w[j] / 3.92), None,
                              ok if ok is not None else None))
    return PathStats(tuple(cells), cfg, extra={"index": index, "verdicts": verdicts})


# ---------------------------------------------------------------------------
# first passage undershoot


def arcsine_estimate(process, cfg: SimConfig, x_grid: Sequence[float], max_events: int = 10_000_000,
                     power: float | None = None) -> PathStats:
    """(1/x) E X_{T(x)-} for each x, event by event, extrapolated to x = 0.

    X_{T(x)-} is the position just before first passage strictly above x:
    the pre-jump position if a jump crosses, x itself if the drift creeps
    across between jumps.

    The extrapolation is a weighted linear fit in x**power.  For a LevySpec
    the default power is alpha: the first correction to f(lam) ~ alpha_0
    lam**alpha is the constant mbar, a relative change of order lam**-alpha,
    i.e. x**alpha at level x.  Other processes default to power 1.
    """
    if power is None:
        power = process.a if isinstance(process, LevySpec) else 1.0
    cp = approximation(process, cfg.epsilon)
    xs = np.array(sorted(x_grid), dtype=float)
    if np.any(xs <= 0):
        raise ConfigError("x_grid must be positive")
    if cp.rate == 0 and cp.drift == 0:
        raise ConfigError("a process without drift or jumps never passes any level")

    def block(b, n):
        rng = cfg.rng(b)
        X = np.zeros(n)
        under = np.full((n, xs.size), np.nan)
        active = np.arange(n)
        events = 0
        while active.size:
            m = active.size
            if cp.rate > 0:
                tau = rng.exponential(1.0 / cp.rate, m)
                J = cp.sample_jumps(rng, m)
            else:
                tau = np.full(m, np.inf)
                J = np.zeros(m)
            x0 = X[active]
            before = x0 + cp.drift * tau
            after = before + J
            for i, x in enumerate(xs):
                col = under[active, i]
                todo = np.isnan(col) & (x0 <= x)
                creep = todo & (before > x)
                jump = todo & ~creep & (after > x)
                col = np.where(creep, x, col)
                col = np.where(jump, before, col)
                under[active, i] = col
            X[active] = after
            active = active[np.isnan(under[active, -1])]
            events += m
            if events > max_events:
                raise QuadratureError("first-passage simulation exceeded its event budget")
        return [_summary(under[:, i] / x) for i, x in enumerate(xs)]

    parts = _run_blocks(cfg, block)
    est, se = [], []
    for i in range(xs.size):
        mean, m2, n = _combine([p[i] for p in parts])
        est.append(mean)
        se.append(math.sqrt(m2 / (n - 1) / n) if n > 1 else 0.0)
    est, se = np.array(est), np.array(se)
    cells = [Cell("undershoot_ratio", 0.0, float(x), float(e), float(s)) for x, e, s in zip(xs, est, se)]
    extra = {}
    if xs.size >= 2 and np.all(se > 0):
        w = 1.0 / se
        A = np.stack([np.ones_like(xs), xs**power], axis=1) * w[:, None]
        coef, *_ = np.linalg.lstsq(A, est * w, rcond=None)
        cov = np.linalg.inv(A.T @ A)
        extra = {"extrapolated": float(coef[0]), "extrapolated_stderr": float(math.sqrt(cov[0, 0])),
                 "extrapolation_power": float(power)}
        cells.append(Cell("undershoot_ratio_limit", 0.0, 0.0, float(coef[0]), float(math.sqrt(cov[0, 0]))))
    elif xs.size:
        # zero variance somewhere (e.g. pure drift): report the smallest-x value
        extra = {"extrapolated": float(est[0]), "extrapolated_stderr": float(se[0])}
        cells.append(Cell("undershoot_ratio_limit", 0.0, 0.0, float(est[0]), float(se[0])))
    return PathStats(tuple(cells), cfg, extra=extra)
