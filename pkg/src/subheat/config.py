"""
Run configuration: one INI document with a section per module.

Example::

    [subordinator]
    name = relativistic        ; or "custom"
    alpha = 1/2
    ; c = 1                    ; catalog entries that need it
    ; custom only:
    ; density = truncated-stable
    ; p = 0.282, 0, 0, 0, 0

    [run]
    n = 3
    K = 4
    normalization = direct     ; or "paper"
    formats = json,csv,txt

    [zeta]
    z = 0, -1, -2

    [verify]
    t_min = 1e-3
    t_max = 1e-1
    t_count = 16
    tol = 1e-6

    [simulate]
    suites = laplace, bg, arcsine
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import bernstein
from .bernstein import LevySpec, as_rational
from .errors import ConfigError

FORMATS = ("json", "csv", "txt")
SUITES = ("laplace", "bg", "arcsine", "compensator", "epsilon")


def _floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.replace(";", ",").split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list {text!r}") from exc


def _complexes(text: str) -> tuple[complex, ...]:
    try:
        return tuple(complex(x.strip().replace(" ", "")) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"cannot parse z list {text!r}") from exc


def _bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


@dataclass(frozen=True)
class SubordinatorConfig:
    name: str
    alpha: Fraction | None = None
    c: Fraction | None = None
    order: int = bernstein.DEFAULT_ORDER
    treat_as_irrational: bool = False
    density: str | None = None
    p: tuple[float, ...] = ()

    def build(self) -> LevySpec:
        if self.name == "custom":
            if not self.density or not self.p:
                raise ConfigError("custom subordinators need a named density and a p list")
            if self.alpha is None:
                raise ConfigError("custom subordinators need alpha")
            if self.density == "truncated-stable":
                base = bernstein.truncated_stable(self.alpha, self.p[0], order=0)
            elif self.density in bernstein.CATALOG:
                base = bernstein.catalog(self.density, alpha=self._catalog_alpha(), c=self.c)
            else:
                raise ConfigError(f"unknown built-in density {self.density!r}; choose from "
                                  + ", ".join(bernstein.BUILTIN_DENSITIES))
            return bernstein.custom(self.alpha, self.p, base.density, self.treat_as_irrational,
                                    catalog_id=None, params=(("density", self.density),))
        if self.name == "truncated-stable":
            if self.alpha is None:
                raise ConfigError("truncated-stable needs alpha")
            return bernstein.truncated_stable(self.alpha)
        return bernstein.catalog(self.name, alpha=self.alpha, c=self.c, order=self.order,
                                 treat_as_irrational=self.treat_as_irrational)

    def _catalog_alpha(self):
        # the catalog alpha of shifted-power is the Bernstein parameter, 1 - order
        if self.density == "shifted-power":
            return 1 - self.alpha
        return self.alpha if self.density in ("relativistic", "gamma-ratio-2") else None


@dataclass(frozen=True)
class RunConfig:
    subordinator: SubordinatorConfig
    n: int = 2
    K: int = 4
    normalization: str = "direct"
    formats: tuple[str, ...] = ("json", "csv", "txt")
    out: str | None = None
    seed: int = 0
    threads: int = 1
    quad_tol: float = 1e-10
    # expand
    watson_N: int = 4
    lambda_grid: tuple[float, ...] = tuple(np.logspace(2, 6, 9))
    # zeta
    z_points: tuple[complex, ...] = (0, -1, -2)
    split_radius: float = 4.0
    # verify
    t_grid: tuple[float, ...] = tuple(np.logspace(-3, -1, 16))
    verify_tol: float = 1e-6
    # simulate
    suites: tuple[str, ...] = ("laplace", "bg", "arcsine")
    epsilon: float = 1e-4
    paths: int = 100_000
    lambdas: tuple[float, ...] = (1.0, 5.0, 10.0)
    times: tuple[float, ...] = (0.5, 1.0)
    betas: tuple[float, ...] = (3.0, 0.67)
    bg_epsilon: float = 1e-6
    bg_paths: int = 10_000
    bg_times: tuple[float, ...] = (1e-1, 1e-2, 1e-3, 1e-4)
    x_grid: tuple[float, ...] = (0.1, 0.03, 0.01)
    extra: dict = field(default_factory=dict)

    def with_overrides(self, **kw) -> "RunConfig":
        d = dict(self.__dict__)
        d.update({k: v for k, v in kw.items() if v is not None})
        return RunConfig(**d)

    def describe(self) -> dict:
        s = self.subordinator
        return {
            "subordinator": {
                "name": s.name,
                "alpha": None if s.alpha is None else str(s.alpha),
                "c": None if s.c is None else str(s.c),
                "treat_as_irrational": s.treat_as_irrational,
                "density": s.density,
                "p": list(s.p) if s.p else None,
            },
            "n": self.n,
            "K": self.K,
            "normalization": self.normalization,
            "seed": self.seed,
        }


def parse(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from exc
    if not cp.has_section("subordinator"):
        raise ConfigError("configuration has no [subordinator] section")
    sub = cp["subordinator"]
    name = sub.get("name", "").strip()
    if not name:
        raise ConfigError("[subordinator] name is required")
    if name not in bernstein.CATALOG + ("custom", "truncated-stable"):
        raise ConfigError(f"unknown subordinator {name!r}")
    scfg = SubordinatorConfig(
        name=name,
        alpha=as_rational(sub["alpha"]) if "alpha" in sub else None,
        c=as_rational(sub["c"]) if "c" in sub else None,
        order=sub.getint("order", bernstein.DEFAULT_ORDER),
        treat_as_irrational=_bool(sub.get("treat_as_irrational", "false")),
        density=sub.get("density"),
        p=_floats(sub["p"]) if "p" in sub else (),
    )
    kw: dict = {"subordinator": scfg}
    if cp.has_section("run"):
        r = cp["run"]
        if "n" in r:
            kw["n"] = r.getint("n")
        if "K" in r:
            kw["K"] = r.getint("K")
        if "normalization" in r:
            kw["normalization"] = r["normalization"].strip()
        if "formats" in r:
            kw["formats"] = parse_formats(r["formats"])
        if "out" in r:
            kw["out"] = r["out"].strip()
        if "seed" in r:
            kw["seed"] = r.getint("seed")
        if "threads" in r:
            kw["threads"] = r.getint("threads")
        if "quad_tol" in r:
            kw["quad_tol"] = r.getfloat("quad_tol")
    if cp.has_section("expand"):
        e = cp["expand"]
        if "N" in e:
            kw["watson_N"] = e.getint("N")
        if "lambda_grid" in e:
            kw["lambda_grid"] = _floats(e["lambda_grid"])
    if cp.has_section("zeta"):
        z = cp["zeta"]
        if "z" in z:
            kw["z_points"] = _complexes(z["z"])
        if "R" in z:
            kw["split_radius"] = z.getfloat("R")
    if cp.has_section("verify"):
        v = cp["verify"]
        if "t" in v:
            kw["t_grid"] = _floats(v["t"])
        elif any(k in v for k in ("t_min", "t_max", "t_count")):
            kw["t_grid"] = tuple(np.geomspace(v.getfloat("t_min", 1e-3), v.getfloat("t_max", 1e-1),
                                              v.getint("t_count", 16)))
        if "tol" in v:
            kw["verify_tol"] = v.getfloat("tol")
    if cp.has_section("simulate"):
        s = cp["simulate"]
        if "suites" in s:
            suites = tuple(x.strip() for x in s["suites"].split(",") if x.strip())
            bad = [x for x in suites if x not in SUITES]
            if bad:
                raise ConfigError(f"unknown simulation suites {bad}; choose from {', '.join(SUITES)}")
            kw["suites"] = suites
        for key, conv in (("epsilon", float), ("paths", int), ("bg_epsilon", float), ("bg_paths", int)):
            if key in s:
                try:
                    kw[key] = conv(s[key])
                except ValueError as exc:
                    raise ConfigError(f"[simulate] {key}: {exc}") from exc
        for key in ("lambdas", "times", "betas", "bg_times", "x_grid"):
            if key in s:
                kw[key] = _floats(s[key])
    cfg = RunConfig(**kw)
    check(cfg)
    return cfg


def parse_formats(text: str) -> tuple[str, ...]:
    fm = tuple(x.strip() for x in text.split(",") if x.strip())
    bad = [x for x in fm if x not in FORMATS]
    if bad or not fm:
        raise ConfigError(f"formats must be a subset of {', '.join(FORMATS)}")
    return fm


def check(cfg: RunConfig) -> None:
    if cfg.n < 1:
        raise ConfigError("n must be >= 1")
    if cfg.K < 0:
        raise ConfigError("K must be >= 0")
    if cfg.normalization not in ("direct", "paper"):
        raise ConfigError("normalization must be 'direct' or 'paper'")
    if any(not t > 0 for t in cfg.t_grid):
        raise ConfigError("t grid must be positive")
    if cfg.threads < 1:
        raise ConfigError("threads must be >= 1")


def load(path: str | Path) -> RunConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"configuration file {p} not found")
    return parse(p.read_text())
