"""INI-style experiment configuration.

Example::

    [run]
    experiments = dtn, jets
    seed = 20240601
    out = results

    [dtn]
    gamma = 0.1, 0.25, 0.4
    kmag = 1, 2, 3

Every key must be known; all violations are collected before raising.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields

import numpy as np

from fraclap.fracparams import ParameterError, make_params

EXPERIMENTS = ("dtn", "iterated", "singular", "poisson", "jets", "qgamma", "sweep")

DESCRIPTIONS = {
    "dtn": "extension D-t-N vs |k|^(2 gamma) with mesh-refinement order",
    "iterated": "iterated D-t-N for gamma > 1; arbitrates the A_m convention",
    "singular": "singular-integral quadrature vs spectral multiplier (n = 1)",
    "poisson": "Poisson-kernel quadrature vs mode synthesis at height y0",
    "jets": "exact graded-series identities (E, rho*, curved D-t-N, trichotomy, ladder)",
    "qgamma": "P_gamma 1 = Q_gamma and Q_gamma = 0 on the hyperbolic model",
    "sweep": "downshift residuals and ladder constants over sampled gamma",
}


class ConfigError(ValueError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  " + "\n  ".join(self.problems))


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.split(",") if t.strip())


def _ints(text: str) -> tuple[int, ...]:
    return tuple(int(t) for t in text.split(",") if t.strip())


@dataclass(frozen=True)
class DtnConfig:
    gamma: tuple[float, ...] = (0.1, 0.25, 0.4)
    n: int = 2                    # the flat mode problem does not see n; 2 admits gamma < 1
    kmag: tuple[float, ...] = (1.0, 2.0, 3.0)
    nodes: tuple[int, ...] = (1024, 2048, 4096)
    far_field: float = 8.0
    grading: float = 0.0          # 0 selects max(2, 1/gamma0)
    q: int = 12
    rtol: float = 1e-3
    min_order: float = 1.0


@dataclass(frozen=True)
class IteratedConfig:
    gamma: tuple[float, ...] = (1.25,)
    n: int = 3
    kmag: tuple[float, ...] = (1.0, 2.0)
    nodes: tuple[int, ...] = (8192,)
    far_field: float = 8.0
    grading: float = 0.0
    q: int = 12
    rtol: float = 1e-2


@dataclass(frozen=True)
class SingularConfig:
    gamma: tuple[float, ...] = (0.5,)
    points: int = 512
    image_radius: int = 64
    width: float = 0.5
    rtol: float = 1e-2


@dataclass(frozen=True)
class PoissonConfig:
    gamma: tuple[float, ...] = (0.5,)
    y0: float = 0.1
    points: int = 512
    width: float = 0.15
    nodes: int = 4096
    rtol: float = 1e-2


@dataclass(frozen=True)
class JetsConfig:
    gamma: tuple[float, ...] = (0.3, 0.4)
    n: int = 3
    samples: int = 5
    atol: float = 1e-12


@dataclass(frozen=True)
class QgammaConfig:
    gamma: tuple[float, ...] = (0.3, 0.7, 1.25)
    n: int = 3
    samples: int = 5
    atol: float = 1e-12


@dataclass(frozen=True)
class SweepConfig:
    n: int = 7
    samples: int = 50
    kmag: float = 1.0
    nodes: int = 8192
    far_field: float = 20.0
    rtol: float = 1e-10
    downshift_tol: float = 1e-4


SECTIONS = {
    "dtn": DtnConfig,
    "iterated": IteratedConfig,
    "singular": SingularConfig,
    "poisson": PoissonConfig,
    "jets": JetsConfig,
    "qgamma": QgammaConfig,
    "sweep": SweepConfig,
}

_CONVERTERS = {
    "tuple[float, ...]": _floats,
    "tuple[int, ...]": _ints,
    "float": float,
    "int": int,
}


@dataclass(frozen=True)
class ExperimentConfig:
    experiments: tuple[str, ...] = ()
    seed: int = 0
    out: str = "results"
    settings: dict = field(default_factory=dict)

    def section(self, name: str):
        return self.settings.get(name, SECTIONS[name]())


def _check_domain(name: str, cfg, problems: list[str]) -> None:
    for f in fields(cfg):
        value = getattr(cfg, f.name)
        if (f.name in ("rtol", "atol", "downshift_tol") or f.name == "y0") and not value > 0:
            problems.append(f"[{name}] {f.name} must be positive, got {value}")
        if f.name in ("far_field", "width") and not value > 0:
            problems.append(f"[{name}] {f.name} must be positive, got {value}")
        if f.name == "grading" and value != 0 and value < 1:
            problems.append(f"[{name}] grading must be 0 (default) or >= 1, got {value}")
        if f.name in ("samples", "q", "image_radius") and value < 1:
            problems.append(f"[{name}] {f.name} must be >= 1, got {value}")
        if f.name == "nodes":
            for N in np.atleast_1d(value):
                if N < 16:
                    problems.append(f"[{name}] nodes must be >= 16, got {N}")
        if f.name == "points" and (value < 2 or value & (value - 1)):
            problems.append(f"[{name}] points must be a power of two, got {value}")
        if f.name == "kmag":
            for k in np.atleast_1d(value):
                if not k > 0:
                    problems.append(f"[{name}] kmag must be positive, got {k}")
    gammas = getattr(cfg, "gamma", ())
    n = getattr(cfg, "n", None)
    for g in gammas:
        if name in ("singular", "poisson"):
            if not 0 < g < 1:
                problems.append(f"[{name}] gamma={g} must lie in (0, 1)")
            continue
        try:
            make_params(n, g)
        except ParameterError as exc:
            problems.append(f"[{name}] {exc}")
    if name == "dtn" and any(g >= 1 for g in gammas):
        problems.append("[dtn] gamma must lie in (0, 1); use [iterated] for gamma > 1")
    if name == "iterated" and any(g < 1 for g in gammas):
        problems.append("[iterated] gamma must exceed 1")
    if name == "jets" and any(g >= 1 for g in gammas):
        problems.append("[jets] gamma must lie in (0, 1)")


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser(strict=True, interpolation=None,
                                       inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.DuplicateOptionError as exc:
        raise ConfigError([f"line {exc.lineno}: duplicate key {exc.option!r} in [{exc.section}]"])
    except configparser.DuplicateSectionError as exc:
        raise ConfigError([f"line {exc.lineno}: duplicate section [{exc.section}]"])
    except configparser.Error as exc:
        raise ConfigError([str(exc).splitlines()[0]])

    problems: list[str] = []
    experiments: tuple[str, ...] = ()
    seed, out = 0, "results"
    for section in parser.sections():
        if section != "run" and section not in SECTIONS:
            problems.append(f"unknown section [{section}]")
    if parser.has_section("run"):
        run = parser["run"]
        for key in run:
            if key not in ("experiments", "seed", "out"):
                problems.append(f"[run] unknown key {key!r}")
        experiments = tuple(t.strip() for t in run.get("experiments", "").split(",") if t.strip())
        for e in experiments:
            if e not in SECTIONS:
                problems.append(f"[run] unknown experiment {e!r}; choose from {', '.join(EXPERIMENTS)}")
        if len(set(experiments)) != len(experiments):
            problems.append("[run] experiment listed twice")
        try:
            seed = int(run.get("seed", "0"))
            if not 0 <= seed < 2**64:
                problems.append(f"[run] seed must be an unsigned 64-bit integer, got {seed}")
        except ValueError:
            problems.append(f"[run] seed must be an integer, got {run.get('seed')!r}")
        out = run.get("out", "results")

    settings = {}
    for name, cls in SECTIONS.items():
        if not parser.has_section(name):
            continue
        known = {f.name: f for f in fields(cls)}
        values = {}
        for key, raw in parser[name].items():
            if key not in known:
                problems.append(f"[{name}] unknown key {key!r}")
                continue
            try:
                values[key] = _CONVERTERS[str(known[key].type)](raw)
            except ValueError:
                problems.append(f"[{name}] {key} = {raw!r} is not a valid {known[key].type}")
        cfg = cls(**values)
        _check_domain(name, cfg, problems)
        settings[name] = cfg
    for e in experiments:
        if e in SECTIONS and e not in settings:
            _check_domain(e, SECTIONS[e](), problems)
    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(experiments, seed, out, settings)


def with_overrides(cfg: ExperimentConfig, *, out: str | None = None,
                   seed: int | None = None) -> ExperimentConfig:
    return ExperimentConfig(cfg.experiments, cfg.seed if seed is None else seed,
                            cfg.out if out is None else out, cfg.settings)

