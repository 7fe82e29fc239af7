"""Run configuration: TOML sections mapped onto dataclasses, with a defaults dump."""

from __future__ import annotations

import sys
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .errors import ConfigError
from .grid import GridConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

CHECKS = ("grid-info", "kpr-build", "check-normality", "check-smoothing", "check-infravacuum", "sectors-demo")

DEFAULT_TOLERANCES: Dict[str, float] = {
    "drift_tol": 0.02,
    "hs_drift_tol": 0.05,
    "slope_tol": 0.15,
    "schur_tol": 0.2,
    "uniform_tol": 0.2,
    "pairing_tol": 1e-8,
    "symplectic_tol": 1e-8,
    "norm_rtol": 0.01,
    "algebra_tol": 1e-10,
    "projector_tol": 1e-12,
    "analytic_tol": 1e-8,
}

TOLERANCE_DOCS = {
    "drift_tol": "relative drift allowed between grid resolutions (condition constants, trace totals)",
    "hs_drift_tol": "relative drift of the Hilbert-Schmidt difference between basis sizes",
    "slope_tol": "allowed deviation of smoothing-norm log-log slopes",
    "schur_tol": "allowed deviation of Schur constant slopes",
    "uniform_tol": "allowed excess of a sector prefactor over the ell = 0 prefactor",
    "pairing_tol": "infravacuum pairing residual",
    "symplectic_tol": "relative symplectic preservation defect",
    "norm_rtol": "relative tolerance on ||T1 v||^2",
    "algebra_tol": "residual of T1 T2 = I and of the spectral bottom of T1^2",
    "projector_tol": "projector defects of Q_i",
    "analytic_tol": "band norms against ln 2",
}


@dataclass
class KprSection:
    kappa: Optional[float] = None
    n: int = 8


@dataclass
class SectorsSection:
    n_instances: int = 300
    groups: List[str] = field(default_factory=list)


@dataclass
class RunConfig:
    grid: GridConfig = field(default_factory=GridConfig)
    kpr: KprSection = field(default_factory=KprSection)
    radii: Tuple[float, ...] = (1.0,)
    checks: Tuple[str, ...] = CHECKS
    tolerances: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    output: str = "out"
    cache: str = "cache"
    seed: int = 0
    refine: float = 1.5
    sectors: SectorsSection = field(default_factory=SectorsSection)

    def validate(self) -> None:
        self.grid.validate()
        unknown = set(self.tolerances) - set(DEFAULT_TOLERANCES)
        if unknown:
            raise ConfigError(f"unknown tolerances: {sorted(unknown)}")
        bad = set(self.checks) - set(CHECKS)
        if bad:
            raise ConfigError(f"unknown checks: {sorted(bad)}")
        if self.kpr.n < 1:
            raise ConfigError("kpr.n must be >= 1")
        if not self.radii:
            raise ConfigError("localization needs at least one radius")
        missing = [r for r in self.radii if r not in self.grid.radii]
        if missing:
            raise ConfigError(f"radii {missing} not served by grid.radii={list(self.grid.radii)}")
        if self.refine <= 1.0:
            raise ConfigError("refine factor must exceed 1")
        if self.sectors.n_instances < 1:
            raise ConfigError("sectors.n_instances must be >= 1")

    def echo(self) -> dict:
        d = asdict(self)
        d["grid"]["radii"] = list(self.grid.radii)
        d["radii"] = list(self.radii)
        d["checks"] = list(self.checks)
        return d


def _section(cls, data: dict, name: str):
    known = {f.name for f in fields(cls)}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"[{name}] unknown keys: {sorted(extra)}")
    return cls(**data)


def from_dict(data: dict) -> RunConfig:
    data = dict(data)
    known = {"grid", "kpr", "localization", "checks", "tolerances", "output", "seed", "refine", "sectors"}
    extra = set(data) - known
    if extra:
        raise ConfigError(f"unknown sections or keys: {sorted(extra)}")
    try:
        g = dict(data.get("grid", {}))
        loc = dict(data.get("localization", {}))
        radii = tuple(float(r) for r in loc.pop("radii", [1.0]))
        if loc:
            raise ConfigError(f"[localization] unknown keys: {sorted(loc)}")
        if "radii" not in g:
            g["radii"] = radii
        else:
            g["radii"] = tuple(float(r) for r in g["radii"])
        grid = _section(GridConfig, g, "grid")
        kpr = _section(KprSection, dict(data.get("kpr", {})), "kpr")
        chk = dict(data.get("checks", {}))
        enabled = tuple(chk.pop("enabled", CHECKS))
        if chk:
            raise ConfigError(f"[checks] unknown keys: {sorted(chk)}")
        tol = dict(DEFAULT_TOLERANCES)
        tol.update({k: float(v) for k, v in data.get("tolerances", {}).items()})
        out = dict(data.get("output", {}))
        output, cache = out.pop("dir", "out"), out.pop("cache", "cache")
        if out:
            raise ConfigError(f"[output] unknown keys: {sorted(out)}")
        sectors = _section(SectorsSection, dict(data.get("sectors", {})), "sectors")
        cfg = RunConfig(
            grid=grid, kpr=kpr, radii=radii, checks=enabled, tolerances=tol, output=str(output), cache=str(cache),
            seed=int(data.get("seed", 0)), refine=float(data.get("refine", 1.5)), sectors=sectors,
        )
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid configuration: {exc}") from exc
    cfg.validate()
    return cfg


def load_config(path: Optional[str]) -> RunConfig:
    if path is None:
        cfg = RunConfig()
        cfg.validate()
        return cfg
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return from_dict(data)


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, str):
        return f'"{v}"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    return repr(v)


def defaults_toml() -> str:
    """Documented TOML dump of every default."""
    cfg = RunConfig()
    lines = ["# infravac run configuration (all values shown are defaults)", "",
             "seed = 0  # RNG seed for randomized property checks",
             "refine = 1.5  # resolution factor of the second grid in two-resolution protocols", "", "[grid]"]
    for f in fields(GridConfig):
        lines.append(f"{f.name} = {_toml_value(getattr(cfg.grid, f.name))}")
    lines += ["", "[kpr]", "# kappa defaults to grid.kappa", f"n = {cfg.kpr.n}  # truncation of the KPR map",
              "", "[localization]", f"radii = {_toml_value(list(cfg.radii))}",
              "", "[checks]", f"enabled = {_toml_value(list(CHECKS))}", "", "[tolerances]"]
    for k, v in DEFAULT_TOLERANCES.items():
        lines.append(f"{k} = {v!r}  # {TOLERANCE_DOCS[k]}")
    lines += ["", "[output]", 'dir = "out"', 'cache = "cache"',
              "", "[sectors]", f"n_instances = {cfg.sectors.n_instances}", "groups = []  # empty: the built-in catalog", ""]
    return "\n".join(lines)
