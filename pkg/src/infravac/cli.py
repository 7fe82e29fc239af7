"""Command-line driver: ``infravac <subcommand> [--config PATH] [--out DIR] ...``.

Exit codes: 0 when every verdict passes, 1 when a check fails (the report
carries the evidence), 2 on configuration, cache or resource errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from . import cache as ivcache
from .config import CHECKS, RunConfig, defaults_toml, load_config
from .errors import (
    AlignmentError,
    CacheError,
    ConfigError,
    GroupError,
    NumericalError,
    ResourceError,
)
from .grid import SectorGrid, build_grid

SCHEMA_VERSION = 1

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become null."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, frozenset):
        return sorted(to_jsonable(v) for v in obj)
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, complex):
        return {"re": to_jsonable(obj.real), "im": to_jsonable(obj.imag)}
    return obj


def dumps(report: dict) -> str:
    return json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"


def write_csv(path: Path, rows: Sequence[dict]) -> None:
    if not rows:
        return
    cols = list(rows[0].keys())
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols)
        for row in rows:
            w.writerow([_csv_cell(row.get(c)) for c in cols])


def _csv_cell(v) -> str:
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, (list, tuple)):
        return " ".join(str(x) for x in v)
    return str(v)


class Context:
    """Per-invocation state: config, lazily built grids, collected series."""

    def __init__(self, cfg: RunConfig, refine: bool = False):
        self.cfg = cfg
        self.refine = refine
        self._grid: Optional[SectorGrid] = None
        self._refined: Optional[SectorGrid] = None
        self.series: Dict[str, List[dict]] = {}
        self.meta: Dict[str, object] = {}  # run-dependent facts kept out of the report

    @property
    def grid(self) -> SectorGrid:
        if self._grid is None:
            self._grid = build_grid(self.cfg.grid)
        return self._grid

    @property
    def refined(self) -> SectorGrid:
        if self._refined is None:
            self._refined = build_grid(self.cfg.grid.refined(self.cfg.refine))
        return self._refined

    @property
    def kappa(self) -> float:
        return self.cfg.kpr.kappa if self.cfg.kpr.kappa is not None else self.cfg.grid.kappa

    def tol(self, name: str) -> float:
        return self.cfg.tolerances[name]


# ---------------------------------------------------------------------------
# Subcommands: each returns (results, verdicts)


def cmd_grid_info(ctx: Context):
    from .locnorm import TRUNCATION_MASS_MAX, LocalizationOps

    g = ctx.grid
    res = {"diagnostics": g.diagnostics(), "truncation_mass": {}}
    for r in ctx.cfg.radii:
        res["truncation_mass"][str(r)] = LocalizationOps(g, r).truncation_mass()
    verdicts = {
        "roundtrip": g.diagnostics()["roundtrip_defect_max"] <= ctx.cfg.grid.tau_grid,
        "truncation": all(m <= TRUNCATION_MASS_MAX for m in res["truncation_mass"].values()),
    }
    if ctx.refine:
        d = ctx.refined.diagnostics()
        res["refined"] = d
        verdicts["roundtrip_refined"] = d["roundtrip_defect_max"] <= ctx.cfg.grid.tau_grid
    return res, verdicts


def _cache_path(ctx: Context, grid: SectorGrid, j: int) -> Path:
    return Path(ctx.cfg.cache) / f"T{j}_n{ctx.cfg.kpr.n}_{grid.fingerprint}.ivac"


def cmd_kpr_build(ctx: Context):
    from .kpr import KprMap, algebra_check

    grids = [ctx.grid] + ([ctx.refined] if ctx.refine else [])
    res, verdicts = {}, {}
    for tag, g in zip(("base", "refined"), grids):
        T = KprMap(g, ctx.cfg.kpr.n, ctx.kappa)
        alg = algebra_check(T)
        cache_info = {}
        exact = True
        for j in (1, 2):
            op = T.operator(j)
            path = _cache_path(ctx, g, j)
            reused = path.exists()
            if not reused:
                ivcache.save(path, op, g)
            cached = ivcache.load(path, g, op.label)
            cache_info[f"T{j}"] = path.name
            ctx.meta[f"cache_reused/{tag}/T{j}"] = reused
            exact &= all(np.array_equal(a, b) for a, b in zip(op.blocks, cached.blocks))
        res[tag] = {"algebra": alg, "cache": cache_info, "cache_bit_exact": exact}
        n = ctx.cfg.kpr.n
        verdicts[f"{tag}_T1T2"] = alg["T1T2_residual"] <= ctx.tol("algebra_tol")
        verdicts[f"{tag}_projectors"] = alg["projector_defect"] <= ctx.tol("projector_tol") and alg["ranks_ok"]
        verdicts[f"{tag}_band_norms"] = alg["band_norm_defect"] <= ctx.tol("analytic_tol")
        verdicts[f"{tag}_inf_spec"] = abs(alg["inf_spec_T1_sq"] - 1.0 / n**2) <= ctx.tol("algebra_tol")
        verdicts[f"{tag}_cache"] = bool(exact)
    return res, verdicts


def cmd_check_normality(ctx: Context):
    from .locnorm import check_normality

    res, verdicts = {}, {}
    grids = (ctx.grid, ctx.refined)
    for r in ctx.cfg.radii:
        rep = check_normality(
            ctx.cfg.grid, n=ctx.cfg.kpr.n, r=r, drift_tol=ctx.tol("drift_tol"), hs_drift_tol=ctx.tol("hs_drift_tol"),
            refine=ctx.cfg.refine, grids=grids,
        )
        res[str(r)] = rep.to_dict()
        for k, v in rep.verdicts.items():
            verdicts[f"r={r}:{k}"] = v
        ctx.series[f"trace_partials_r{r}"] = [
            {"N": N + 1, "partial_1": p1, "partial_2": p2}
            for N, (p1, p2) in enumerate(zip(rep.trace_partials[1], rep.trace_partials[2]))
        ]
    return res, verdicts


def cmd_check_smoothing(ctx: Context):
    from .bounds import check_smoothing

    res, verdicts = {}, {}
    for r in ctx.cfg.radii:
        rep = check_smoothing(
            ctx.cfg.grid, r=r, slope_tol=ctx.tol("slope_tol"), schur_tol=ctx.tol("schur_tol"),
            uniform_tol=ctx.tol("uniform_tol"), refine=ctx.cfg.refine, grid=ctx.grid,
        )
        d = rep.to_dict()
        ctx.series[f"smoothing_r{r}"] = d.pop("series")
        res[str(r)] = d
        for k, v in rep.verdicts.items():
            verdicts[f"r={r}:{k}"] = v
    return res, verdicts


def cmd_check_infravacuum(ctx: Context):
    from .symp import check_infravacuum

    # the prediction for ||T1 v||^2 concerns the full map, so every resolved band is damped
    res, verdicts = {}, {}
    for r in ctx.cfg.radii:
        out = check_infravacuum(
            ctx.grid, n=None, r=r, seed=ctx.cfg.seed, pairing_tol=ctx.tol("pairing_tol"),
            symplectic_tol=ctx.tol("symplectic_tol"), norm_rtol=ctx.tol("norm_rtol"),
        )
        ctx.series[f"ir_contrast_r{r}"] = out.pop("ir_rows")
        out.pop("passed")
        res[str(r)] = out
        for k, v in out["verdicts"].items():
            verdicts[f"r={r}:{k}"] = v
    return res, verdicts


def cmd_sectors_demo(ctx: Context):
    from . import sectors as sc

    groups = sc.catalog()
    if ctx.cfg.sectors.groups:
        unknown = set(ctx.cfg.sectors.groups) - set(groups)
        if unknown:
            raise ConfigError(f"unknown groups {sorted(unknown)}; available: {sorted(groups)}")
        groups = {k: groups[k] for k in ctx.cfg.sectors.groups}
    scan = sc.sufficiency_scan(ctx.cfg.sectors.n_instances, ctx.cfg.seed, groups)
    instances = scan.pop("instances")
    ctx.series["sectors_instances"] = [
        {k: (" ".join(map(str, v)) if isinstance(v, list) else v) for k, v in x.items()} for x in instances
    ]
    S3 = groups.get("S3") or sc.symmetric(3)
    A3 = next(H for H in S3.subgroups() if len(H) == 3)
    H2 = next(H for H in S3.subgroups() if len(H) == 2)
    act = sc.coset_action(S3, H2)
    examples = {
        "S3_coset_stabilizer": sorted(sc.stabilizer(act)),
        "S3_coset_subgroup": sorted(H2),
        "S3_normalizer_A3_A3": sorted(sc.relative_normalizer(S3, A3, A3)),
        "failure_witness": sc.find_failure_witness(S3),
    }
    res = {"scan": scan, "examples": examples}
    verdicts = {
        "no_counterexample": not scan["counterexamples"],
        "failure_recorded": scan["outside_failure_example"] is not None,
        "enough_instances": scan["n_instances"] >= 200 or ctx.cfg.sectors.n_instances < 200,
    }
    return res, verdicts


COMMANDS: Dict[str, Callable] = {
    "grid-info": cmd_grid_info,
    "kpr-build": cmd_kpr_build,
    "check-normality": cmd_check_normality,
    "check-smoothing": cmd_check_smoothing,
    "check-infravacuum": cmd_check_infravacuum,
    "sectors-demo": cmd_sectors_demo,
}


def run(command: str, cfg: RunConfig, refine: bool = False) -> tuple:
    """Execute ``command``; returns (exit code, report, run metadata, CSV series).

    The report depends only on config and seed; wall-clock timings and cache
    reuse go to the metadata so that reports stay byte-identical.
    """
    ctx = Context(cfg, refine=refine)
    names = [c for c in CHECKS if c in cfg.checks] if command == "all" else [command]
    results, verdicts, timing = {}, {}, {}
    for name in names:
        t0 = time.perf_counter()
        try:
            r, v = COMMANDS[name](ctx)
        except NumericalError as exc:
            r, v = {"error": f"{type(exc).__name__}: {exc}"}, {"numerics": False}
        timing[name] = time.perf_counter() - t0
        results[name] = r
        verdicts.update({f"{name}/{k}": bool(val) for k, val in v.items()} if command == "all" else {k: bool(val) for k, val in v.items()})
    report = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "command": command,
        "seed": cfg.seed,
        "config": cfg.echo(),
        "grid": ctx.grid.diagnostics() if ctx._grid is not None else None,
        "results": results if command == "all" else results[command],
        "verdicts": verdicts,
        "passed": all(verdicts.values()),
    }
    meta = {"timing_s": {k: round(v, 3) for k, v in timing.items()}, **ctx.meta}
    return (EXIT_OK if report["passed"] else EXIT_FAIL), report, meta, ctx.series


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="infravac", description="Numerical checks for KPR infravacuum maps.")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in list(COMMANDS) + ["all"]:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="TOML configuration file")
        sp.add_argument("--out", help="output directory (overrides [output] dir)")
        sp.add_argument("--cache", help="cache directory (overrides [output] cache)")
        sp.add_argument("--seed", type=int, help="RNG seed (overrides config)")
        sp.add_argument("--refine", action="store_true", help="also run the refined grid where optional")
        sp.add_argument("--json-only", action="store_true", help="write only the JSON report, print it to stdout")
    sub.add_parser("defaults", help="print the documented default configuration")
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "defaults":
        sys.stdout.write(defaults_toml())
        return EXIT_OK
    try:
        cfg = load_config(args.config)
        overrides = {}
        if args.out:
            overrides["output"] = args.out
        if args.cache:
            overrides["cache"] = args.cache
        if args.seed is not None:
            overrides["seed"] = args.seed
        cfg = replace(cfg, **overrides)
        out = Path(cfg.output)
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise ResourceError(f"cannot create output directory {out}: {exc}") from exc
        code, report, meta, series = run(args.command, cfg, refine=args.refine)
        stem = args.command
        text = dumps(report)
        try:
            (out / f"{stem}.json").write_text(text)
            (out / f"{stem}.meta.json").write_text(dumps(meta))
            if not args.json_only:
                for name, rows in series.items():
                    write_csv(out / f"{name}.csv", rows)
        except OSError as exc:
            raise ResourceError(f"cannot write reports to {out}: {exc}") from exc
    except (ConfigError, CacheError, ResourceError, AlignmentError, GroupError) as exc:
        sys.stderr.write(f"infravac: error: {type(exc).__name__}: {exc}\n")
        return EXIT_ERROR
    if args.json_only:
        sys.stdout.write(text)
    else:
        for k, v in report["verdicts"].items():
            sys.stdout.write(f"{'PASS' if v else 'FAIL'}  {k}\n")
        sys.stdout.write(f"{args.command}: {'passed' if report['passed'] else 'FAILED'} -> {out / (stem + '.json')}\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
