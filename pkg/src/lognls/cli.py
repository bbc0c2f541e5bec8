"""Batch front door: config parsing, orchestration, artifact emission.

Subcommands:
  solve   run the multiplicity pipeline from a JSON config, write levels.csv,
          report.json and per-well field dumps
  verify  run the identity/oracle suite, print a pass/fail table
  sweep   run solve across a decreasing list of eps values, write sweep.csv

Exit codes: 0 success, 1 numerical/audit failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import verify as verify_mod
from .energy import (
    DELTA_DEFAULT,
    DELTA_MAX,
    EnergyParams,
    energy,
    f2_growth_check,
    gradient,
    nehari_scale,
)
from .errors import ConfigError, LogNLSError
from .grid import build_grid, conforming_radius, save_field
from .potential import PotentialSpec, WellGeometry, make_multiwell, validate
from .solver import (
    SolverConfig,
    StepRule,
    gausson,
    ground_level,
    rescale_to_original,
    solve_multiplicity,
)

__all__ = ["RunConfig", "load_config", "cmd_solve", "cmd_verify", "cmd_sweep", "main"]


@dataclass
class RunConfig:
    dim: int
    eps: float
    potential: PotentialSpec
    solver: SolverConfig
    out_dir: Path
    dump_fields: bool
    dump_history: bool
    verbosity: int
    rng_seed: int


def _need(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"{where}.{key}: missing required key")
    return section[key]


def load_config(path, out_override=None, seed_override=None) -> RunConfig:
    """Parse and validate a JSON run configuration.

    Raises ConfigError with a field-precise message on any violation.
    """
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc

    problem = _need(raw, "problem", "config")
    numerics = _need(raw, "numerics", "config")
    solver = raw.get("solver", {})
    outputs = raw.get("outputs", {})

    dim = int(_need(problem, "dim", "problem"))
    if dim not in (1, 2):
        raise ConfigError(f"problem.dim: must be 1 or 2, got {dim}")
    eps = float(_need(problem, "eps", "problem"))
    if eps <= 0.0:
        raise ConfigError(f"problem.eps: must be positive, got {eps}")

    wells = _need(problem, "wells", "problem")
    try:
        spec = make_multiwell(
            wells,
            float(_need(problem, "v_inf", "problem")),
            float(_need(problem, "width", "problem")),
        )
    except LogNLSError as exc:
        raise ConfigError(f"problem.wells/v_inf/width: {exc}") from exc
    if spec.dim != dim:
        raise ConfigError(
            f"problem.wells: centers are {spec.dim}d but problem.dim = {dim}"
        )

    h = float(_need(numerics, "h", "numerics"))
    if h <= 0.0:
        raise ConfigError(f"numerics.h: must be positive, got {h}")
    schedule = _need(numerics, "R_schedule", "numerics")
    if not isinstance(schedule, list) or not schedule:
        raise ConfigError("numerics.R_schedule: must be a nonempty list")
    delta = float(numerics.get("delta", DELTA_DEFAULT))
    if not (0.0 < delta <= DELTA_MAX):
        raise ConfigError(
            f"numerics.delta: must lie in (0, e^(-3/2) ~ {DELTA_MAX:.5f}], got {delta}"
        )
    p = float(numerics.get("p", 3.0))
    if p <= 2.0:
        raise ConfigError(f"numerics.p: must exceed 2, got {p}")

    step = StepRule(
        initial=float(solver.get("step_init", 1.0)),
        backtrack=float(solver.get("backtrack", 0.5)),
    )
    if not (0.0 < step.backtrack < 1.0):
        raise ConfigError(f"solver.backtrack: must lie in (0,1), got {step.backtrack}")
    gamma = solver.get("gamma")
    localization = None
    if "rho0" in solver or "R0" in solver:
        try:
            localization = WellGeometry(
                rho0=float(_need(solver, "rho0", "solver")),
                R0=float(_need(solver, "R0", "solver")),
            )
        except LogNLSError as exc:
            raise ConfigError(f"solver.rho0/R0: {exc}") from exc
    seed = int(raw.get("rng_seed", 0)) if seed_override is None else int(seed_override)

    try:
        solver_cfg = SolverConfig(
            h=h,
            R_schedule=tuple(float(r) for r in schedule),
            grad_tol=float(solver.get("grad_tol", 1e-8)),
            nehari_tol=float(solver.get("nehari_tol", 1e-10)),
            max_iters=int(solver.get("max_iters", 5000)),
            step_rule=step,
            gamma=None if gamma is None else float(gamma),
            localization=localization,
            delta=delta,
            p=p,
            precondition=str(solver.get("precondition", "h1")),
            probes=int(solver.get("probes", 50)),
            probe_seed=seed,
        )
    except LogNLSError as exc:
        raise ConfigError(f"solver: {exc}") from exc
    if solver_cfg.grad_tol <= 0 or solver_cfg.nehari_tol <= 0:
        raise ConfigError("solver.grad_tol/nehari_tol: must be positive")
    if solver_cfg.precondition not in ("h1", "none"):
        raise ConfigError(
            f"solver.precondition: must be 'h1' or 'none', got {solver_cfg.precondition!r}"
        )

    out_dir = Path(out_override) if out_override else Path(outputs.get("out_dir", "out"))
    return RunConfig(
        dim=dim,
        eps=eps,
        potential=spec,
        solver=solver_cfg,
        out_dir=out_dir,
        dump_fields=bool(outputs.get("dump_fields", True)),
        dump_history=bool(outputs.get("dump_history", False)),
        verbosity=int(outputs.get("verbosity", 1)),
        rng_seed=seed,
    )


def _fmt(x) -> str:
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _write_levels(path, outcome, spec):
    qcols = [f"q{ax}" for ax in "xy"[: spec.dim]]
    header = ["well", "status", "level", *qcols, "dist_to_well",
              "nehari_res", "grad_norm", "weak_res", "R_final", "iterations"]
    rows = []
    for r in outcome.results:
        z = spec.wells[r.well_index]
        dist = float(np.linalg.norm(r.barycenter - z))
        rows.append([
            r.well_index + 1, r.status.value, r.level,
            *[float(c) for c in r.barycenter], dist,
            r.nehari_res, r.grad_norm, r.weak_res, r.R_final, r.iterations,
        ])
    for f in outcome.failures:
        rows.append([f.well_index + 1, f"failed:{f.error}"]
                    + [""] * (len(header) - 2))
    rows.sort(key=lambda row: row[0])
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _write_history(path, result):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        dim = result.grid.dim
        w.writerow(["iter", "J", "nehari_res", "grad_norm",
                    *[f"q{ax}" for ax in "xy"[:dim]], "step"])
        for row in result.history:
            w.writerow([row.iteration, _fmt(row.level), _fmt(row.nehari_res),
                        _fmt(row.grad_norm), *[_fmt(c) for c in row.barycenter],
                        _fmt(row.step)])


def cmd_solve(args) -> int:
    try:
        cfg = load_config(args.config, out_override=args.out, seed_override=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.verbose:
        cfg.verbosity = max(cfg.verbosity, 2)

    g_probe = build_grid(cfg.dim, conforming_radius(
        max(cfg.solver.R_schedule[0], 10.0), cfg.solver.h), cfg.solver.h)
    pot_report = validate(cfg.potential, g_probe, cfg.solver.localization)
    if not pot_report.passed and cfg.verbosity:
        print(f"warning: potential validation flags: {pot_report}")

    try:
        outcome = solve_multiplicity(
            cfg.eps, cfg.potential, cfg.solver, jobs=args.jobs
        )
    except LogNLSError as exc:
        print(f"solve failed outright: {exc}", file=sys.stderr)
        return 1

    report = verify_mod.audit(outcome.results, outcome)

    out = cfg.out_dir
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.json").write_text(report.to_json())
    if outcome.results or outcome.failures:
        _write_levels(out / "levels.csv", outcome, cfg.potential)
    if cfg.dump_fields:
        fields = out / "fields"
        fields.mkdir(exist_ok=True)
        for r in outcome.results:
            save_field(fields / f"u_well{r.well_index + 1}.csv", r.grid, r.u)
            g_orig, v = rescale_to_original(r, cfg.eps)
            save_field(fields / f"v_well{r.well_index + 1}.csv", g_orig, v)
            if cfg.dump_history:
                _write_history(fields / f"history_well{r.well_index + 1}.csv", r)

    ok = outcome.all_converged and report.status == 0
    if cfg.verbosity:
        print(f"c0 = {outcome.c0!r}  c_inf = {outcome.c_inf!r}  gamma = {outcome.gamma!r}")
        for r in outcome.results:
            print(f"well {r.well_index + 1}: {r.status.value}  level = {r.level!r}  "
                  f"Q = {[float(c) for c in r.barycenter]}  R_final = {r.R_final}")
        for f in outcome.failures:
            print(f"well {f.well_index + 1}: FAILED {f.error}: {f.message}")
        print(f"audit status: {report.status}  -> wrote {out}")
    return 0 if ok else 1


def _check(name, ok, margin, verbose, lines):
    lines.append((name, bool(ok), margin))
    if verbose:
        print(f"  {'PASS' if ok else 'FAIL'}  {name}  ({margin})")


def cmd_verify(args) -> int:
    """Identity suite plus the Gausson and level-gap oracles; exit 0 iff all pass."""
    t_start = time.perf_counter()
    verbose = args.verbose
    lines = []
    delta, p = DELTA_DEFAULT, 3.0

    g = build_grid(1, 10.0, 0.05)
    ids = verify_mod.identity_suite(delta, p, g, seed=args.seed, fields=100)
    for name, entry in ids.items():
        margin = ", ".join(
            f"{k}={v}" for k, v in entry.items() if k not in ("pass", "total")
        )
        _check(f"identity:{name} [{entry['pass']}/{entry['total']}]",
               entry["pass"] == entry["total"], margin, verbose, lines)

    gf = build_grid(1, 10.0, 0.01)
    params = EnergyParams(eps=1.0, potential=1.0, delta=delta, p=p)
    ug = gausson(gf, 1.0)
    grad_sup = float(np.abs(gradient(ug, params, gf)).max())
    _check("gausson: interior gradient sup <= 1e-3", grad_sup <= 1e-3,
           f"sup={grad_sup:.3e}", verbose, lines)
    sstar = nehari_scale(ug, params, gf)
    _check("gausson: nehari scale within 1e-3 of 1", abs(sstar - 1.0) <= 1e-3,
           f"s*={sstar!r}", verbose, lines)
    lvl = energy(ug, params, gf).total
    target = 0.5 * math.e**2 * math.sqrt(math.pi)
    _check("gausson: level within 0.5% of e^2 sqrt(pi)/2",
           abs(lvl - target) <= 5e-3 * target, f"level={lvl!r}", verbose, lines)

    wr = verify_mod.weak_residual(ug, 1.0, params, gf, probes=50, seed=args.seed)
    _check("gausson: weak residual <= 1e-3", wr <= 1e-3, f"res={wr:.3e}", verbose, lines)

    cfg = SolverConfig(h=0.01, R_schedule=(10.0,), delta=delta, p=p)
    c0 = ground_level(1.0, gf, cfg)
    c_inf = ground_level(2.0, gf, cfg)
    t1 = 0.5 * math.e**2 * math.sqrt(math.pi)
    t2 = 0.5 * math.e**3 * math.sqrt(math.pi)
    _check("levels: c0 within 0.5%", abs(c0 - t1) <= 5e-3 * t1, f"c0={c0!r}", verbose, lines)
    _check("levels: c_inf(2) within 0.5%", abs(c_inf - t2) <= 5e-3 * t2,
           f"c_inf={c_inf!r}", verbose, lines)
    _check("levels: c0 < c_inf", c0 < c_inf, f"gap={c_inf - c0!r}", verbose, lines)

    grow = f2_growth_check(params, np.geomspace(delta / 10, 1e3, 2001), p=2.0)
    _check("growth: p=2 flagged non-uniform", not grow.uniform,
           f"C={grow.c:.3e}", verbose, lines)

    elapsed = time.perf_counter() - t_start
    failed = [name for name, ok, _ in lines if not ok]
    print(f"verify: {len(lines) - len(failed)}/{len(lines)} checks passed "
          f"in {elapsed:.1f}s")
    if not verbose:
        for name, ok, margin in lines:
            print(f"  {'PASS' if ok else 'FAIL'}  {name}")
    if failed:
        print("failed checks:", ", ".join(failed), file=sys.stderr)
        return 1
    return 0


def cmd_sweep(args) -> int:
    if not args.eps:
        print("sweep: empty eps list", file=sys.stderr)
        return 2
    eps_list = list(args.eps)
    if any(b >= a for a, b in zip(eps_list, eps_list[1:])):
        print("sweep: eps list must be strictly decreasing", file=sys.stderr)
        return 2
    try:
        cfg = load_config(args.config, out_override=args.out, seed_override=args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    cfg.out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    worst = 0
    onset = None
    for eps in eps_list:
        try:
            outcome = solve_multiplicity(eps, cfg.potential, cfg.solver, jobs=args.jobs)
        except LogNLSError as exc:
            print(f"eps={eps}: solve failed: {exc}", file=sys.stderr)
            worst = max(worst, 1)
            continue
        all_ok = outcome.all_converged
        if all_ok and onset is None:
            onset = eps
        if not all_ok:
            worst = max(worst, 1)
            onset = None
        for r in outcome.results:
            z = cfg.potential.wells[r.well_index]
            rows.append([eps, r.well_index + 1, r.level,
                         float(np.linalg.norm(r.barycenter - z)), r.status.value])
        for f in outcome.failures:
            rows.append([eps, f.well_index + 1, "", "", f"failed:{f.error}"])
        if cfg.verbosity:
            print(f"eps={eps}: {'all converged' if all_ok else 'failures present'}")

    with open(cfg.out_dir / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["eps", "well", "level", "dist_to_well", "status"])
        for row in rows:
            w.writerow([_fmt(v) for v in row])
    if onset is not None and cfg.verbosity:
        print(f"localization onset: all wells converged from eps = {onset}")
    print(f"wrote {cfg.out_dir / 'sweep.csv'}")
    return worst


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="lognls",
        description="Multiple positive solutions of the logarithmic "
        "Schrodinger equation by localized Nehari minimization.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the multiplicity pipeline")
    p_solve.add_argument("--config", required=True)
    p_solve.add_argument("--jobs", type=int, default=1)
    p_solve.add_argument("--out", default=None)
    p_solve.add_argument("--seed", type=int, default=None)
    p_solve.add_argument("--verbose", action="store_true")
    p_solve.set_defaults(func=cmd_solve)

    p_verify = sub.add_parser("verify", help="run the identity/oracle suite")
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--verbose", action="store_true")
    p_verify.set_defaults(func=cmd_verify)

    p_sweep = sub.add_parser("sweep", help="solve across a list of eps values")
    p_sweep.add_argument("--config", required=True)
    p_sweep.add_argument("--eps", type=float, nargs="*", default=[])
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--verbose", action="store_true")
    p_sweep.set_defaults(func=cmd_sweep)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
