"""Command-line front end.

    refugelab {simulate|harvest|optimize|homogenize|verify} --config FILE
              [--out DIR] [--workers K] [--seed S]
"""

from __future__ import annotations

import argparse
import csv
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .config import Built, ConfigError, build_field, load_config
from .core import TrivialRegimeError, derive_coeffs, integrate, require_nontrivial
from .discretize import SolverError
from .dynamics import BlowUpError, simulate
from .harvest import REPORT_KEYS, compute_harvest, eta_L, eta_V_constant
from .homogenize import homogenization_sweep
from .optimize import OptConfig, multistart, projected_ascent
from .parallel import WORKERS_ENV, pmap, resolve_workers
from .spectral import lambda1
from .verify import run_suite

log = logging.getLogger("refugelab")

EXIT_FAIL, EXIT_CONFIG, EXIT_BLOWUP, EXIT_TRIVIAL = 1, 2, 3, 4


def _g(v) -> str:
    return format(float(v), ".17g")


def _write_record(path: Path, items: dict) -> None:
    with open(path, "w") as fh:
        for k, v in items.items():
            if isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, (float, np.floating)):
                v = _g(v)
            fh.write(f"{k}={v}\n")


def cmd_simulate(b: Built, out: Path, workers: int) -> int:
    s0, c = b.initial_state()
    st = b.cfg.stepper
    traj = simulate(s0, c, b.params, b.stepper, st.t_end)
    traj.to_csv(out / "trajectory.csv")
    eta = integrate(c.H * np.exp(-b.params.beta_VH * traj.J), b.grid)
    _write_record(out / "summary.txt", {
        "t_end": traj.final.t,
        "steps": len(traj.step_times) - 1,
        "eta": eta,
        "host_total": integrate(c.H, b.grid),
        "int_Vi": integrate(traj.J, b.grid),
        "max_clip": traj.max_clip,
    })
    print(f"simulated to t={traj.final.t:.6g}; eta(t_end)={eta:.10g}")
    return 0


def _harvest_row(R_value, b: Built):
    p, grid = b.params, b.grid
    reduced = b.cfg.harvest.reduced
    R = np.full(grid.n_cells, R_value)
    s0, c = b.initial_state(R, reduced=reduced)
    st = b.cfg.stepper
    rep = compute_harvest(s0, c, p, b.stepper, eps_tail=st.eps_tail, T_max=st.T_max)
    eL = eta_L(R, b.Vi0, grid, p) if p.m > 0 else math.nan
    V0 = float(np.mean(b.Vi0 + b.Vs0))
    try:
        eV = eta_V_constant(R_value, V0, p, grid.length)
    except ValueError:
        eV = math.nan
    return R_value, rep, eL, eV, lambda1(c, p)


def cmd_harvest(b: Built, out: Path, workers: int) -> int:
    from functools import partial
    rows = pmap(partial(_harvest_row, b=b), b.cfg.harvest.R_values, workers)
    with open(out / "harvest_scan.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["R", "eta", "eta_L", "eta_V", "lambda1"])
        for R, rep, eL, eV, lam in rows:
            w.writerow([_g(R), _g(rep.eta), _g(eL), _g(eV), _g(lam)])
    with open(out / "harvest_reports.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["R", *REPORT_KEYS])
        for R, rep, *_ in rows:
            w.writerow([_g(R), *rep.csv_row()])
    for R, rep, eL, *_ in rows:
        print(f"R={R:.4g} eta={rep.eta:.10g} eta_L={eL:.10g} converged={rep.converged}")
    return 0


def cmd_optimize(b: Built, out: Path, workers: int) -> int:
    p, grid = b.params, b.grid
    require_nontrivial(p)
    spec = b.cfg.optimize
    ocfg = OptConfig(max_iter=spec.max_iter, tol=spec.tol, mass=spec.mass)
    if spec.starts > 1:
        runs = multistart(b.Vi0, grid, p, ocfg, spec.starts, b.cfg.seed, workers)
        res = max(runs, key=lambda r: r.eta_L)
    else:
        R0 = b.R if spec.R0 is None else build_field(spec.R0, grid)
        res = projected_ascent(R0, b.Vi0, grid, p, ocfg)
    res.refuge_csv(out / "refuge_opt.csv")
    res.history_csv(out / "history.csv")
    _write_record(out / "summary.txt", {
        "eta_L": res.eta_L, "grad_norm": res.grad_norm, "iterations": res.iterations,
        "converged": res.converged, "mass": integrate(res.R_opt, grid),
        **{f"active_{k}": v for k, v in res.active.items()},
    })
    print(f"eta_L={res.eta_L:.12g} iterations={res.iterations} converged={res.converged}")
    return 0


def cmd_homogenize(b: Built, out: Path, workers: int) -> int:
    from .homogenize import averaged_coeffs
    from .dynamics import initial_state
    p, grid = b.params, b.grid
    hc = averaged_coeffs(b.R, p, grid)
    P0 = b.P0 if b.P0 is not None else grid.full(hc.rP_inf / p.s_P)
    s0 = initial_state(grid, b.Vi0, b.Vs0, P0, b.I0)
    st = b.cfg.stepper
    rep = homogenization_sweep(b.R, grid, s0, p, b.stepper, b.cfg.sweep.freqs,
                               eps_tail=st.eps_tail, T_max=st.T_max, workers=workers)
    rep.to_csv(out / "sweep.csv")
    for row in rep.rows():
        print(" ".join(row))
    return 0


def cmd_verify(b: Built, out: Path, workers: int) -> int:
    results = run_suite(b, log=print)
    failed = [r for r in results if r.passed is False]
    skipped = sum(r.passed is None for r in results)
    print(f"{len(results) - len(failed) - skipped} passed, {len(failed)} failed, {skipped} skipped")
    for r in failed:
        print(f"failing: {r.name} measured {r.value:.6g}", file=sys.stderr)
    return EXIT_FAIL if failed else 0


COMMANDS = {"simulate": cmd_simulate, "harvest": cmd_harvest, "optimize": cmd_optimize,
            "homogenize": cmd_homogenize, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="refugelab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=sorted(COMMANDS))
    ap.add_argument("--config", required=True, type=Path)
    ap.add_argument("--out", type=Path, default=Path("."))
    ap.add_argument("--workers", type=int, default=None,
                    help=f"worker processes (default: ${WORKERS_ENV} or 1)")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2 ** 64:
                raise ConfigError("--seed must be an unsigned 64-bit integer")
            cfg = cfg.model_copy(update={"seed": args.seed})
        workers = resolve_workers(args.workers if args.workers is not None else cfg.workers)
        b = Built(cfg, base=args.config.parent)
    except (ConfigError, ValueError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    args.out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](b, args.out, workers)
    except TrivialRegimeError as e:
        print(f"trivial regime: {e}", file=sys.stderr)
        return EXIT_TRIVIAL
    except (BlowUpError, SolverError) as e:
        print(f"solver failure: {e}", file=sys.stderr)
        return EXIT_BLOWUP


if __name__ == "__main__":
    sys.exit(main())
