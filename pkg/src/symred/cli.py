"""Command-line driver.

Subcommands: reduce, reconstruct, direct, compare, audit.
Exit codes: 0 success, 1 invalid input, 2 runtime failure, 3 check failed.
Set SYMRED_LOG=DEBUG|INFO|WARNING to control log verbosity.
"""
from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import time

import numpy as np

from . import lie
from .bundle import axiom_residuals
from .config import RunConfig, load_config
from .errors import InputError, SymredError
from .integrate import integrate_full, integrate_reduced
from .mechanical import diagnostics
from .reconstruction import horizontality_residual, reconstruct
from .reduction import invariance_audit
from .trajio import (read_reduced_csv, sidecar_path, write_full_csv, write_json,
                     write_reduced_csv)

log = logging.getLogger("symred")

EXIT_OK, EXIT_INPUT, EXIT_RUNTIME, EXIT_FAIL = 0, 1, 2, 3


def _setup_logging():
    level = os.environ.get("SYMRED_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def _load(args) -> RunConfig:
    rc = load_config(args.config)
    return rc.with_overrides(args.step, args.t_end, args.method)


def _run_info(rc: RunConfig) -> dict:
    cfg = rc.integrator
    return {"scenario": rc.scenario.name, "config": rc.source, "method": cfg.method,
            "step": cfg.effective_step, "n_steps": cfg.n_steps, "t_end": cfg.t_end}


def _out(args, rc, key, default):
    return args.out or rc.output.get(key) or default


def cmd_reduce(args) -> int:
    rc = _load(args)
    t0 = time.perf_counter()
    traj = integrate_reduced(rc.system, rc.initial.reduced(), rc.integrator)
    path = _out(args, rc, "reduced", "reduced.csv")
    write_reduced_csv(path, traj)
    diag = dict(_run_info(rc), **diagnostics(rc.scenario, traj),
                elapsed_s=time.perf_counter() - t0)
    write_json(sidecar_path(path), diag)
    log.info("wrote %d samples to %s", len(traj), path)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    rc = _load(args)
    sysm = rc.system
    src = args.reduced or rc.output.get("reduced")
    if not src:
        raise InputError("reconstruct needs a reduced trajectory (--reduced PATH)")
    traj = read_reduced_csv(src, sysm.base_dim, sysm.dim_algebra)
    method = rc.integrator.method if rc.integrator.method != "rk4" else "lie_rk4_corrected"
    res = reconstruct(sysm, traj, rc.initial, method=method)
    path = _out(args, rc, "full", "full.csv")
    write_full_csv(path, res.trajectory)
    diag = dict(_run_info(rc), reduced_input=str(src), max_drift=res.trajectory.max_drift)
    if len(traj) >= 5:
        diag["horizontality_residual"] = horizontality_residual(sysm.conn, traj.t, traj.x,
                                                                traj.v, res.lift)
    write_json(sidecar_path(path), diag)
    return EXIT_OK


def cmd_direct(args) -> int:
    rc = _load(args)
    traj = integrate_full(rc.system, rc.initial, rc.integrator)
    path = _out(args, rc, "full", "direct.csv")
    write_full_csv(path, traj)
    diag = dict(_run_info(rc), **diagnostics(rc.scenario, traj),
                max_drift=traj.max_drift, reprojections=traj.reprojections)
    write_json(sidecar_path(path), diag)
    return EXIT_OK


def _blocks(a, b) -> dict:
    out = {}
    for key in ("x", "v", "w", "g"):
        d = np.abs(getattr(a, key) - getattr(b, key)).reshape(len(a.t), -1)
        out[key] = {"max": float(d.max()), "rms": float(np.sqrt(np.mean(d ** 2)))}
    return out


def compare_pipelines(rc: RunConfig) -> dict:
    """Direct integration vs reduce-then-reconstruct, with step halving."""
    tol = rc.compare["tolerance"]
    cfg = rc.integrator
    method = cfg.method if cfg.method != "rk4" else "lie_rk4_corrected"
    rows = []
    for j in range(rc.compare["halvings"] + 1):
        c = cfg.with_step(cfg.effective_step / 2 ** j)
        direct = integrate_full(rc.system, rc.initial, c)
        red = integrate_reduced(rc.system, rc.initial.reduced(), c)
        staged = reconstruct(rc.system, red, rc.initial, method=method).trajectory
        blocks = _blocks(direct, staged)
        dev = max(b["max"] for b in blocks.values())
        row = {"step": c.effective_step, "max_deviation": dev, "blocks": blocks}
        if rows:
            prev = rows[-1]["max_deviation"]
            row["order"] = math.log2(prev / dev) if dev > 1e-11 and prev > dev else None
        rows.append(row)
    dev = rows[0]["max_deviation"]
    passed = tol > 0 and dev <= tol
    return {"tolerance": tol, "max_deviation": dev, "status": "PASS" if passed else "FAIL",
            "convergence": rows}


def cmd_compare(args) -> int:
    rc = _load(args)
    report = dict(_run_info(rc), **compare_pipelines(rc))
    path = _out(args, rc, "report", None)
    if path:
        write_json(path, report)
    print(json.dumps({k: report[k] for k in ("scenario", "max_deviation", "tolerance", "status")}))
    return EXIT_OK if report["status"] == "PASS" else EXIT_FAIL


def cmd_audit(args) -> int:
    rc = _load(args)
    rng = np.random.default_rng(args.seed)
    spec = rc.system.group
    structure = lie.check_structure(spec)
    axioms = axiom_residuals(rc.system.conn, rng, samples=50)
    shift = lie.exponential(spec, rng.normal(size=spec.dim_algebra))
    inv = invariance_audit(rc.system, rc.initial, shift, rc.integrator)
    checks = {
        "structure": max(structure.antisymmetry, structure.closure, structure.jacobi) <= 1e-10,
        "connection_axioms": max(axioms["fundamental"], axioms["equivariance"],
                                 axioms["horizontal"]) <= 1e-10,
        "frame_evolution": axioms["frame_evolution"] <= 1e-6,
        "invariance": inv.reduced_deviation <= 1e-8,
    }
    report = dict(_run_info(rc), seed=args.seed,
                  structure=dict(antisymmetry=structure.antisymmetry, closure=structure.closure,
                                 jacobi=structure.jacobi),
                  axioms=axioms, invariance=dict(reduced_deviation=inv.reduced_deviation,
                                                 equivariance_deviation=inv.equivariance_deviation),
                  checks=checks, status="PASS" if all(checks.values()) else "FAIL")
    if args.out:
        write_json(args.out, report)
    print(json.dumps({"scenario": report["scenario"], "checks": checks, "status": report["status"]}))
    return EXIT_OK if report["status"] == "PASS" else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="symred", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", required=True, help="scenario config (JSON)")
        p.add_argument("--out", help="output path")
        p.add_argument("--step", type=float, help="override integrator step")
        p.add_argument("--t-end", dest="t_end", type=float, help="override final time")
        p.add_argument("--method", help="override integrator method")
        p.add_argument("--seed", type=int, default=0, help="seed for randomized audits")
        p.set_defaults(func=fn)
        return p

    add("reduce", cmd_reduce, "integrate the reduced system and write a CSV")
    p = add("reconstruct", cmd_reconstruct, "rebuild the full trajectory from a reduced CSV")
    p.add_argument("--reduced", help="reduced trajectory CSV")
    add("direct", cmd_direct, "integrate the full system directly")
    add("compare", cmd_compare, "compare direct and staged pipelines")
    add("audit", cmd_audit, "structure, connection and invariance checks")
    return ap


def main(argv=None) -> int:
    _setup_logging()
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except SymredError as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
