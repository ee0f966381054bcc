"""Command-line entry point: ``vxneumann {norm,solve,poincare,verify}``.

Exit status: 0 success, 2 invalid input, 3 solver non-convergence,
4 verification failures.  Reports go to stdout (and ``<out>/report.json``);
errors are printed to stdout as ``{"error": ..., "type": ...}``.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Optional

import numpy as np

from .config import load_config, parse_config
from .errors import ConvergenceFailure, EstimationFailure, VxError
from .grid import gradient, write_field_csv
from .mweight import lq_norm
from .neumann import regularity_check, solve
from .poincare import estimate_C0, neumann_eigen_oracle
from .sobolev import write_pair_csv
from .verify import run_battery
from .vxnorm import luxemburg_norm, modular, weighted_norm

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_NONCONVERGED = 3
EXIT_VERIFY_FAILED = 4


def _clean(obj):
    """JSON-safe copy: non-finite floats become strings, numpy scalars become Python."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else ("inf" if x > 0 else "-inf" if x < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(report: dict, out: Optional[Path]) -> None:
    text = json.dumps(_clean(report), indent=2, sort_keys=True)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "report.json").write_text(text + "\n")
    print(text)


def _load(args):
    if args.config is None:
        return parse_config({"schema_version": 1,
                             "domain": {"extents": [[0, 1]], "resolution": [64]}}, args.tol)
    return load_config(args.config, args.tol)


def cmd_norm(args) -> int:
    cfg = _load(args)
    f, p, v = cfg.datum, cfg.exponent, cfg.weight
    report = {"command": "norm", "modular": modular(f, p), "luxemburg_norm": luxemburg_norm(f, p),
              "weighted_norm": weighted_norm(f, v, p),
              "p_minus": p.p_minus, "p_plus": p.p_plus,
              "infinite_cells": int(p.infinite.sum())}
    if not p.has_infinite:
        report["lq_norm_of_gradient"] = lq_norm(gradient(f), cfg.matrix, p)
    _emit(report, args.out)
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = _load(args)
    data = cfg.problem()
    try:
        rep = solve(data, cfg.solver)
    except ConvergenceFailure as exc:
        partial = exc.report.to_dict() if exc.report is not None else {}
        if args.out is not None and exc.report is not None:
            write_pair_csv(args.out, exc.report.solution)
        _emit({"command": "solve", "error": str(exc), "type": "ConvergenceFailure",
               "report": partial}, args.out)
        return EXIT_NONCONVERGED
    out = {"command": "solve", "report": rep.to_dict()}
    c0 = None
    if data.p.is_constant and data.p.p_minus == 2.0:
        c0 = neumann_eigen_oracle(data) if data.grid.size <= 4096 else None
    if c0 is None:
        c0 = estimate_C0(data, cfg.restarts, seed=args.seed).C0_lower
    out["C0"] = c0
    out["regularity"] = regularity_check(rep, data, c0)
    if args.out is not None:
        write_pair_csv(args.out, rep.solution)
    _emit(out, args.out)
    return EXIT_OK


def cmd_poincare(args) -> int:
    cfg = _load(args)
    data = cfg.problem()
    est = estimate_C0(data, cfg.restarts, seed=args.seed)
    out = {"command": "poincare", "estimate": est.to_dict()}
    if data.p.is_constant and data.p.p_minus == 2.0 and data.grid.size <= 4096:
        out["eigen_oracle"] = neumann_eigen_oracle(data)
    if args.out is not None:
        write_field_csv(Path(args.out) / "witness.csv", est.witness)
    _emit(out, args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    opts = {}
    if args.config is not None:
        opts = _load(args).verify
    instances = int(opts.get("instances", 200))
    k = float(args.holder_constant if args.holder_constant is not None
              else opts.get("holder_constant", 4.0))
    report = run_battery(args.seed, instances, k)
    report["command"] = "verify"
    _emit(report, args.out)
    return EXIT_OK if report["all_passed"] else EXIT_VERIFY_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vxneumann",
                                     description="Variable-exponent degenerate Neumann toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON run configuration")
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument("--out", type=Path, help="directory for report.json and CSV dumps")
    common.add_argument("--tol", type=float, help="override the weak-residual tolerance")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("norm", parents=[common], help="modular and norms of the configured fields")
    sub.add_parser("solve", parents=[common], help="solve the configured Neumann problem")
    sub.add_parser("poincare", parents=[common], help="estimate the Poincare constant")
    ver = sub.add_parser("verify", parents=[common], help="run the inequality battery")
    ver.add_argument("--holder-constant", type=float, default=None,
                     help="debug: Holder constant used by the battery (default 4)")
    return parser


COMMANDS = {"norm": cmd_norm, "solve": cmd_solve, "poincare": cmd_poincare, "verify": cmd_verify}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed < 0 or args.seed >= 2 ** 64:
        print(json.dumps({"error": "seed must be an unsigned 64-bit integer", "type": "ConfigurationError"}))
        return EXIT_INVALID
    try:
        return COMMANDS[args.command](args)
    except (VxError, ValueError) as exc:
        if isinstance(exc, EstimationFailure):
            code = EXIT_NONCONVERGED
        else:
            code = EXIT_INVALID
        print(json.dumps({"error": str(exc), "type": type(exc).__name__}, sort_keys=True))
        return code


if __name__ == "__main__":
    sys.exit(main())
