"""Command line front end: ``sobolev-cp <subcommand> [options]``.

Exit status: 0 success, 1 invalid input, 2 non-convergence, 3 a verdict
failed.  JSON floats are written with ``repr`` (shortest round-trip form),
CSV floats with 17 significant digits.
"""

import argparse
import csv
import io
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import fem
from .analysis.levelsets import MIN_SAMPLES, level_set_table, verify_levelset_inequalities
from .analysis.payne_rayner import payne_rayner_report, saint_venant_check
from .analysis.reference import reference_for_domain
from .analysis.schwarz import schwarz_sweep
from .exceptions import (
    CgStalledError,
    FoldedMeshError,
    InsufficientRegularRowsError,
    InvalidInputError,
    NotConvergedError,
    PoleHitError,
    SweepTooSparseError,
)
from .geometry import Polygon, domain_from_json, map_from_json, mesh_domain
from .solver import SolverConfig, minimize_quotient
from .validation import check_exponent, check_positive

__all__ = ["main", "build_parser", "CONVERGENCE_CSV_COLUMNS", "EXIT_OK", "EXIT_INVALID",
           "EXIT_NOT_CONVERGED", "EXIT_VERDICT"]

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOT_CONVERGED = 2
EXIT_VERDICT = 3

CONVERGENCE_CSV_COLUMNS = ("h", "cp", "error", "observed_order")
ORDER_THRESHOLD = 1.5
ORDER_THRESHOLD_NONCONVEX = 1.0


class _Exit(Exception):
    def __init__(self, code, message=""):
        super().__init__(message)
        self.code = code


# ---------------------------------------------------------------------------
# input handling
# ---------------------------------------------------------------------------


def _load_json_arg(text):
    text = text.strip()
    if not text.startswith("{"):
        path = Path(text)
        if not path.is_file():
            raise InvalidInputError(f"domain file not found: {text}")
        text = path.read_text()
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"malformed domain JSON: {exc}") from None


def _parse_domain(text):
    return domain_from_json(_load_json_arg(text))


def _parse_map(text):
    """Accept a bare map object, or a domain object carrying a ``map`` field."""
    obj = _load_json_arg(text)
    if isinstance(obj, dict) and "map" in obj:
        obj = obj["map"]
    return map_from_json(obj)


def _solver_config(args):
    return SolverConfig(
        p=args.p,
        quotient_tol=args.quotient_tol,
        el_tol=args.el_tol,
        max_iter=args.max_iter,
        linear_tol=args.linear_tol,
    )


def _r_grid(args):
    if args.r_count < 4:
        raise InvalidInputError(f"--r-count must be >= 4, got {args.r_count}")
    if not 0.0 < args.r_min < args.r_max < 1.0:
        raise InvalidInputError("need 0 < --r-min < --r-max < 1")
    if args.r_spacing == "log":
        return np.geomspace(args.r_min, args.r_max, args.r_count)
    return np.linspace(args.r_min, args.r_max, args.r_count)


def _solve(mesh, config):
    """Run the minimizer; a non-converged result is returned, not raised."""
    try:
        return minimize_quotient(mesh, config)
    except NotConvergedError as exc:
        return exc.result


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _json_text(obj):
    return json.dumps(_finite(obj), indent=2, allow_nan=False) + "\n"


def _finite(obj):
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _row_csv(record):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(record))
    writer.writerow([_csv_cell(v) for v in record.values()])
    return buf.getvalue()


def _csv_cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    if isinstance(v, (list, tuple, dict)):
        return json.dumps(_finite(v))
    return str(v)


def _write(path, text):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _sibling(path, suffix):
    path = Path(path)
    return path.with_name(path.stem + suffix)


def _emit_record(args, record):
    """Single-record commands: the record as JSON, or as a one-row CSV."""
    _write(args.out, _row_csv(record) if args.format == "csv" else _json_text(record))


def _emit_table(args, table_csv, verdicts):
    """Table commands: with --out both the table and the verdict JSON are written.

    ``--format csv`` puts the table at ``--out`` and the verdicts next to it
    as ``<stem>.verdicts.json``; ``--format json`` puts the verdicts at
    ``--out`` and the table at ``<stem>.table.csv``.  Without ``--out`` only
    the document selected by ``--format`` goes to stdout.
    """
    verdict_text = _json_text(verdicts)
    if args.out is None:
        _write(None, table_csv if args.format == "csv" else verdict_text)
    elif args.format == "csv":
        _write(args.out, table_csv)
        _write(_sibling(args.out, ".verdicts.json"), verdict_text)
    else:
        _write(args.out, verdict_text)
        _write(_sibling(args.out, ".table.csv"), table_csv)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_solve(args):
    config = _solver_config(args)
    domain = _parse_domain(args.domain)
    mesh = mesh_domain(domain, args.h)
    result = _solve(mesh, config)
    _emit_record(args, result.to_dict())
    if args.dump_field:
        if args.out is None:
            raise InvalidInputError("--dump-field needs --out")
        _write(_sibling(args.out, ".field.csv"), fem.field_to_csv(result.phi))
    return EXIT_OK if result.converged else EXIT_NOT_CONVERGED


def cmd_schwarz(args):
    config = _solver_config(args)
    fmap = _parse_map(args.domain)
    grid = _r_grid(args)
    sweep = schwarz_sweep(
        fmap, config.p, grid, h=args.h, allow_large_r=args.allow_large_r,
        threads=args.threads, config=config,
    )
    _emit_table(args, sweep.to_csv(), sweep.verdicts())
    return EXIT_OK if sweep.passed else EXIT_VERDICT


def cmd_payne_rayner(args):
    config = _solver_config(args)
    mesh = mesh_domain(_parse_domain(args.domain), args.h)
    result = _solve(mesh, config)
    record = payne_rayner_report(result).to_dict()
    record["converged"] = result.converged
    if result.p == 1.0:
        record["saint_venant"] = saint_venant_check(result).to_dict()
    _emit_record(args, record)
    if not result.converged:
        return EXIT_NOT_CONVERGED
    return EXIT_OK if record["deficit"] >= -0.02 * record["rhs"] else EXIT_VERDICT


def cmd_levelsets(args):
    if args.samples < MIN_SAMPLES:
        raise InvalidInputError(f"--samples must be >= {MIN_SAMPLES}, got {args.samples}")
    config = _solver_config(args)
    mesh = mesh_domain(_parse_domain(args.domain), args.h)
    result = _solve(mesh, config)
    if not result.converged:
        raise _Exit(EXIT_NOT_CONVERGED, "solver did not converge")
    table = level_set_table(result, base_point=args.base_point, samples=args.samples)
    verdicts = verify_levelset_inequalities(table)
    record = {
        "p": table.p,
        "lambda": table.lam,
        "phi_max": table.phi_max,
        "base_point": list(table.base_point),
        "samples": args.samples,
        **verdicts.to_dict(),
    }
    _emit_table(args, table.to_csv(), record)
    return EXIT_OK if verdicts.passed else EXIT_VERDICT


def observed_orders(h, cp, reference=None):
    """Errors and pairwise observed orders for a refinement sequence.

    With ``reference=None`` the limit is estimated from the three finest
    levels by Aitken/Richardson extrapolation.  Returns
    ``(reference, kind, errors, orders)``; ``orders[0]`` is NaN.
    """
    h = np.asarray(h, dtype=float)
    cp = np.asarray(cp, dtype=float)
    kind = "closed_form"
    if reference is None:
        kind = "richardson"
        d1, d2 = cp[-3] - cp[-2], cp[-2] - cp[-1]
        ratio = h[-3] / h[-2]
        if d2 == 0.0 or d1 / d2 <= 1.0:
            reference = math.nan
        else:
            q = math.log(d1 / d2) / math.log(ratio)
            reference = cp[-1] - d2 / (ratio**q - 1.0)
    errors = np.abs(cp - reference)
    orders = np.full(len(h), math.nan)
    with np.errstate(divide="ignore", invalid="ignore"):
        orders[1:] = np.log(errors[:-1] / errors[1:]) / np.log(h[:-1] / h[1:])
    return float(reference), kind, errors, orders


def _is_nonconvex(domain):
    if not isinstance(domain, Polygon):
        return False
    v = np.asarray(domain.vertices)
    a = np.roll(v, -1, axis=0) - v
    b = np.roll(a, -1, axis=0)
    return bool(np.any(a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0] < 0))


def cmd_convergence(args):
    config = _solver_config(args)
    domain = _parse_domain(args.domain)
    hs = [args.h, args.h / 2.0, args.h / 4.0]
    cps = []
    for h in hs:
        result = _solve(mesh_domain(domain, h), config)
        if not result.converged:
            raise _Exit(EXIT_NOT_CONVERGED, f"solver did not converge at h = {h!r}")
        cps.append(result.cp)
    reference, kind, errors, orders = observed_orders(hs, cps, reference_for_domain(domain, config.p))
    threshold = ORDER_THRESHOLD_NONCONVEX if _is_nonconvex(domain) else ORDER_THRESHOLD
    order = float(orders[-1])
    passed = bool(math.isfinite(order) and order >= threshold)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CONVERGENCE_CSV_COLUMNS)
    for row in zip(hs, cps, errors, orders):
        writer.writerow([f"{float(v):.17g}" for v in row])
    summary = {
        "p": config.p,
        "reference": reference,
        "reference_kind": kind,
        "observed_order": order,
        "threshold": threshold,
        "passed": passed,
    }
    _emit_table(args, buf.getvalue(), summary)
    return EXIT_OK if passed else EXIT_VERDICT


COMMANDS = {
    "solve": (cmd_solve, "solve for C_p and the extremal function", "json"),
    "schwarz": (cmd_schwarz, "sweep C_p(f(rD)) over r and check monotonicity/convexity", "csv"),
    "payne-rayner": (cmd_payne_rayner, "reverse Hoelder inequality report", "json"),
    "levelsets": (cmd_levelsets, "superlevel-set table and inequality verdicts", "csv"),
    "convergence": (cmd_convergence, "refinement study at h, h/2, h/4", "csv"),
}


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _exponent(text):
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    return value


def _point(text):
    try:
        x, y = (float(s) for s in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected 'x,y', got {text!r}") from None
    return (x, y)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--domain", required=True, help="domain JSON, inline or a file path")
    common.add_argument("--p", type=_exponent, default=2.0, help="exponent p >= 1 (default 2)")
    common.add_argument("--h", type=float, default=0.02, help="target mesh size (default 0.02)")
    common.add_argument("--out", default=None, help="output path (default stdout)")
    common.add_argument("--format", choices=("json", "csv"), default=None)
    common.add_argument("--threads", type=int, default=os.cpu_count() or 1)
    common.add_argument("--dump-field", action="store_true", help="also write the nodal field CSV")
    common.add_argument("--allow-large-r", action="store_true", help="permit radii above 0.95")
    common.add_argument("--r-min", type=float, default=0.1)
    common.add_argument("--r-max", type=float, default=0.9)
    common.add_argument("--r-count", type=int, default=9)
    common.add_argument("--r-spacing", choices=("linear", "log"), default="linear")
    common.add_argument("--samples", type=int, default=64, help="level-set samples (>= 16)")
    common.add_argument("--base-point", type=_point, default=None, help="x,y for H1 (default centroid)")
    defaults = SolverConfig()
    common.add_argument("--quotient-tol", type=float, default=defaults.quotient_tol)
    common.add_argument("--el-tol", type=float, default=defaults.el_tol)
    common.add_argument("--max-iter", type=int, default=defaults.max_iter)
    common.add_argument("--linear-tol", type=float, default=defaults.linear_tol)

    parser = argparse.ArgumentParser(prog="sobolev-cp", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (func, help_text, fmt) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common], help=help_text)
        p.set_defaults(func=func, default_format=fmt)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse uses 2 for usage errors; those are invalid input here
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    if args.format is None:
        args.format = args.default_format
    try:
        check_exponent(args.p)
        check_positive(args.h, "h")
        if args.threads < 1:
            raise InvalidInputError("--threads must be >= 1")
        return args.func(args)
    except _Exit as exc:
        print(f"sobolev-cp: {exc}", file=sys.stderr)
        return exc.code
    except (InvalidInputError, PoleHitError, FoldedMeshError) as exc:
        print(f"sobolev-cp: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (NotConvergedError, CgStalledError, SweepTooSparseError) as exc:
        print(f"sobolev-cp: {exc}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except InsufficientRegularRowsError as exc:
        print(f"sobolev-cp: verdict unavailable: {exc}", file=sys.stderr)
        return EXIT_VERDICT
    except OSError as exc:
        print(f"sobolev-cp: error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
