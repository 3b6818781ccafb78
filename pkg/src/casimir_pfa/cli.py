"""Command-line interface: figure datasets and validation runs.

Exit codes: 0 success, 1 validation or comparison failure, 2 configuration
error, 3 numerical non-convergence.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from . import __version__, thermo, validation, zerofreq
from .core import ConfigurationError, DomainError, NumericError

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3

COMMANDS = ("fig2", "fig3", "delta", "entropy", "zerofreq", "spa-demo", "validate")
QUARTIC_ALPHA = 0.1

_DEFAULT_GRIDS = {
    "fig2": ("x", 5e-3, 0.2, 6),
    "zerofreq": ("x", 5e-3, 0.2, 6),
    "fig3": ("tau", 1e-2, 0.3, 12),
    "entropy": ("tau", 5e-2, 0.2, 4),
    "spa-demo": ("R", 10.0, 80.0, 4),
}

_COLUMNS = {
    "fig2": ("x", "f0_te_exact_per_kBT", "f0_te_asympt_per_kBT", "difference"),
    "zerofreq": ("x", "f0_te_exact_per_kBT", "rel_change", "f0_te_asympt_per_kBT",
                 "f0_tm_asympt_per_kBT", "f0_total_asympt_per_kBT"),
    "fig3": ("tau", "delta_formula", "delta_assembled", "delta_n_positive"),
    "delta": ("x", "tau", "delta_formula", "delta_assembled", "delta_n_positive",
              "beyond_pfa_ratio"),
    "entropy": ("tau", "entropy_ntlo_per_kB", "entropy_fd_per_kB"),
    "spa-demo": ("R", "gamma_bracket", "gamma_quad_over_lo", "gamma_residual_R2",
                 "quartic_bracket", "quartic_quad_over_lo"),
}

_NOTES = {
    "fig2": ["zero-frequency TE free energy per k_BT with the full n=0 weight (unhalved)",
             "difference = exact - asymptotic"],
    "zerofreq": ["zero-frequency free energies per k_BT with the full n=0 weight (unhalved)"],
    "fig3": ["relative thermal correction beyond PFA; the n=0 term enters with weight 1/2",
             "analytic curves only: no exact finite-frequency data points are produced"],
    "delta": ["relative thermal correction beyond PFA; the n=0 term enters with weight 1/2"],
    "entropy": ["NTLO entropy per k_B; fd column is -dF/dT of the assembled NTLO free energy"],
    "spa-demo": ["Gamma family exp(-R(t - log t)); quartic family exp(-R(t^2/2 + alpha t^4)), "
                 f"alpha={QUARTIC_ALPHA}",
                 "gamma_residual_R2 = R^2 |quad/lo - 1 - bracket/R|"],
}


@dataclass(frozen=True)
class RunSpec:
    """Everything that determines the content of an output file."""

    command: str
    grid_name: str | None = None
    grid: tuple = ()
    x: float | None = None
    tau: float | None = None
    n_nodes: int | None = None
    m_max: int | None = None
    rtol: float = 1e-6
    format: str = "csv"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ConfigurationError(f"command: unknown command {self.command!r}")
        if not 1e-14 <= self.rtol <= 1e-6:
            raise ConfigurationError(f"rtol: must lie in [1e-14, 1e-6], got {self.rtol!r}")
        if self.format not in ("csv", "json"):
            raise ConfigurationError(f"format: must be csv or json, got {self.format!r}")

    def header(self) -> dict:
        d = asdict(self)
        d["grid"] = list(self.grid)
        return d


def log_grid(lo: float, hi: float, points: int) -> tuple:
    if not (lo > 0 and hi > 0):
        raise ConfigurationError("grid: bounds must be positive")
    if not lo < hi:
        raise ConfigurationError(f"grid: min must be below max, got {lo} >= {hi}")
    if points < 2:
        raise ConfigurationError(f"grid: need at least 2 points, got {points}")
    return tuple(float(f"{v:.15g}") for v in np.logspace(math.log10(lo), math.log10(hi), points))


# --- row workers (module level so they pickle) -----------------------------------

def _nystrom_cfg(spec: RunSpec):
    return zerofreq.NystromConfig(n_nodes=spec.n_nodes, m_max=spec.m_max, rel_tol=spec.rtol)


def _row_fig2(spec, x):
    asym = zerofreq.f0_te_asympt(x)
    ex = zerofreq.f0_te_exact(x, _nystrom_cfg(spec)).value
    return (x, ex, asym, ex - asym)


def _row_zerofreq(spec, x):
    res = zerofreq.f0_te_exact(x, _nystrom_cfg(spec))
    return (x, res.value, res.rel_change, zerofreq.f0_te_asympt(x), zerofreq.f0_tm_asympt(x),
            zerofreq.f0_total_asympt(x))


def _row_fig3(spec, tau):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", thermo.OutsideRegimeWarning)
        d = thermo.delta(spec.x, tau, "assembled")
    return (tau, d.delta_formula, d.delta_assembled, d.delta_n_positive)


def _row_delta(spec, _):
    d = thermo.delta(spec.x, spec.tau, "assembled")
    return (spec.x, spec.tau, d.delta_formula, d.delta_assembled, d.delta_n_positive,
            thermo.beyond_pfa_ratio(spec.x, spec.tau))


def _row_entropy(spec, tau):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", thermo.OutsideRegimeWarning)
        return (tau, thermo.entropy_ntlo(spec.x, tau), thermo.entropy_fd(spec.x, tau))


def _row_spa(spec, R):
    lo, br, quad = validation.gamma_family(R)
    qlo, qbr, qquad = validation.quartic_family(R, QUARTIC_ALPHA)
    return (R, br, quad / lo, R * R * abs(quad / lo - 1.0 - br / R), qbr, qquad / qlo)


_ROWS = {"fig2": _row_fig2, "zerofreq": _row_zerofreq, "fig3": _row_fig3,
         "delta": _row_delta, "entropy": _row_entropy, "spa-demo": _row_spa}


def _guarded(args):
    spec, value = args
    try:
        return _ROWS[spec.command](spec, value), None
    except NumericError as exc:
        return None, f"{type(exc).__name__}: {exc}"


def compute_rows(spec: RunSpec, workers: int = 1):
    """Rows in grid order plus a list of ``(index, message)`` for flagged points."""
    values = spec.grid if spec.grid else (None,)
    jobs = [(spec, v) for v in values]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_guarded, jobs))
    else:
        results = [_guarded(j) for j in jobs]
    ncol = len(_COLUMNS[spec.command])
    rows, flags = [], []
    for i, (row, err) in enumerate(results):
        if err is not None:
            first = values[i] if values[i] is not None else math.nan
            row = (first,) + (math.nan,) * (ncol - 1)
            flags.append((i, err))
        rows.append(tuple(float(v) for v in row))
    return rows, flags


# --- serialization -------------------------------------------------------------------

def _fmt(v: float) -> str:
    return repr(float(v))


def render(spec: RunSpec, rows, flags) -> str:
    cols = _COLUMNS[spec.command]
    if spec.format == "json":
        doc = {
            "version": __version__,
            "run": spec.header(),
            "conventions": _NOTES[spec.command],
            "columns": list(cols),
            "rows": [[v if math.isfinite(v) else None for v in r] for r in rows],
            "flagged": [{"row": i, "error": msg} for i, msg in flags],
        }
        return json.dumps(doc, indent=1) + "\n"
    lines = [f"# casimir-pfa {__version__}",
             "# run: " + json.dumps(spec.header(), sort_keys=True)]
    lines += [f"# convention: {n}" for n in _NOTES[spec.command]]
    lines.append("# " + ",".join(cols))
    lines += [",".join(_fmt(v) for v in r) for r in rows]
    lines += [f"# flagged row {i}: {msg}" for i, msg in flags]
    return "\n".join(lines) + "\n"


def read_table(path: str):
    """Columns and rows of a file written by :func:`render` (CSV or JSON)."""
    with open(path) as fh:
        text = fh.read()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        rows = [[math.nan if v is None else float(v) for v in r] for r in doc["rows"]]
        return list(doc["columns"]), rows
    cols, rows = None, []
    for line in text.splitlines():
        if line.startswith("#"):
            if rows == [] and "," in line and not line.startswith("# run:") \
                    and not line.startswith("# convention:"):
                cols = [c.strip() for c in line[1:].split(",")]
            continue
        if line.strip():
            rows.append([float(v) for v in line.split(",")])
    if cols is None:
        raise ConfigurationError(f"reference: no column header found in {path}")
    return cols, rows


def compare(cols, rows, ref_cols, ref_rows):
    """Maximum relative deviation per column; raises if the grids differ."""
    if list(cols) != list(ref_cols):
        raise ConfigurationError(f"reference: columns {ref_cols} do not match {list(cols)}")
    if len(rows) != len(ref_rows):
        raise ConfigurationError("reference: number of grid points differs")
    for a, b in zip(rows, ref_rows):
        if abs(a[0] - b[0]) > 1e-12 * abs(b[0]):
            raise ConfigurationError(f"reference: grid point {b[0]} does not match {a[0]}")
    out = {}
    for j, name in enumerate(cols[1:], start=1):
        worst = 0.0
        for a, b in zip(rows, ref_rows):
            den = max(abs(b[j]), 1e-300)
            worst = max(worst, abs(a[j] - b[j]) / den)
        out[name] = worst
    return out


# --- entry point -------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="casimir-pfa", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--x", type=float, nargs="+", default=None,
                       help="aspect ratio L/R (a list defines the grid for fig2/zerofreq)")
        s.add_argument("--tau", type=float, nargs="+", default=None,
                       help="reduced temperature L/lambda_T (a list defines the grid)")
        s.add_argument("--x-min", type=float)
        s.add_argument("--x-max", type=float)
        s.add_argument("--tau-min", type=float)
        s.add_argument("--tau-max", type=float)
        s.add_argument("--points", type=int)
        s.add_argument("--nystrom-nodes", type=int, default=None)
        s.add_argument("--m-max", type=int, default=None)
        s.add_argument("--rtol", type=float, default=1e-6)
        s.add_argument("--out", default="-")
        s.add_argument("--format", choices=("csv", "json"), default="csv")
        s.add_argument("--reference", default=None)
        s.add_argument("--rtol-compare", type=float, default=1e-9)
        s.add_argument("--workers", type=int, default=1)
    return p


def _grid_for(args):
    cmd = args.command
    if cmd not in _DEFAULT_GRIDS:
        return None, ()
    name, lo, hi, pts = _DEFAULT_GRIDS[cmd]
    if name == "x" and args.x:
        return name, tuple(args.x)
    if name == "tau" and args.tau:
        return name, tuple(args.tau)
    if name == "x":
        lo = args.x_min if args.x_min is not None else lo
        hi = args.x_max if args.x_max is not None else hi
    elif name == "tau":
        lo = args.tau_min if args.tau_min is not None else lo
        hi = args.tau_max if args.tau_max is not None else hi
    pts = args.points if args.points is not None else pts
    return name, log_grid(lo, hi, pts)


def spec_from_args(args) -> RunSpec:
    grid_name, grid = _grid_for(args)
    x = tau = None
    if args.command in ("fig3", "delta", "entropy"):
        if args.x is not None and len(args.x) != 1:
            raise ConfigurationError("x: this command takes a single value")
        x = args.x[0] if args.x else 1e-3
    if args.command == "delta":
        if not args.tau or len(args.tau) != 1:
            raise ConfigurationError("tau: delta needs a single --tau value")
        tau = args.tau[0]
    if args.workers < 1:
        raise ConfigurationError("workers: must be at least 1")
    return RunSpec(command=args.command, grid_name=grid_name, grid=grid, x=x, tau=tau,
                   n_nodes=args.nystrom_nodes, m_max=args.m_max, rtol=args.rtol,
                   format=args.format)


def _write(text: str, out: str):
    if out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "validate":
            report = validation.run_all()
            _write(json.dumps(report, indent=1) + "\n", args.out)
            return EXIT_OK if report["passed"] else EXIT_FAIL
        spec = spec_from_args(args)
        if args.command in ("fig2", "zerofreq"):
            zerofreq.NystromConfig(n_nodes=spec.n_nodes, m_max=spec.m_max)
        rows, flags = compute_rows(spec, args.workers)
        _write(render(spec, rows, flags), args.out)
        status = EXIT_NUMERIC if flags else EXIT_OK
        if args.reference:
            ref_cols, ref_rows = read_table(args.reference)
            devs = compare(_COLUMNS[spec.command], rows, ref_cols, ref_rows)
            for name, dev in devs.items():
                print(f"compare {name}: max relative deviation {dev:.3e}", file=sys.stderr)
            if any(not dev <= args.rtol_compare for dev in devs.values()):
                status = status or EXIT_FAIL
        return status
    except (ConfigurationError, DomainError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
