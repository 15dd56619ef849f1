"""Command-line front end.

Exit status: 0 on success, 1 on malformed input or a violated hypothesis
(a JSON error object goes to stderr), 2 when a verification case fails.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import __version__
from .bounds import exact_norm_bz, norm_report, upper_bound_norm
from .errors import OpDiffError, SpecFormatError
from .operator import OperatorSpec, build_matrix, common_fixed_point
from .spectral import closed_form_spectrum, operator_norm, spectral_radius_closed, spectrum_report
from .verify import default_suite, run_suite, summary_csv

COMMANDS = ("matrix", "norm", "spectrum", "radius", "bounds", "verify", "report")


@dataclass
class CliConfig:
    command: str
    spec_path: Optional[str] = None
    alpha: float = -1.0
    trunc: int = 128
    tol: float = 1e-10
    lmax: Optional[int] = None
    out: Optional[str] = None
    format: str = "json"

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise SpecFormatError(f"unknown command {self.command!r}")
        if not 8 <= self.trunc <= 2048:
            raise SpecFormatError(f"--trunc must lie in [8, 2048], got {self.trunc}")
        if not self.tol > 0:
            raise SpecFormatError(f"--tol must be positive, got {self.tol}")


def _clean(obj):
    """Round floats to 15 significant digits and turn complex numbers into [re, im]."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(obj.real), _clean(obj.imag)]
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None if math.isnan(x) else ("inf" if x > 0 else "-inf")
        x = float(f"{x:.15g}")
        return 0.0 if x == 0 else x
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def _kv_csv(doc: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["key", "value"])
    for k, v in _clean(doc).items():
        w.writerow([k, json.dumps(v) if isinstance(v, (list, dict)) else v])
    return buf.getvalue()


def load_spec(path: Optional[str]) -> OperatorSpec:
    if not path:
        raise SpecFormatError("--spec is required for this command")
    try:
        doc = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise SpecFormatError(f"spec file not found: {path}")
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"spec file is not valid JSON: {exc}")
    return OperatorSpec.from_json(doc)


def _matrix(cfg: CliConfig, args) -> tuple[str, int]:
    M = build_matrix(load_spec(cfg.spec_path), cfg.alpha, cfg.trunc)
    if cfg.format == "csv":
        return M.to_csv(), 0
    return dumps({"alpha": cfg.alpha, "trunc_degree": cfg.trunc, "entries": M.entries.tolist()}), 0


def _norm(cfg: CliConfig, args) -> tuple[str, int]:
    rep = norm_report(load_spec(cfg.spec_path), cfg.alpha, cfg.trunc, cfg.tol).to_json()
    return (_kv_csv(rep) if cfg.format == "csv" else dumps(rep)), 0


def _spectrum(cfg: CliConfig, args) -> tuple[str, int]:
    rep = spectrum_report(load_spec(cfg.spec_path), cfg.alpha, cfg.trunc, cfg.tol, cfg.lmax)
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["kind", "l", "re", "im", "residual"])
        for l, v in rep.closed_form:
            w.writerow(["closed", "" if l is None else l, *_clean(v), ""])
        for p in rep.numeric:
            w.writerow(["numeric", "", *_clean(p.value), _clean(p.residual)])
        return buf.getvalue(), 0
    return dumps(rep.to_json()), 0


def _radius(cfg: CliConfig, args) -> tuple[str, int]:
    spec = load_spec(cfg.spec_path)
    fp = common_fixed_point(spec) if not (spec.is_diff_only and spec.phin.degree <= 0) else None
    if spec.is_diff_only and fp is not None:
        radius, l_star = spectral_radius_closed(spec, fp)
    else:
        cf = closed_form_spectrum(spec, fp, cfg.lmax, cfg.alpha)
        radius, l_star = cf.radius_closed, cf.l_star
    doc = {"radius": radius, "l_star": l_star, "fixed_point": fp.w if fp else None}
    return (_kv_csv(doc) if cfg.format == "csv" else dumps(doc)), 0


def _parse_grid(text: Optional[str], cast):
    return [cast(x) for x in text.split(",")] if text else []


def _bounds(cfg: CliConfig, args) -> tuple[str, int]:
    b_grid = _parse_grid(args.b_grid, float)
    n_grid = _parse_grid(args.n_grid, int)
    if b_grid or n_grid:
        rows = []
        for b in b_grid or [0.5]:
            for n in n_grid or [1]:
                row = {"b": b, "n": n, "exact": exact_norm_bz(b, n)}
                if args.numeric:
                    spec = OperatorSpec.diff([1.0], [0.0, b], n)
                    row["numeric"] = operator_norm(build_matrix(spec, -1.0, cfg.trunc), cfg.tol)
                rows.append(row)
        if cfg.format == "json":
            return dumps(rows), 0
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
        w.writeheader()
        for row in rows:
            w.writerow(_clean(row))
        return buf.getvalue(), 0
    spec = load_spec(cfg.spec_path)
    doc = norm_report(spec, cfg.alpha, cfg.trunc, cfg.tol, numeric=False).to_json()
    if args.b is not None:
        doc["upper"] = upper_bound_norm(spec, args.b, cfg.alpha)
        doc["method_tags"]["upper"] = f"user-supplied b = {args.b}"
    doc.pop("numeric")
    doc.pop("consistent")
    return (_kv_csv(doc) if cfg.format == "csv" else dumps(doc)), 0


def _verify(cfg: CliConfig, args) -> tuple[str, int]:
    if args.suite == "default":
        cases = default_suite()
    else:
        try:
            cases = json.loads(Path(args.suite).read_text())
        except (FileNotFoundError, json.JSONDecodeError) as exc:
            raise SpecFormatError(f"cannot read suite manifest {args.suite}: {exc}")
        if not isinstance(cases, list) or not all(isinstance(c, dict) and "id" in c and "check" in c for c in cases):
            raise SpecFormatError("suite manifest must be a JSON list of objects with 'id' and 'check'")
    reports = run_suite(cases)
    status = 0 if all(r.passed for r in reports) else 2
    if cfg.format == "csv":
        return summary_csv(reports), status
    return dumps([r.to_json(args.timings) for r in reports]), status


def _report(cfg: CliConfig, args) -> tuple[str, int]:
    spec = load_spec(cfg.spec_path)
    grid = sorted({max(8, cfg.trunc // 8), max(8, cfg.trunc // 4), max(8, cfg.trunc // 2), cfg.trunc})
    table = [{"N": N, "norm": operator_norm(build_matrix(spec, cfg.alpha, N), cfg.tol)} for N in grid]
    if cfg.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "norm"])
        for row in table:
            w.writerow([row["N"], _clean(row["norm"])])
        return buf.getvalue(), 0
    doc = {"spec": spec.to_json(), "alpha": cfg.alpha, "trunc_degree": cfg.trunc,
           "norm": norm_report(spec, cfg.alpha, cfg.trunc, cfg.tol).to_json(), "convergence": table}
    try:
        doc["spectrum"] = spectrum_report(spec, cfg.alpha, cfg.trunc, 1e-8, cfg.lmax).to_json()
    except OpDiffError as exc:
        doc["spectrum"] = {"unavailable": str(exc)}
    return dumps(doc), 0


HANDLERS = {
    "matrix": _matrix,
    "norm": _norm,
    "spectrum": _spectrum,
    "radius": _radius,
    "bounds": _bounds,
    "verify": _verify,
    "report": _report,
}


class _Parser(argparse.ArgumentParser):
    """Reports usage errors as ``SpecFormatError`` so they exit 1 like other bad input."""

    def error(self, message):
        raise SpecFormatError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--spec", dest="spec_path", help="operator spec JSON file")
    common.add_argument("--alpha", type=float, default=-1.0, help="-1 for H^2, > -1 for A^2_alpha")
    common.add_argument("--trunc", type=int, default=128, help="section size N (8..2048)")
    common.add_argument("--tol", type=float, default=None, help="solver tolerance")
    common.add_argument("--lmax", type=int, default=None, help="largest index l in closed-form spectra")
    common.add_argument("--out", help="write the result here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = _Parser(prog="opdiff", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("matrix", parents=[common], help="orthonormal-basis matrix of the section")
    sub.add_parser("norm", parents=[common], help="numeric norm with closed-form bounds")
    sub.add_parser("spectrum", parents=[common], help="closed-form and numeric eigenvalues")
    sub.add_parser("radius", parents=[common], help="closed-form spectral radius and maximizer")
    p = sub.add_parser("bounds", parents=[common], help="closed-form norm bounds, or a sweep over b and n")
    p.add_argument("--b", type=float, default=None, help="bound b >= sup|phi| for the upper estimate")
    p.add_argument("--b-grid", help="comma-separated b values for a sweep of the phi = bz norm")
    p.add_argument("--n-grid", help="comma-separated n values for the sweep")
    p.add_argument("--numeric", action="store_true", help="add numeric section norms to the sweep")
    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("--suite", default="default", help="'default' or a JSON manifest")
    p.add_argument("--timings", action="store_true", help="include per-case runtimes (output no longer reproducible)")
    sub.add_parser("report", parents=[common], help="norm, spectrum and convergence table in one document")
    return parser


def _error(exc: Exception) -> str:
    doc = {"error": type(exc).__name__, "message": str(exc)}
    hyp = getattr(exc, "hypothesis", None)
    if hyp:
        doc["hypothesis"] = hyp
    return json.dumps(doc)


def run(cfg: CliConfig, args) -> int:
    text, status = HANDLERS[cfg.command](cfg, args)
    if cfg.out:
        Path(cfg.out).write_text(text)
    else:
        sys.stdout.write(text)
    return status


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        default_tol = 1e-8 if args.command == "spectrum" else 1e-10
        cfg = CliConfig(args.command, args.spec_path, args.alpha, args.trunc,
                        args.tol if args.tol is not None else default_tol, args.lmax, args.out, args.format)
        return run(cfg, args)
    except (OpDiffError, ValueError) as exc:
        sys.stderr.write(_error(exc) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
