"""Batch front end: ``indefla <subcommand> CONFIG [--key value ...]``.

Every run writes ``report.json`` (with ``schema_version``) into the output
directory, plus CSV data and gnuplot scripts where the subcommand has
something to plot.  Exit status is 0 on success, 1 on domain errors and 2
on usage errors; errors are also printed to stderr as a JSON object with a
stable ``code`` field.
"""
from __future__ import annotations

import argparse
import csv
import datetime as _dt
import json
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .config import ParseError, RunConfig, ValidationError, parse_config
from .core import IndeflaError
from .critical import NotInRangeError, range_check, solve_critical, solve_critical_mode, synthesize
from .dtn import KINDS, all_mode_matrices
from .oracle import RadialGrid, convergence_study, fd_residual, fd_transmission_solve, sample
from .regularized import delta_sweep, h1_norms, solve_regularized_mode
from .spectral import classify_contrast, spectrum_table

SCHEMA_VERSION = "1.0"
SUBCOMMANDS = ("dtn", "field", "solve", "range-check", "sweep-delta", "theta-spectrum", "oracle-compare")

EXIT_OK, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2


class UsageError(IndeflaError):
    code = "usage_error"


class UnsupportedProblemError(IndeflaError):
    code = "unsupported_problem"


def _clean(x):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None, complex to [re, im]."""
    if isinstance(x, dict):
        return {str(k): _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    if isinstance(x, np.ndarray):
        return _clean(x.tolist())
    if isinstance(x, (np.bool_, bool)):
        return bool(x)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [_clean(float(x.real)), _clean(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else None
    return x


class Artifacts:
    """Collects outputs and writes them in one pass at the end of a run."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.csv: dict[str, tuple[list, list]] = {}
        self.scripts: dict[str, str] = {}

    def add_csv(self, name: str, header: list, rows: list):
        self.csv[name] = (header, rows)

    def add_plot(self, name: str, script: str):
        self.scripts[f"plot_{name}.gp"] = script

    def write(self, report: dict):
        self.out_dir.mkdir(parents=True, exist_ok=True)
        for name, (header, rows) in self.csv.items():
            with open(self.out_dir / name, "w", newline="") as fh:
                w = csv.writer(fh, lineterminator="\n")
                w.writerow(header)
                for row in rows:
                    w.writerow([_fmt(v) for v in row])
        for name, text in self.scripts.items():
            (self.out_dir / name).write_text(text)
        report["files"] = sorted(list(self.csv) + list(self.scripts) + ["report.json"])
        (self.out_dir / "report.json").write_text(json.dumps(_clean(report), indent=2, sort_keys=True) + "\n")


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return v


def _gp_header(title: str, out: str) -> str:
    return ("set datafile separator ','\n"
            "set terminal pngcairo size 900,600\n"
            f"set output '{out}'\n"
            f"set title '{title}'\n"
            "set key top right\n"
            "set grid\n")


# subcommands ---------------------------------------------------------------

def run_dtn(cfg: RunConfig, art: Artifacts, threads: int) -> dict:
    geom = cfg.geometry
    lo, hi = cfg.modes
    rows, overflow = [], 0
    for m in range(lo, hi + 1):
        for mat in all_mode_matrices(geom, cfg.mu, m):
            arr, flag = mat.to_array_clamped()
            overflow += flag
            rows.append([m, mat.kind, arr[0, 0], arr[0, 1], arr[1, 0], arr[1, 1], int(flag)])
    art.add_csv("dtn.csv", ["m", "kind", "e11", "e12", "e21", "e22", "overflow"], rows)
    return {"modes": [lo, hi], "kinds": list(KINDS), "rows": len(rows), "overflowed_rows": overflow}


def _mode_solution(cfg: RunConfig, m: int):
    geom, src = cfg.geometry, cfg.source()
    if cfg.delta > 0:
        return solve_regularized_mode(geom, cfg.mu, cfg.delta, m, src), "regularized"
    if cfg.mu != 1:
        raise UnsupportedProblemError("delta = 0 is only supported at the critical contrast mu = 1")
    report = range_check(geom, src, margin=cfg.margin, m_max=cfg.M_max)
    if report.verdict == "NotInRange":
        raise NotInRangeError(report)
    return solve_critical_mode(geom, m, src), "critical"


def run_field(cfg: RunConfig, art: Artifacts, threads: int) -> dict:
    sol, kind = _mode_solution(cfg, cfg.m)
    r = np.linspace(0.0, cfg.R, cfg.samples)
    vals = sol.evaluate(r)
    idx = sol.piece_index(r)
    art.add_csv("field.csv", ["r", "re", "im", "piece_index"],
                [[float(ri), float(v.real), float(v.imag), int(j)] for ri, v, j in zip(r, vals, idx)])
    art.add_plot("field", _gp_header(f"mode {cfg.m} radial profile ({kind})", "field.png")
                 + "set xlabel 'r'\nplot 'field.csv' using 1:2 skip 1 with lines title 'Re u_m', "
                   "'' using 1:3 skip 1 with lines title 'Im u_m'\n")
    return {"m": cfg.m, "solver": kind, "samples": cfg.samples,
            "h1_norms_sq": h1_norms(sol, cfg.geometry),
            "breakpoints": sol.breakpoints}


def _field_rows(solutions: dict, R: float, n: int) -> list:
    r = np.linspace(0.0, R, n)
    u = synthesize(solutions, r, np.zeros_like(r))
    return [[float(ri), float(v.real), float(v.imag)] for ri, v in zip(r, u)]


def run_solve(cfg: RunConfig, art: Artifacts, threads: int) -> dict:
    geom, src = cfg.geometry, cfg.source()
    caught = []
    if cfg.delta > 0:
        modes = src.spectrum.support(cfg.M_max)
        sols = {m: solve_regularized_mode(geom, cfg.mu, cfg.delta, m, src) for m in modes}
        result = {"solver": "regularized", "truncation": cfg.M_max}
    else:
        if cfg.mu != 1:
            raise UnsupportedProblemError("delta = 0 is only supported at the critical contrast mu = 1")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            sols, report = solve_critical(geom, src, m_max=cfg.M_max, margin=cfg.margin,
                                          tail_tolerance=cfg.tail_tolerance)
        result = {"solver": "critical", "membership": report.as_dict(), "verdict": report.verdict,
                  "rho": report.rho, "truncation": report.truncation}
    result["mode_h1_norms_sq"] = {str(m): h1_norms(s, geom) for m, s in sols.items()}
    result["modes"] = len(sols)
    result["warnings"] = [str(w.message) for w in caught]
    art.add_csv("field.csv", ["r", "re", "im"], _field_rows(sols, geom.R, cfg.samples))
    art.add_plot("field", _gp_header("u(r, theta = 0)", "field.png")
                 + "set xlabel 'r'\nplot 'field.csv' using 1:2 skip 1 with lines title 'Re u', "
                   "'' using 1:3 skip 1 with lines title 'Im u'\n")
    return result


def run_range_check(cfg: RunConfig, art: Artifacts, threads: int) -> dict:
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = range_check(cfg.geometry, cfg.source(), margin=cfg.margin, m_max=cfg.M_max,
                             tail_tolerance=cfg.tail_tolerance)
    out = report.as_dict()
    out["warnings"] = [str(w.message) for w in caught]
    return out


def run_sweep(cfg: RunConfig, art: Artifacts, threads: int) -> dict:
    rep = delta_sweep(cfg.geometry, cfg.mu, cfg.source(), deltas=cfg.deltas, m_max=cfg.M_max,
                      discard=cfg.fit_discard, workers=threads)
    rows = [[d, region, n[region]] for d, n in zip(rep.deltas, rep.norms) for region in ("inner", "annulus", "outer")]
    art.add_csv("sweep.csv", ["delta", "region", "h1_norm_sq"], rows)
    plots = ("'sweep.csv' using 1:(strcol(2) eq 'inner' ? $3 : NaN) skip 1 with linespoints title 'inner', "
             "'' using 1:(strcol(2) eq 'annulus' ? $3 : NaN) skip 1 with linespoints title 'annulus', "
             "'' using 1:(strcol(2) eq 'outer' ? $3 : NaN) skip 1 with linespoints title 'outer'")
    art.add_plot("sweep", _gp_header("squared H^1 norms of u_delta", "sweep.png")
                 + "set logscale xy\nset xlabel 'delta'\nset ylabel '||u||^2'\n" + f"plot {plots}\n")
    return rep.as_dict()


def run_theta(cfg: RunConfig, art: Artifacts, threads: int) -> dict:
    lo, hi = cfg.modes
    rows = spectrum_table(cfg.geometry, cfg.mu, range(lo, hi + 1))
    art.add_csv("theta_spectrum.csv", ["m", "lambda1", "lambda2", "kind"], [list(r) for r in rows])
    art.add_plot("theta_spectrum", _gp_header("mode-block eigenvalues", "theta_spectrum.png")
                 + "set logscale y\nset xlabel 'm'\n"
                   "plot 'theta_spectrum.csv' using 1:(strcol(4) eq 'Theta' ? abs($2) : NaN) skip 1 "
                   "with points title '|lambda_1(Theta)|', "
                   "'' using 1:(strcol(4) eq 'Theta' ? abs($3) : NaN) skip 1 with points title '|lambda_2(Theta)|'\n")
    cls = classify_contrast(cfg.geometry, cfg.mu, cfg.window)
    return {"classification": cls.as_dict(), "modes": [lo, hi], "rows": len(rows)}


def run_oracle(cfg: RunConfig, art: Artifacts, threads: int) -> dict:
    geom, src = cfg.geometry, cfg.source()
    exact, kind = _mode_solution(cfg, cfg.m)
    grid = RadialGrid.for_problem(geom, src, cfg.n_points)
    fd = fd_transmission_solve(geom, cfg.contrast, cfg.m, src, grid)
    ex = np.concatenate(sample(exact, grid))
    rows = [[float(r), float(e.real), float(e.imag), float(o.real), float(o.imag), float(abs(e - o))]
            for r, e, o in zip(fd.r, ex, fd.u)]
    art.add_csv("oracle_compare.csv", ["r", "exact_re", "exact_im", "oracle_re", "oracle_im", "abs_error"], rows)
    art.add_plot("oracle_compare", _gp_header(f"oracle vs closed form, mode {cfg.m}", "oracle_compare.png")
                 + "set logscale y\nset xlabel 'r'\n"
                   "plot 'oracle_compare.csv' using 1:6 skip 1 with lines title '|exact - oracle|'\n")
    study = convergence_study(geom, cfg.contrast, cfg.m, src, n_points=cfg.n_points, doublings=cfg.doublings,
                              exact=exact)
    self_study = convergence_study(geom, cfg.contrast, cfg.m, src, n_points=cfg.n_points,
                                   doublings=cfg.doublings)
    return {"m": cfg.m, "solver": kind, "n_points": cfg.n_points,
            "max_abs_error": max(r[-1] for r in rows),
            "closed_form_residual": fd_residual(exact, cfg.m, cfg.contrast.coefficients(), src, grid, geom),
            "convergence": study, "self_convergence": self_study}


_RUNNERS = {
    "dtn": run_dtn,
    "field": run_field,
    "solve": run_solve,
    "range-check": run_range_check,
    "sweep-delta": run_sweep,
    "theta-spectrum": run_theta,
    "oracle-compare": run_oracle,
}


# dispatch -------------------------------------------------------------------

def _parse_overrides(extra: list) -> dict:
    out = {}
    it = iter(extra)
    for tok in it:
        if not tok.startswith("--") or len(tok) <= 2:
            raise UsageError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, val = key.split("=", 1)
        else:
            val = next(it, None)
            if val is None:
                raise UsageError(f"missing value for --{key}")
        out[key.replace("-", "_") if key not in ("M_max",) else key] = val
    return out


def _threads() -> int:
    raw = os.environ.get("INDEFLA_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"INDEFLA_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"INDEFLA_THREADS must be a positive integer, got {raw!r}")
    return n


def _error_payload(exc: BaseException) -> dict:
    err = {"code": getattr(exc, "code", "internal_error"), "type": type(exc).__name__, "message": str(exc)}
    if isinstance(exc, ParseError):
        err["line"], err["column"] = exc.line, exc.column
    if isinstance(exc, ValidationError):
        err["field"] = exc.field_path
    if isinstance(exc, NotInRangeError):
        membership = exc.report.as_dict()
        membership.pop("mode_terms_log10")
        err["membership"] = membership
    return {"schema_version": SCHEMA_VERSION, "error": err}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="indefla",
        description="Mode-by-mode solver and diagnostics for the indefinite Laplacian on concentric circles.",
        epilog="Any configuration key may be overridden with --key value.  "
               "Environment: INDEFLA_OUT (output directory), INDEFLA_THREADS (worker threads).")
    p.add_argument("subcommand", choices=SUBCOMMANDS)
    p.add_argument("config", help="key = value configuration file ('-' for stdin)")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return p


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args, extra = parser.parse_known_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    out_dir = None
    try:
        overrides = _parse_overrides(extra)
        threads = _threads()
        text = sys.stdin.read() if args.config == "-" else Path(args.config).read_text()
        cfg = parse_config(text, overrides)
        out_dir = Path(overrides.get("out") or os.environ.get("INDEFLA_OUT") or cfg.out)
        art = Artifacts(out_dir)
        result = _RUNNERS[args.subcommand](cfg, art, threads)
        report = {
            "schema_version": SCHEMA_VERSION,
            "subcommand": args.subcommand,
            "generated_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            "config": cfg.echo(),
            "result": result,
        }
        art.write(report)
        print(json.dumps({"status": "ok", "subcommand": args.subcommand, "out": str(out_dir)}))
        return EXIT_OK
    except (UsageError, ParseError, ValidationError, OSError) as exc:
        status = EXIT_USAGE
        payload = _error_payload(exc)
        if isinstance(exc, OSError):
            payload["error"]["code"] = "io_error"
    except IndeflaError as exc:
        status = EXIT_DOMAIN
        payload = _error_payload(exc)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        status = EXIT_DOMAIN
        payload = _error_payload(exc)
        payload["error"]["code"] = getattr(exc, "code", "domain_error")
    payload["subcommand"] = args.subcommand
    print(json.dumps(_clean(payload), sort_keys=True), file=sys.stderr)
    if out_dir is not None and status == EXIT_DOMAIN:
        try:
            out_dir.mkdir(parents=True, exist_ok=True)
            (out_dir / "report.json").write_text(json.dumps(_clean(payload), indent=2, sort_keys=True) + "\n")
        except OSError:
            pass
    return status


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
