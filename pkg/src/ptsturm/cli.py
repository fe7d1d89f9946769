"""Command-line front end.

Usage::

    ptsturm {solve,verify,sweep,oracle,run} --config FILE [--out DIR]
            [--tol NAME=VALUE ...] [--workers K]

The config is an INI file with sections [problem], [contour], [grid] and the
optional [pipeline], [sweep], [oracle], [tolerances], [output].

Exit codes:
  0  all requested checks passed
  2  configuration error (unreadable file, missing or invalid fields)
  3  solver failure (eigensolver, singular weight, rank-deficient metric)
  4  verification failure (some identity check failed)
  5  degenerate or near-defective spectrum
"""

import argparse
import configparser
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import errors, io
from .assembly import ProblemSpec, Weight, WeightKind
from .contour import ContourKind, ContourSpec, Grid
from .pipeline import Tolerances, oracle, solve, sweep, verify

log = logging.getLogger("ptsturm")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_VERIFY = 4
EXIT_DEGENERATE = 5

PIPELINES = ("solve", "verify", "sweep", "oracle")


def _get(cfg, section, key, conv=str, default=None, required=False):
    if not cfg.has_option(section, key) or cfg.get(section, key).strip() == "":
        if required:
            raise errors.ConfigError(f"missing [{section}] {key}")
        return default
    raw = cfg.get(section, key).strip()
    try:
        return conv(raw)
    except (TypeError, ValueError):
        raise errors.ConfigError(f"[{section}] {key}: cannot parse {raw!r}") from None


def _complex(text):
    return complex(text.replace(" ", ""))


def _bool(text):
    value = text.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(text)


def load_config(path):
    cfg = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            cfg.read_file(fh)
    except OSError as exc:
        raise errors.ConfigError(f"cannot read config {path}: {exc}") from None
    except configparser.Error as exc:
        raise errors.ConfigError(f"malformed config {path}: {exc}") from None
    return cfg


def problem_from_config(cfg):
    for section in ("problem", "contour", "grid"):
        if not cfg.has_section(section):
            raise errors.ConfigError(f"missing [{section}] section")
    try:
        kind = _get(cfg, "contour", "kind", ContourKind, ContourKind.COMPLEX_PARABOLA)
        contour = ContourSpec(
            kind,
            _get(cfg, "contour", "alpha", float, 2.0),
            _get(cfg, "contour", "beta", float, 1.0),
            _get(cfg, "contour", "gamma", float, 1.0),
        )
        grid = Grid(
            _get(cfg, "grid", "x_min", float, required=True),
            _get(cfg, "grid", "x_max", float, required=True),
            _get(cfg, "grid", "n_interior", int, required=True),
        )
        weight_kind = _get(cfg, "problem", "weight", WeightKind, WeightKind.PT_COULOMB)
        power = _get(cfg, "problem", "power", int)
        weight = Weight(weight_kind, power)
        return ProblemSpec(
            ell=_get(cfg, "problem", "ell", float, 0.0),
            kappa_sq=_get(cfg, "problem", "kappa_sq", _complex, required=True),
            weight=weight,
            contour=contour,
            grid=grid,
        )
    except (errors.InvalidGrid, errors.InvalidContour, errors.InvalidProblem) as exc:
        raise errors.ConfigError(str(exc)) from None


def _parse_tol_args(items):
    out = {}
    for item in items or []:
        if "=" not in item:
            raise errors.ConfigError(f"--tol expects NAME=VALUE, got {item!r}")
        name, value = item.split("=", 1)
        out[name.strip()] = value.strip()
    return out


def _write_summary(path, lines):
    Path(path).write_text("\n".join(lines) + "\n")


def _spectrum_summary(spec, solved):
    rep = solved.reality
    return [
        f"problem: ell={spec.ell} kappa_sq={spec.kappa_sq} weight={spec.weight.label()} "
        f"contour={spec.contour.kind.value} grid=[{spec.grid.x_min}, {spec.grid.x_max}] n={spec.grid.n_interior}",
        f"eigencharges: {solved.spectrum.dim}; real {rep.n_real}, conjugate pairs {rep.n_complex_pairs}, "
        f"unpaired {rep.n_unpaired}, max |Im| {rep.max_abs_imag:.3e}",
        f"degenerate flags: {int(solved.spectrum.degenerate_flags.sum())}; "
        f"max residual {float(np.max(solved.spectrum.residuals)):.3e}",
    ]


def _export_matrices(out, pencil, bundle=None):
    io.write_matrix(out / "A.mtx", pencil.a_matrix, comment="pencil A = H")
    io.write_matrix(out / "B.mtx", pencil.b_matrix, comment="pencil B = W")
    if bundle is not None:
        io.write_matrix(out / "theta.mtx", bundle.theta, comment="metric Theta", dense=True)
        for name in ("omega", "h_herm", "w_herm"):
            m = getattr(bundle, name)
            if m is not None:
                io.write_matrix(out / f"{name}.mtx", m, dense=True)


def run_pipeline(pipeline, cfg, out, tol, workers=1):
    """Run one pipeline and return the exit status."""
    spec = problem_from_config(cfg)
    method = _get(cfg, "pipeline", "method", str, "paired")
    convention = _get(cfg, "pipeline", "convention", str, "metric")
    route = _get(cfg, "pipeline", "route", str, "single")
    export = _get(cfg, "output", "export_matrices", _bool, False)
    dump_vectors = _get(cfg, "output", "save_vectors", _bool, False)
    out.mkdir(parents=True, exist_ok=True)

    if pipeline == "solve":
        solved = solve(spec, tol, method)
        io.write_spectrum_csv(out / "spectrum.csv", solved.spectrum)
        if dump_vectors:
            io.save_vectors(out / "vectors.npz", solved.spectrum)
        if export:
            _export_matrices(out, solved.pencil)
        _write_summary(out / "summary.txt", _spectrum_summary(spec, solved))
        return EXIT_OK

    if pipeline == "verify":
        solved = solve(spec, tol, method)
        io.write_spectrum_csv(out / "spectrum.csv", solved.spectrum)
        summary = _spectrum_summary(spec, solved)
        try:
            result = verify(spec, tol, method, convention, route, solved=solved)
        except (errors.DegenerateSpectrum, errors.NearDefectivePair) as exc:
            summary.append(f"verification not possible: {type(exc).__name__}: {exc}")
            _write_summary(out / "summary.txt", summary)
            (out / "verification.json").write_text(
                json.dumps({"overall": False, "error": type(exc).__name__, "message": str(exc)}, indent=2)
            )
            raise
        (out / "verification.json").write_text(result.report.to_json())
        summary.append(result.report.to_text())
        _write_summary(out / "summary.txt", summary)
        if export:
            _export_matrices(out, result.pencil, result.bundle)
        if dump_vectors:
            io.save_vectors(out / "vectors.npz", result.spectrum)
        return EXIT_OK if result.report.overall else EXIT_VERIFY

    if pipeline == "sweep":
        if not cfg.has_section("sweep"):
            raise errors.ConfigError("pipeline sweep requires a [sweep] section")
        parameter = _get(cfg, "sweep", "parameter", str, required=True)
        start = _get(cfg, "sweep", "start", float, required=True)
        stop = _get(cfg, "sweep", "stop", float, required=True)
        steps = _get(cfg, "sweep", "steps", int, required=True)
        if steps < 2:
            raise errors.ConfigError("[sweep] steps must be >= 2")
        if parameter not in ("kappa_sq", "ell"):
            raise errors.ConfigError(f"[sweep] parameter must be kappa_sq or ell, got {parameter!r}")
        result = sweep(spec, parameter, np.linspace(start, stop, steps), tol, workers)
        io.write_sweep_csv(out / "sweep.csv", parameter, result.values, result.branches, result.collisions)
        _write_summary(
            out / "summary.txt",
            [
                f"sweep of {parameter} over [{start}, {stop}] in {steps} steps, {result.branches.shape[1]} branches",
                f"collisions flagged: {int(result.collisions.sum())}",
            ],
        )
        return EXIT_OK

    if pipeline == "oracle":
        refinements = _get(cfg, "oracle", "refinements", int, 1)
        n_charges = _get(cfg, "oracle", "n_charges", int, 3)
        table = oracle(spec, refinements, n_charges, tol)
        io.write_oracle_csv(out / "oracle.csv", table)
        finest = table.rows[-1]
        ok = max(finest.errors) <= tol.oracle_tol and not table.discretization_defect
        lines = [f"reference: {table.oracle}"]
        for row in table.rows:
            errs = " ".join(f"{e:.3e}" for e in row.errors)
            lines.append(f"n={row.n_interior:6d} h={row.h:.6g} rel errors: {errs}")
        lines.append(f"observed order: {table.observed_order:.3f}")
        if table.discretization_defect:
            lines.append(f"order below {table.min_order}: discretization defect")
        lines.append(f"overall: {'pass' if ok else 'FAIL'}")
        _write_summary(out / "summary.txt", lines)
        return EXIT_OK if ok else EXIT_VERIFY

    raise errors.ConfigError(f"unknown pipeline {pipeline!r}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="ptsturm",
        description="Non-Hermitian Sturmian pencils: spectra, metric operators and identity checks.",
        epilog=(
            "exit codes:\n"
            "  0 ok\n"
            "  2 config error\n"
            "  3 solver failure (eigensolver, singular weight, rank-deficient metric)\n"
            "  4 verification failure (an identity check or the oracle tolerance failed)\n"
            "  5 degenerate or near-defective spectrum"
        ),
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("pipeline", choices=PIPELINES + ("run",), help="what to run ('run' reads [pipeline] mode)")
    parser.add_argument("--config", required=True, help="INI problem configuration")
    parser.add_argument("--out", help="output directory (default: [output] directory or ./out)")
    parser.add_argument(
        "--tol",
        action="append",
        metavar="NAME=VALUE",
        help=f"tolerance override, repeatable; names: {', '.join(Tolerances.names())}",
    )
    parser.add_argument("--workers", type=int, default=1, help="concurrent sweep steps")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = load_config(args.config)
        pipeline = args.pipeline
        if pipeline == "run":
            pipeline = _get(cfg, "pipeline", "mode", str, required=True)
            if pipeline not in PIPELINES:
                raise errors.ConfigError(f"[pipeline] mode must be one of {PIPELINES}")
        overrides = dict(cfg.items("tolerances")) if cfg.has_section("tolerances") else {}
        overrides.update(_parse_tol_args(args.tol))
        tol = Tolerances().updated(overrides)
        out = Path(args.out or _get(cfg, "output", "directory", str, "out"))
        if args.workers < 1:
            raise errors.ConfigError("--workers must be >= 1")
        status = run_pipeline(pipeline, cfg, out, tol, args.workers)
    except errors.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (errors.DegenerateSpectrum, errors.NearDefectivePair) as exc:
        print(f"degenerate spectrum: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except (errors.EigensolverFailure, errors.SingularWeight, errors.RankDeficient) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (errors.AsymmetryExceeded, errors.NotPositiveDefinite) as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    log.info("exit status %d", status)
    return status


if __name__ == "__main__":
    sys.exit(main())
