"""End-to-end runs: assemble, solve, build the metric, verify, sweep."""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace

import numpy as np

from .assembly import assemble_pencil
from .eigensolve import (
    biorthonormalize,
    classify_reality,
    eigencharges_only,
    greedy_match,
    solve_pencil,
)
from .errors import ConfigError
from .metric import build_metric
from .verify import convergence_study, run_suite

__all__ = ["Tolerances", "SolveResult", "VerifyResult", "SweepResult", "solve", "verify", "sweep", "oracle"]


@dataclass(frozen=True)
class Tolerances:
    degeneracy_tol: float | None = None
    defect_tol: float = 1e-8
    reality_tol: float = 1e-8
    pair_tol: float = 1e-6
    polish_tol: float = 1e-12
    match_tol: float | None = None
    gauge_tol: float = 1e-10
    tol_herm: float = 1e-8
    pd_floor: float = 1e-10
    base_tol: float = 1e-10
    oracle_tol: float = 1e-3
    collision_tol: float = 1e-6
    weight_floor: float | None = None

    @classmethod
    def names(cls):
        return [f.name for f in fields(cls)]

    def updated(self, overrides):
        known = set(self.names())
        bad = sorted(set(overrides) - known)
        if bad:
            raise ConfigError(f"unknown tolerance name(s): {', '.join(bad)}; known: {', '.join(sorted(known))}")
        clean = {}
        for k, v in overrides.items():
            try:
                clean[k] = float(v)
            except (TypeError, ValueError):
                raise ConfigError(f"tolerance {k} must be a number, got {v!r}") from None
            if not clean[k] >= 0:
                raise ConfigError(f"tolerance {k} must be non-negative")
        return replace(self, **clean)

    def apply_to(self, spec):
        if self.weight_floor is None:
            return spec
        return spec.replace(weight_floor=self.weight_floor)


@dataclass(frozen=True, eq=False)
class SolveResult:
    pencil: object
    spectrum: object
    reality: object


@dataclass(frozen=True, eq=False)
class VerifyResult:
    pencil: object
    raw_spectrum: object
    spectrum: object
    reality: object
    bundle: object
    report: object


@dataclass(frozen=True, eq=False)
class SweepResult:
    parameter: str
    values: np.ndarray
    branches: np.ndarray
    collisions: np.ndarray


def solve(spec, tol=Tolerances(), method="paired"):
    pencil = assemble_pencil(tol.apply_to(spec))
    spectrum = solve_pencil(
        pencil,
        method=method,
        polish_tol=tol.polish_tol,
        match_tol=tol.match_tol,
        degeneracy_tol=tol.degeneracy_tol,
    )
    reality = classify_reality(spectrum, tol.reality_tol, tol.pair_tol)
    return SolveResult(pencil, spectrum, reality)


def verify(spec, tol=Tolerances(), method="paired", convention="metric", route="single", solved=None):
    """Full identity suite.  Degenerate or near-defective spectra raise."""
    solved = solved or solve(spec, tol, method)
    spectrum = biorthonormalize(
        solved.spectrum,
        solved.pencil,
        convention=convention,
        degeneracy_tol=tol.degeneracy_tol,
        defect_tol=tol.defect_tol,
        gauge_tol=tol.gauge_tol,
    )
    bundle = build_metric(spectrum, solved.pencil, route=route, tol_herm=tol.tol_herm, pd_floor=tol.pd_floor)
    report = run_suite(solved.pencil, spectrum, bundle, base_tol=tol.base_tol, pd_floor=tol.pd_floor)
    return VerifyResult(solved.pencil, solved.spectrum, spectrum, solved.reality, bundle, report)


def _continue_branches(steps, collision_tol):
    """Reorder each step's eigencharges to follow the previous step by nearest neighbour.

    A branch is flagged as colliding when its two closest candidates are
    equally far (to ``collision_tol`` relative to the spectrum size), i.e.
    the match cannot tell them apart.
    """
    branches = [np.asarray(steps[0])]
    collisions = [np.zeros(len(steps[0]), dtype=bool)]
    for cur in steps[1:]:
        cur = np.asarray(cur)
        prev = branches[-1]
        tol = collision_tol * (1.0 + float(np.max(np.abs(prev))))
        perm, _, _ = greedy_match(prev, cur)
        if len(cur) > 1:
            dist = np.sort(np.abs(prev[:, None] - cur[None, :]), axis=1)
            ambiguous = dist[:, 1] - dist[:, 0] < tol
        else:
            ambiguous = np.zeros(1, dtype=bool)
        branches.append(cur[perm])
        collisions.append(ambiguous)
    return np.array(branches), np.array(collisions)


def sweep(spec, parameter, values, tol=Tolerances(), workers=1):
    if parameter not in ("kappa_sq", "ell"):
        raise ConfigError(f"sweep parameter must be kappa_sq or ell, got {parameter!r}")
    values = np.asarray(values, dtype=float)
    specs = [tol.apply_to(spec.replace(**{parameter: v})) for v in values]

    def one(s):
        return eigencharges_only(assemble_pencil(s))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            steps = list(pool.map(one, specs))
    else:
        steps = [one(s) for s in specs]
    branches, collisions = _continue_branches(steps, tol.collision_tol)
    return SweepResult(parameter, values, branches, collisions)


def oracle(spec, refinements=1, n_charges=3, tol=Tolerances()):
    return convergence_study(tol.apply_to(spec), refinements, n_charges=n_charges)
