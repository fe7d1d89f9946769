"""Residual checks of the biorthogonal and metric identities, and grid convergence.

Every matrix residual is a max-abs-entry norm divided by the size of the
terms being compared, and is tested against ``base_tol * max(1, cond(R))``
where R holds the column-normalized right vectors.  Positivity entries use a
tolerance of zero on ``max(0, pd_floor - min_eig / max_eig)``.
"""

import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .analytic import hermitian_coulomb_charge
from .assembly import WeightKind, assemble_pencil
from .eigensolve import eigencharges_only
from .errors import InputMismatch
from .metric import DEFAULT_PD_FLOOR, m_matrix, metric_double_series, relative_asymmetry

__all__ = [
    "CheckEntry",
    "VerificationReport",
    "run_suite",
    "ConvergenceRow",
    "ConvergenceTable",
    "convergence_study",
    "DEFAULT_BASE_TOL",
    "MIN_ORDER",
]

DEFAULT_BASE_TOL = 1e-10
MIN_ORDER = 1.5


@dataclass(frozen=True)
class CheckEntry:
    name: str
    residual: float
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class VerificationReport:
    entries: list
    condition_numbers: dict
    overall: bool

    def __getitem__(self, name):
        for entry in self.entries:
            if entry.name == name:
                return entry
        raise KeyError(name)

    def names(self):
        return [e.name for e in self.entries]

    def failed(self):
        return [e for e in self.entries if not e.passed]

    def to_dict(self):
        return {
            "overall": self.overall,
            "condition_numbers": self.condition_numbers,
            "entries": [asdict(e) for e in self.entries],
        }

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), indent=2, allow_nan=True, **kwargs)

    @classmethod
    def from_dict(cls, data):
        entries = [CheckEntry(**e) for e in data["entries"]]
        return cls(entries, dict(data["condition_numbers"]), bool(data["overall"]))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_text(self):
        width = max(len(e.name) for e in self.entries) if self.entries else 10
        lines = [f"{'check':<{width}}  {'residual':>12}  {'tolerance':>12}  verdict"]
        for e in self.entries:
            verdict = "pass" if e.passed else "FAIL"
            lines.append(f"{e.name:<{width}}  {e.residual:12.3e}  {e.tolerance:12.3e}  {verdict}")
        conds = ", ".join(f"{k}={v:.3e}" for k, v in self.condition_numbers.items())
        lines.append(f"condition numbers: {conds}")
        lines.append(f"overall: {'pass' if self.overall else 'FAIL'}")
        return "\n".join(lines)


def _max_abs(a):
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def _rel(diff, *terms):
    scale = max(_max_abs(t) for t in terms)
    return _max_abs(diff) / scale if scale > 0 else _max_abs(diff)


def _positivity(matrix, pd_floor):
    evals = np.linalg.eigvalsh(0.5 * (matrix + matrix.conj().T))
    top = max(abs(evals[0]), abs(evals[-1]))
    ratio = evals[0] / top if top > 0 else 0.0
    return max(0.0, pd_floor - ratio), evals


def _cond(a):
    if a is None:
        return math.nan
    return float(np.linalg.cond(a))


def run_suite(pencil, spectrum, bundle, *, base_tol=DEFAULT_BASE_TOL, pd_floor=DEFAULT_PD_FLOOR):
    """Evaluate every identity on one solved problem.

    Parameters
    ----------
    pencil : OperatorPencil
    spectrum : Spectrum
        Biorthonormalized.
    bundle : MetricBundle
        Residuals involving Theta are computed from ``bundle.theta`` itself,
        so a tampered Theta is seen by every Theta-dependent check.

    Returns
    -------
    VerificationReport
    """
    n = pencil.dim
    if spectrum.dim != n or bundle.theta.shape != (n, n):
        raise InputMismatch(
            f"dimension mismatch: pencil {n}, spectrum {spectrum.dim}, theta {bundle.theta.shape}"
        )
    if not spectrum.is_biorthonormal:
        raise InputMismatch("spectrum must be biorthonormalized before verification")

    a = pencil.a_matrix
    w = pencil.weights
    ah = a.conj().T
    lam = spectrum.eigencharges
    r, l = spectrum.right_vectors, spectrum.left_vectors
    theta = bundle.theta
    eye = np.eye(n)
    lh_b = l.conj().T * w[None, :]
    b_r = w[:, None] * r
    bh_l = w.conj()[:, None] * l

    scale = spectrum.condition_scale()
    tol = base_tol * scale
    entries = []

    def add(name, residual, tolerance=tol):
        residual = float(residual)
        entries.append(CheckEntry(name, residual, float(tolerance), bool(residual <= tolerance)))

    add("biorthogonality", _max_abs(lh_b @ r - eye))
    add("completeness_right", _max_abs(r @ lh_b - eye))
    add("completeness_left", _max_abs(b_r @ l.conj().T - eye))
    weight_rep = b_r @ lh_b
    add("weight_spectral_representation", _rel(weight_rep - np.diag(w), np.diag(w)))
    ham_rep = (b_r * lam[None, :]) @ lh_b
    add("hamiltonian_spectral_representation", _rel(ham_rep - a, a))
    add("theta_maps_kets_to_double_kets", _rel(theta @ r - l, l))

    ah_t, t_a = ah @ theta, theta @ a
    add("quasi_hermiticity_H", _rel(ah_t - t_a, ah_t, t_a))
    wh_t, t_w = w.conj()[:, None] * theta, theta * w[None, :]
    add("quasi_hermiticity_W", _rel(wh_t - t_w, wh_t, t_w))
    lhs = (bh_l * lam.conj()[None, :]) @ b_r.conj().T @ theta
    rhs = theta @ ham_rep
    add("insertion_identity", _rel(lhs - rhs, lhs, rhs))

    add("theta_hermiticity", max(bundle.asymmetry, relative_asymmetry(theta)))
    mm = m_matrix(spectrum, pencil)
    add("m_matrix_hermiticity", mm.hermiticity_defect())
    add("m_matrix_representations", mm.representation_spread())
    double = metric_double_series(spectrum, pencil, mm)
    add("single_double_series_agreement", _rel(theta - double, theta, double))

    theta_pos, theta_evals = _positivity(theta, pd_floor)
    add("theta_positivity", theta_pos, 0.0)
    tw_pos, _ = _positivity(theta * w[None, :], pd_floor)
    add("theta_w_positivity", tw_pos, 0.0)

    if bundle.h_herm is not None:
        add("h_hermiticity", relative_asymmetry(bundle.h_herm))
        add("w_hermiticity", relative_asymmetry(bundle.w_herm))

    top = max(abs(theta_evals[0]), abs(theta_evals[-1]))
    conds = {
        "right_vectors": spectrum.condition,
        "theta": float(top / abs(theta_evals[0])) if theta_evals[0] != 0 else math.inf,
        "omega": _cond(bundle.omega),
    }
    return VerificationReport(entries, conds, all(e.passed for e in entries))


@dataclass(frozen=True)
class ConvergenceRow:
    n_interior: int
    h: float
    charges: list
    errors: list
    orders: list


@dataclass(frozen=True)
class ConvergenceTable:
    rows: list
    reference: list
    oracle: str
    min_order: float = MIN_ORDER

    @property
    def observed_order(self):
        """Smallest order seen between the last two refinements (nan with one row)."""
        if len(self.rows) < 2:
            return math.nan
        return float(np.min(self.rows[-1].orders))

    @property
    def discretization_defect(self):
        order = self.observed_order
        return bool(np.isfinite(order) and order < self.min_order)

    def error_ratios(self):
        """errors[k-1] / errors[k] for each refinement step and tracked charge."""
        out = []
        for prev, row in zip(self.rows, self.rows[1:]):
            out.append([p / e if e > 0 else math.inf for p, e in zip(prev.errors, row.errors)])
        return out


def _has_coulomb_oracle(spec):
    k2 = spec.kappa_sq
    return (
        spec.contour.is_real
        and spec.weight.kind is WeightKind.COULOMB
        and k2.imag == 0.0
        and k2.real > 0.0
        and spec.ell > -1.0
    )


def _pick(lam, targets):
    """For each target the nearest unused eigencharge."""
    lam = np.array(lam)
    picked = []
    used = np.zeros(len(lam), dtype=bool)
    for t in targets:
        d = np.where(used, np.inf, np.abs(lam - t))
        k = int(np.argmin(d))
        used[k] = True
        picked.append(lam[k])
    return np.array(picked)


def convergence_study(spec, refinements, *, n_charges=3, reference=None):
    """Errors of the lowest eigencharges under successive exact halvings of h.

    The reference is the closed-form Hermitian Coulomb charge when ``spec``
    is a real half-line Coulomb problem; otherwise ``reference`` must be
    given, or the solution one halving beyond the finest row is used.
    Orders are log2 of successive error ratios.
    """
    if refinements < 0:
        raise ValueError("refinements must be >= 0")
    grids = [spec.grid]
    for _ in range(refinements):
        grids.append(grids[-1].refined())

    if reference is not None:
        ref = np.asarray(reference, dtype=complex)
        oracle = "given"
    elif _has_coulomb_oracle(spec):
        kappa = math.sqrt(spec.kappa_sq.real)
        ref = np.array([hermitian_coulomb_charge(k, spec.ell, kappa) for k in range(n_charges)], dtype=complex)
        oracle = "hermitian_coulomb"
    else:
        fine = eigencharges_only(assemble_pencil(spec.replace(grid=grids[-1].refined())))
        ref = fine[np.argsort(np.abs(fine))][:n_charges]
        oracle = "fine_grid"

    rows = []
    for grid in grids:
        lam = eigencharges_only(assemble_pencil(spec.replace(grid=grid)))
        got = _pick(lam, ref)
        err = np.abs(got - ref) / np.maximum(np.abs(ref), np.finfo(float).tiny)
        if rows:
            prev = rows[-1].errors
            orders = [math.log2(p / e) if e > 0 and p > 0 else math.inf for p, e in zip(prev, err)]
        else:
            orders = [math.nan] * len(err)
        rows.append(ConvergenceRow(grid.n_interior, grid.h, [complex(x) for x in got], [float(e) for e in err], orders))
    return ConvergenceTable(rows, [complex(x) for x in ref], oracle)
