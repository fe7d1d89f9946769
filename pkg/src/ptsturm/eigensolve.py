"""Right and left eigenpairs of the pencil A v = lam B v.

The pencil is reduced to C = B^-1 A (B is diagonal).  Right vectors of the
pencil are eigenvectors of C.  A left vector l solves A^H l = conj(lam) B^H l,
equivalently C^H y = conj(lam) y with y = B^H l.  Left vectors are always
obtained as genuine eigenvectors, never by inverting the right-vector matrix,
so a nearly self-orthogonal pair shows up as a small l^H B r.
"""

import warnings
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np
import scipy.linalg
from scipy.spatial import cKDTree

from .errors import (
    DegenerateSpectrum,
    EigensolverFailure,
    NearDefectivePair,
    PairingAmbiguity,
)

__all__ = [
    "Spectrum",
    "RealityReport",
    "solve_pencil",
    "biorthonormalize",
    "classify_reality",
    "greedy_match",
    "metric_gauge",
    "nearest_neighbor_gaps",
    "eigencharges_only",
    "DEFAULT_TOL_EIG",
    "DEFAULT_DEFECT_TOL",
    "DEFAULT_REALITY_TOL",
    "CONVENTIONS",
]

DEFAULT_TOL_EIG = 1e-10
DEFAULT_POLISH_TOL = 1e-12
DEFAULT_DEFECT_TOL = 1e-8
DEFAULT_REALITY_TOL = 1e-8
DEFAULT_PAIR_TOL = 1e-6
DEGENERACY_REL = 1e-8
SIGNIFICANT = 1e-6

DEFAULT_GAUGE_TOL = 1e-10

CONVENTIONS = ("metric", "max", "unit", "balanced")


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Eigencharges with column-stacked right (ket) and left (double-ket) vectors.

    After :func:`biorthonormalize`, ``left_vectors[:, j].conj() @ B @
    right_vectors[:, k]`` is the Kronecker delta and ``convention`` names the
    gauge that fixed the remaining scale freedom.
    """

    eigencharges: np.ndarray
    right_vectors: np.ndarray
    left_vectors: np.ndarray
    residuals: np.ndarray
    left_residuals: np.ndarray
    pairing_residuals: np.ndarray
    degenerate_flags: np.ndarray
    defect_flags: np.ndarray = None
    convention: str | None = None
    method: str = "paired"
    gauge_residual: float | None = None

    def __post_init__(self):
        if self.defect_flags is None:
            object.__setattr__(self, "defect_flags", np.zeros(len(self.eigencharges), dtype=bool))

    def __len__(self):
        return len(self.eigencharges)

    @property
    def dim(self):
        return len(self.eigencharges)

    @property
    def is_biorthonormal(self):
        return self.convention is not None

    @cached_property
    def condition(self):
        """2-norm condition number of the column-normalized right-vector matrix."""
        r = self.right_vectors / np.linalg.norm(self.right_vectors, axis=0)
        return float(np.linalg.cond(r))

    def condition_scale(self):
        return max(1.0, self.condition)

    def biorthogonality_matrix(self, weights):
        return (self.left_vectors.conj().T * weights[None, :]) @ self.right_vectors


@dataclass(frozen=True)
class RealityReport:
    n_real: int
    n_complex_pairs: int
    n_unpaired: int
    broken: bool
    max_abs_imag: float

    @property
    def total(self):
        return self.n_real + 2 * self.n_complex_pairs + self.n_unpaired


def greedy_match(a, b, tol=None):
    """Pair a[i] with b[perm[i]] by global greedy nearest distance.

    Returns ``(perm, distance, ambiguous)`` where ``ambiguous[i]`` is True when
    more than one entry of ``b`` lies within ``tol`` of ``a[i]``.
    """
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    n = len(a)
    if len(b) != n:
        raise ValueError("greedy_match needs sequences of equal length")
    dist = np.abs(a[:, None] - b[None, :])
    order = np.argsort(dist, axis=None, kind="stable")
    perm = np.full(n, -1)
    used_a = np.zeros(n, dtype=bool)
    used_b = np.zeros(n, dtype=bool)
    matched = 0
    for flat in order:
        i, j = divmod(int(flat), n)
        if used_a[i] or used_b[j]:
            continue
        perm[i] = j
        used_a[i] = used_b[j] = True
        matched += 1
        if matched == n:
            break
    distance = dist[np.arange(n), perm]
    if tol is None:
        ambiguous = np.zeros(n, dtype=bool)
    else:
        ambiguous = (dist <= tol).sum(axis=1) > 1
    return perm, distance, ambiguous


def nearest_neighbor_gaps(values):
    """Distance from each complex value to its nearest other value."""
    values = np.asarray(values, dtype=complex)
    if len(values) < 2:
        return np.full(len(values), np.inf)
    pts = np.column_stack([values.real, values.imag])
    d, _ = cKDTree(pts).query(pts, k=2)
    return d[:, 1]


def _default_degeneracy_tol(lam):
    return DEGENERACY_REL * max(1.0, float(np.max(np.abs(lam)))) if len(lam) else 0.0


def _matrix_norm(a):
    return float(np.linalg.norm(a, np.inf))


def _right_residuals(pencil, lam, r):
    a = pencil.a_matrix
    w = pencil.weights
    res = np.linalg.norm(a @ r - (w[:, None] * r) * lam[None, :], axis=0)
    scale = (_matrix_norm(a) + np.abs(lam) * np.max(np.abs(w))) * np.linalg.norm(r, axis=0)
    return res / scale


def _left_residuals(pencil, lam, l):
    a = pencil.a_matrix
    w = pencil.weights
    res = np.linalg.norm(a.conj().T @ l - (w.conj()[:, None] * l) * lam.conj()[None, :], axis=0)
    scale = (_matrix_norm(a) + np.abs(lam) * np.max(np.abs(w))) * np.linalg.norm(l, axis=0)
    return res / scale


def _tridiagonal_bands(c):
    n = c.shape[0]
    ab = np.zeros((3, n), dtype=complex)
    ab[0, 1:] = np.diagonal(c, 1)
    ab[1, :] = np.diagonal(c)
    ab[2, :-1] = np.diagonal(c, -1)
    return ab


def _inverse_iteration(m, shift, v, banded, steps=2):
    n = m.shape[0]
    scale = max(_matrix_norm(m), 1.0)
    sigma = shift + 16 * np.finfo(float).eps * scale
    if banded is not None:
        ab = banded.copy()
        ab[1] -= sigma
        solve = lambda rhs: scipy.linalg.solve_banded((1, 1), ab, rhs)
    else:
        lu = scipy.linalg.lu_factor(m - sigma * np.eye(n), check_finite=False)
        solve = lambda rhs: scipy.linalg.lu_solve(lu, rhs, check_finite=False)
    for _ in range(steps):
        v = solve(v)
        v = v / np.linalg.norm(v)
    return v


def _polish(pencil, lam, r, y, tol):
    """Inverse-iteration refinement of pairs whose residual exceeds ``tol``."""
    res_r = _right_residuals(pencil, lam, r)
    l = y / pencil.weights.conj()[:, None]
    res_l = _left_residuals(pencil, lam, l)
    bad = np.nonzero((res_r > tol) | (res_l > tol))[0]
    if bad.size == 0:
        return r, y
    c = pencil.reduced()
    ch = c.conj().T
    tri = pencil.bandwidth() <= 1
    band_c = _tridiagonal_bands(c) if tri else None
    band_ch = _tridiagonal_bands(ch) if tri else None
    r = r.copy()
    y = y.copy()
    with np.errstate(all="ignore"):
        for k in bad:
            try:
                if res_r[k] > tol:
                    cand = _inverse_iteration(c, lam[k], r[:, k], band_c)
                    new = _right_residuals(pencil, lam[k : k + 1], cand[:, None])[0]
                    if np.isfinite(new) and new < res_r[k]:
                        r[:, k] = cand
                if res_l[k] > tol:
                    cand = _inverse_iteration(ch, np.conj(lam[k]), y[:, k], band_ch)
                    cand_l = cand / pencil.weights.conj()
                    new = _left_residuals(pencil, lam[k : k + 1], cand_l[:, None])[0]
                    if np.isfinite(new) and new < res_l[k]:
                        y[:, k] = cand
            except (np.linalg.LinAlgError, ValueError):
                continue
    return r, y


def _phase_fix(v):
    """Scale columns to unit 2-norm with the first significant entry real positive."""
    v = v / np.linalg.norm(v, axis=0)
    mags = np.abs(v)
    first = np.argmax(mags >= SIGNIFICANT * mags.max(axis=0), axis=0)
    pivot = v[first, np.arange(v.shape[1])]
    return v * (np.abs(pivot) / pivot)[None, :]


def solve_pencil(
    pencil,
    *,
    method="paired",
    polish=True,
    polish_tol=DEFAULT_POLISH_TOL,
    match_tol=None,
    degeneracy_tol=None,
):
    """Full eigendecomposition of the pencil.

    Parameters
    ----------
    pencil : OperatorPencil
    method : {"paired", "adjoint"}
        ``"paired"`` takes right and left eigenvectors of C from one dense
        Schur-based solve.  ``"adjoint"`` decomposes C and C^H separately and
        matches conj(eigenvalues of C^H) to those of C by greedy nearest
        distance; collisions within ``match_tol`` raise a
        :class:`PairingAmbiguity` warning and set ``degenerate_flags``.
    polish : bool
        Refine pairs whose relative residual exceeds ``polish_tol`` by inverse
        iteration.

    Returns
    -------
    Spectrum
        Sorted by (Re lam, Im lam).  Right vectors have unit 2-norm with the
        first significant entry real positive; left vectors have unit 2-norm
        and are phased so that l^H B r is real non-negative.
    """
    c = pencil.reduced()
    if not np.all(np.isfinite(c)):
        raise EigensolverFailure("reduced matrix B^-1 A has non-finite entries")
    n = pencil.dim
    try:
        if method == "paired":
            lam, y, r = scipy.linalg.eig(c, left=True, right=True)
            pairing = np.zeros(n)
            ambiguous = np.zeros(n, dtype=bool)
        elif method == "adjoint":
            lam, r = scipy.linalg.eig(c)
            mu, y = scipy.linalg.eig(c.conj().T)
            if match_tol is None:
                match_tol = _default_degeneracy_tol(lam)
            perm, pairing, ambiguous = greedy_match(lam, mu.conj(), tol=match_tol)
            y = y[:, perm]
            if ambiguous.any():
                warnings.warn(
                    f"{int(ambiguous.sum())} eigencharges matched more than one adjoint eigenvalue",
                    PairingAmbiguity,
                    stacklevel=2,
                )
        else:
            raise ValueError(f"unknown method {method!r}")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise EigensolverFailure(str(exc)) from exc
    if not np.all(np.isfinite(lam)):
        raise EigensolverFailure("eigensolver returned non-finite eigencharges")

    if polish:
        r, y = _polish(pencil, lam, r, y, polish_tol)

    order = np.lexsort((lam.imag, lam.real))
    lam, r, y = lam[order], r[:, order], y[:, order]
    pairing, ambiguous = pairing[order], ambiguous[order]

    r = _phase_fix(r)
    l = y / pencil.weights.conj()[:, None]
    l = l / np.linalg.norm(l, axis=0)
    g = np.einsum("ij,i,ij->j", l.conj(), pencil.weights, r)
    phase = np.where(np.abs(g) > 0, g / np.where(g == 0, 1, np.abs(g)), 1.0)
    l = l * phase[None, :]

    if degeneracy_tol is None:
        degeneracy_tol = _default_degeneracy_tol(lam)
    degenerate = (nearest_neighbor_gaps(lam) < degeneracy_tol) | ambiguous

    return Spectrum(
        eigencharges=lam,
        right_vectors=r,
        left_vectors=l,
        residuals=_right_residuals(pencil, lam, r),
        left_residuals=_left_residuals(pencil, lam, l),
        pairing_residuals=pairing,
        degenerate_flags=degenerate,
        method=method,
    )


def eigencharges_only(pencil):
    """Eigencharges without vectors, sorted by (Re, Im)."""
    if pencil.is_hermitian_definite() and pencil.bandwidth() <= 1:
        # B^-1/2 A B^-1/2 is real symmetric tridiagonal
        a = pencil.a_matrix.real
        s = 1.0 / np.sqrt(pencil.weights.real)
        d = np.diagonal(a) * s * s
        e = np.diagonal(a, 1) * s[:-1] * s[1:]
        lam = scipy.linalg.eigh_tridiagonal(d, e, eigvals_only=True).astype(complex)
    else:
        try:
            lam = scipy.linalg.eigvals(pencil.reduced())
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
            raise EigensolverFailure(str(exc)) from exc
    return lam[np.lexsort((lam.imag, lam.real))]


def biorthonormalize(
    spectrum,
    pencil,
    *,
    convention="metric",
    degeneracy_tol=None,
    defect_tol=DEFAULT_DEFECT_TOL,
    gauge_tol=DEFAULT_GAUGE_TOL,
    strict=True,
):
    """Rescale pairs so that l_j^H B r_k = delta_jk.

    Only the diagonal products are normalized; off-diagonal products vanish
    by eigenvector orthogonality for distinct eigencharges.

    ``convention`` fixes the leftover scale freedom:

    ``"max"``
        right vector divided by its largest-modulus entry (which becomes 1).
    ``"unit"``
        right vector of unit 2-norm, first significant entry real positive.
    ``"balanced"``
        the normalizing factor is split so that |r| and |l| are equal; for a
        Hermitian-definite pencil this gives l = r with r^H B r = 1.
    ``"metric"``
        start from ``"balanced"`` and rescale pairs so that the single-series
        metric L L^H B comes out Hermitian (see :func:`metric_gauge`), i.e.
        normalize <lam|Theta W|lam> = 1 for a Theta that is not known in
        advance.  Falls back to ``"balanced"`` when no positive rescaling
        exists; ``gauge_residual`` records how far from Hermitian it got.

    In every case the left vector absorbs whatever factor remains.

    Raises
    ------
    DegenerateSpectrum
        Two eigencharges closer than ``degeneracy_tol`` (default
        1e-8 * max|lam|).
    NearDefectivePair
        |l^H B r| / (|l| |B| |r|) below ``defect_tol`` for some pair.

    With ``strict=False`` both conditions are recorded in the flags instead.
    """
    if convention not in CONVENTIONS:
        raise ValueError(f"unknown convention {convention!r}; choose from {CONVENTIONS}")
    lam = spectrum.eigencharges
    w = pencil.weights
    if degeneracy_tol is None:
        degeneracy_tol = _default_degeneracy_tol(lam)
    gaps = nearest_neighbor_gaps(lam)
    degenerate = spectrum.degenerate_flags | (gaps < degeneracy_tol)
    if strict and np.any(gaps < degeneracy_tol):
        k = int(np.argmin(gaps))
        raise DegenerateSpectrum(
            f"eigencharge {lam[k]:.10g} is within {gaps[k]:.2e} of another (tolerance {degeneracy_tol:.2e})"
        )

    r = spectrum.right_vectors / np.linalg.norm(spectrum.right_vectors, axis=0)
    l = spectrum.left_vectors / np.linalg.norm(spectrum.left_vectors, axis=0)
    g = np.einsum("ij,i,ij->j", l.conj(), w, r)
    rel = np.abs(g) / np.max(np.abs(w))
    defective = rel < defect_tol
    if strict and defective.any():
        k = int(np.argmin(rel))
        raise NearDefectivePair(
            f"pair {k} (lam = {lam[k]:.10g}) has |l^H B r| = {rel[k]:.2e} < {defect_tol:.1e}; "
            "eigenvectors are close to coalescing"
        )

    if convention == "max":
        idx = np.argmax(np.abs(r), axis=0)
        r = r / r[idx, np.arange(r.shape[1])][None, :]
    elif convention == "unit":
        r = _phase_fix(r)
    else:
        r = _phase_fix(r)
        g = np.einsum("ij,i,ij->j", l.conj(), w, r)
        # c conj(d) g = 1 with |c| = |d| and c > 0
        with np.errstate(divide="ignore", invalid="ignore"):
            r = r / np.sqrt(np.abs(g))[None, :]
    g = np.einsum("ij,i,ij->j", l.conj(), w, r)
    with np.errstate(divide="ignore", invalid="ignore"):
        l = l / g.conj()[None, :]

    gauge_residual = None
    if convention == "metric" and np.all(np.isfinite(l)):
        d, gauge_residual = metric_gauge(r, l, gauge_tol)
        if d is not None:
            root = np.sqrt(d)
            r = r / root[None, :]
            l = l * root[None, :]

    return replace(
        spectrum,
        right_vectors=r,
        left_vectors=l,
        degenerate_flags=degenerate,
        defect_flags=defective,
        convention=convention,
        gauge_residual=gauge_residual,
    )


def metric_gauge(right, left, gauge_tol=DEFAULT_GAUGE_TOL):
    """Positive weights d making L diag(d) L^H B Hermitian, if they exist.

    With L^H B R = I the Hermiticity of that matrix is equivalent to
    N diag(d) being Hermitian, N = R^H L.  The squared violation is the
    quadratic form d^T Q d with

        Q = diag(2 sum_i |N_ij|^2) - 2 Re(N * N^T)   (elementwise product),

    so admissible d span the null space of Q.  The returned d is the
    projection of the all-ones vector onto that null space, scaled to unit
    geometric mean.  Returns ``(d, residual)``; d is None when the null space
    holds no strictly positive vector, and ``residual`` is the smallest
    eigenvalue of Q relative to its trace.
    """
    nmat = right.conj().T @ left
    sq = np.abs(nmat) ** 2
    q = np.diag(2.0 * sq.sum(axis=0)) - 2.0 * np.real(nmat * nmat.T)
    evals, vecs = np.linalg.eigh(q)
    scale = float(np.trace(q)) or 1.0
    residual = max(float(evals[0]), 0.0) / scale
    null = vecs[:, evals <= gauge_tol * scale]
    if null.shape[1] == 0:
        return None, residual
    d = null @ (null.T @ np.ones(len(evals)))
    if np.all(d < 0):
        d = -d
    if not np.all(d > 0):
        d = null[:, 0] * np.sign(null[:, 0].sum())
        if not np.all(d > 0):
            return None, residual
    d = d / np.exp(np.mean(np.log(d)))
    return d, residual


def classify_reality(spectrum, reality_tol=DEFAULT_REALITY_TOL, pair_tol=DEFAULT_PAIR_TOL):
    """Count real eigencharges and complex-conjugate pairs.

    ``spectrum`` may be a :class:`Spectrum` or an array of eigencharges.  An
    eigencharge is real when |Im lam| <= reality_tol (1 + |lam|).  The rest are
    paired by nearest conjugate match; a pair is accepted when
    |lam_j - conj(lam_k)| <= pair_tol (1 + |lam_j|).
    """
    lam = np.asarray(getattr(spectrum, "eigencharges", spectrum), dtype=complex)
    real = np.abs(lam.imag) <= reality_tol * (1.0 + np.abs(lam))
    cplx = lam[~real]
    upper = cplx[cplx.imag > 0]
    lower = cplx[cplx.imag < 0]
    pairs = 0
    if len(upper) and len(lower):
        m = min(len(upper), len(lower))
        dist = np.abs(upper[:, None] - lower.conj()[None, :])
        used_u = np.zeros(len(upper), dtype=bool)
        used_l = np.zeros(len(lower), dtype=bool)
        for flat in np.argsort(dist, axis=None, kind="stable"):
            i, j = divmod(int(flat), len(lower))
            if used_u[i] or used_l[j]:
                continue
            if dist[i, j] > pair_tol * (1.0 + abs(upper[i])):
                break
            used_u[i] = used_l[j] = True
            pairs += 1
            if pairs == m:
                break
    n_real = int(real.sum())
    unpaired = len(lam) - n_real - 2 * pairs
    return RealityReport(
        n_real=n_real,
        n_complex_pairs=pairs,
        n_unpaired=unpaired,
        broken=unpaired > 0,
        max_abs_imag=float(np.max(np.abs(lam.imag))) if len(lam) else 0.0,
    )
