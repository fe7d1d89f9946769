"""Metric operators for biorthonormalized Sturmian spectra.

Notation on the grid: R and L hold right and left eigenvectors as columns,
B = diag(weights), and the normalization is L^H B R = I.  The three routes:

* identity weight:   Theta = L L^H
* single series:     Theta = L (L^H B)
* double series:     Theta = (B^H L) M (L^H B),  M = L^H R

Every route satisfies Theta R = L.  The single and double series are
Hermitian conjugates of each other, so they agree exactly when Theta is
Hermitian; the artifact measures that instead of assuming it.
"""

from dataclasses import dataclass

import numpy as np

from .errors import AsymmetryExceeded, NotPositiveDefinite, RankDeficient

__all__ = [
    "MMatrix",
    "MetricBundle",
    "metric_w_identity",
    "metric_single_series",
    "metric_double_series",
    "m_matrix",
    "factorize_omega",
    "hermitize",
    "build_metric",
    "relative_asymmetry",
    "DEFAULT_TOL_HERM",
    "DEFAULT_PD_FLOOR",
]

DEFAULT_TOL_HERM = 1e-8
DEFAULT_PD_FLOOR = 1e-10


def _max_abs(a):
    return float(np.max(np.abs(a))) if a.size else 0.0


def relative_asymmetry(a):
    """max|a - a^H| / max|a|."""
    scale = _max_abs(a)
    return _max_abs(a - a.conj().T) / scale if scale > 0 else 0.0


def _symmetrize(a):
    return 0.5 * (a + a.conj().T)


def _check_rank(left, rank_tol):
    sv = np.linalg.svd(left, compute_uv=False)
    if rank_tol is None:
        rank_tol = left.shape[0] * np.finfo(float).eps
    if sv[-1] <= rank_tol * sv[0]:
        raise RankDeficient(
            f"left-vector matrix is numerically singular (sigma_min/sigma_max = {sv[-1] / sv[0]:.2e})"
        )


def _require_biorthonormal(spectrum):
    if not spectrum.is_biorthonormal:
        raise ValueError("spectrum must be biorthonormalized first")


def metric_w_identity(spectrum, *, rank_tol=None):
    """Theta = sum_k l_k l_k^H for a spectrum normalized with B = I."""
    _require_biorthonormal(spectrum)
    left = spectrum.left_vectors
    _check_rank(left, rank_tol)
    return _symmetrize(left @ left.conj().T)


def _single_series_raw(spectrum, pencil):
    left = spectrum.left_vectors
    return left @ (left.conj().T * pencil.weights[None, :])


def metric_single_series(
    spectrum,
    pencil,
    *,
    tol_herm=DEFAULT_TOL_HERM,
    rank_tol=None,
    strict=True,
    return_asymmetry=False,
):
    """Theta = sum_k l_k (l_k^H B), then Hermitian-symmetrized.

    The relative asymmetry before symmetrization is compared with
    ``tol_herm * max(1, cond(R))``; exceeding it raises
    :class:`AsymmetryExceeded` when ``strict``.
    """
    _require_biorthonormal(spectrum)
    _check_rank(spectrum.left_vectors, rank_tol)
    raw = _single_series_raw(spectrum, pencil)
    asym = relative_asymmetry(raw)
    limit = tol_herm * spectrum.condition_scale()
    if strict and asym > limit:
        raise AsymmetryExceeded(f"single-series metric asymmetry {asym:.2e} exceeds {limit:.2e}")
    theta = _symmetrize(raw)
    return (theta, asym) if return_asymmetry else theta


@dataclass(frozen=True, eq=False)
class MMatrix:
    """Coefficients M_jk = <lam_j|Theta|lam_k> in three equivalent forms.

    ``m`` is computed as L^H R (needs no Theta).  ``via_left_weight`` is
    (L^H B) B^-1 R and ``via_right_weight`` is L^H B^-1 (B R); they are
    cross-checks only.
    """

    m: np.ndarray
    via_left_weight: np.ndarray
    via_right_weight: np.ndarray

    def representation_spread(self):
        scale = _max_abs(self.m) or 1.0
        return max(_max_abs(self.via_left_weight - self.m), _max_abs(self.via_right_weight - self.m)) / scale

    def hermiticity_defect(self):
        return relative_asymmetry(self.m)


def m_matrix(spectrum, pencil):
    _require_biorthonormal(spectrum)
    left, right, w = spectrum.left_vectors, spectrum.right_vectors, pencil.weights
    lh = left.conj().T
    m = lh @ right
    via_left = (lh * w[None, :]) @ (right / w[:, None])
    via_right = (lh / w[None, :]) @ (w[:, None] * right)
    return MMatrix(m, via_left, via_right)


def metric_double_series(spectrum, pencil, m=None):
    """Theta = sum_jk (B^H l_j) M_jk (l_k^H B)."""
    _require_biorthonormal(spectrum)
    if m is None:
        m = m_matrix(spectrum, pencil)
    coeff = m.m if isinstance(m, MMatrix) else np.asarray(m)
    left, w = spectrum.left_vectors, pencil.weights
    return (w.conj()[:, None] * left) @ coeff @ (left.conj().T * w[None, :])


def factorize_omega(theta, *, pd_floor=DEFAULT_PD_FLOOR, tol_herm=DEFAULT_TOL_HERM):
    """Hermitian positive square root Omega of Theta and its inverse.

    Raises
    ------
    AsymmetryExceeded
        Theta is not Hermitian to ``tol_herm`` (relative).
    NotPositiveDefinite
        min eig(Theta) <= pd_floor * max eig(Theta).
    """
    theta = np.asarray(theta, dtype=complex)
    asym = relative_asymmetry(theta)
    if asym > tol_herm:
        raise AsymmetryExceeded(f"Theta asymmetry {asym:.2e} exceeds {tol_herm:.1e}")
    evals, q = np.linalg.eigh(_symmetrize(theta))
    if evals[-1] <= 0 or evals[0] <= pd_floor * evals[-1]:
        raise NotPositiveDefinite(evals[0])
    root = np.sqrt(evals)
    omega = (q * root[None, :]) @ q.conj().T
    omega_inv = (q / root[None, :]) @ q.conj().T
    return omega, omega_inv


def hermitize(pencil, omega, omega_inv):
    """h = Omega H Omega^-1 and w = Omega W Omega^-1 with H the pencil's A."""
    h = omega @ pencil.a_matrix @ omega_inv
    w = (omega * pencil.weights[None, :]) @ omega_inv
    return h, w


@dataclass(frozen=True, eq=False)
class MetricBundle:
    theta: np.ndarray
    omega: np.ndarray | None
    omega_inv: np.ndarray | None
    h_herm: np.ndarray | None
    w_herm: np.ndarray | None
    theta_min_eig: float
    theta_max_eig: float
    theta_w_min_eig: float
    theta_w_max_eig: float
    asymmetry: float = 0.0
    route: str = "single"

    @property
    def positive_definite(self):
        return self.omega is not None

    def with_theta(self, theta):
        """Copy with Theta replaced; Omega, h and w are carried over unchanged (fault injection)."""
        theta = np.asarray(theta, dtype=complex)
        return MetricBundle(
            theta=theta,
            omega=self.omega,
            omega_inv=self.omega_inv,
            h_herm=self.h_herm,
            w_herm=self.w_herm,
            theta_min_eig=self.theta_min_eig,
            theta_max_eig=self.theta_max_eig,
            theta_w_min_eig=self.theta_w_min_eig,
            theta_w_max_eig=self.theta_w_max_eig,
            asymmetry=max(self.asymmetry, relative_asymmetry(theta)),
            route=self.route,
        )


ROUTES = ("single", "double", "identity")


def build_metric(
    spectrum,
    pencil,
    *,
    route="single",
    tol_herm=DEFAULT_TOL_HERM,
    pd_floor=DEFAULT_PD_FLOOR,
    strict=False,
):
    """Theta by the chosen route, plus Omega, h and w when Theta is positive definite.

    With ``strict=False`` a non-positive or asymmetric Theta still yields a
    bundle (Omega, h, w left as None) so that the verification suite can
    report on it.
    """
    if route == "single":
        theta, asym = metric_single_series(
            spectrum, pencil, tol_herm=tol_herm, strict=strict, return_asymmetry=True
        )
    elif route == "double":
        raw = metric_double_series(spectrum, pencil)
        asym = relative_asymmetry(raw)
        limit = tol_herm * spectrum.condition_scale()
        if strict and asym > limit:
            raise AsymmetryExceeded(f"double-series metric asymmetry {asym:.2e} exceeds {limit:.2e}")
        theta = _symmetrize(raw)
    elif route == "identity":
        if np.any(pencil.weights != 1):
            raise ValueError("the identity-weight route needs B = I")
        theta, asym = metric_w_identity(spectrum), 0.0
    else:
        raise ValueError(f"unknown route {route!r}; choose from {ROUTES}")

    evals = np.linalg.eigvalsh(theta)
    tw = theta * pencil.weights[None, :]
    tw_evals = np.linalg.eigvalsh(_symmetrize(tw))
    omega = omega_inv = h = w = None
    try:
        omega, omega_inv = factorize_omega(theta, pd_floor=pd_floor, tol_herm=np.inf)
    except NotPositiveDefinite:
        if strict:
            raise
    else:
        h, w = hermitize(pencil, omega, omega_inv)
    return MetricBundle(
        theta=theta,
        omega=omega,
        omega_inv=omega_inv,
        h_herm=h,
        w_herm=w,
        theta_min_eig=float(evals[0]),
        theta_max_eig=float(evals[-1]),
        theta_w_min_eig=float(tw_evals[0]),
        theta_w_max_eig=float(tw_evals[-1]),
        asymmetry=asym,
        route=route,
    )
