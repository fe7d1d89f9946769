import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ptsturm.assembly import ProblemSpec, assemble_pencil, pencil_from_matrices
from ptsturm.eigensolve import (
    DEFAULT_TOL_EIG,
    biorthonormalize,
    classify_reality,
    eigencharges_only,
    greedy_match,
    metric_gauge,
    nearest_neighbor_gaps,
    solve_pencil,
)
from ptsturm.errors import DegenerateSpectrum, NearDefectivePair, PairingAmbiguity

UPPER = np.array([[1.0, 1.0], [0.0, 2.0]])


def parallel(u, v):
    """|<u, v>| = |u| |v|, i.e. equal up to a complex factor."""
    return abs(abs(np.vdot(u, v)) - np.linalg.norm(u) * np.linalg.norm(v)) < 1e-12


def test_diagonal_pencil():
    sp = solve_pencil(pencil_from_matrices(np.diag([2.0, 6.0]), np.diag([1.0, 2.0])))
    np.testing.assert_allclose(sp.eigencharges, [2, 3], atol=1e-14)
    np.testing.assert_allclose(sp.right_vectors, np.eye(2), atol=1e-15)


def test_upper_triangular_vectors():
    sp = solve_pencil(pencil_from_matrices(UPPER))
    np.testing.assert_allclose(sp.eigencharges, [1, 2], atol=1e-14)
    np.testing.assert_allclose(sp.right_vectors[:, 0], [1, 0], atol=1e-15)
    np.testing.assert_allclose(sp.right_vectors[:, 1], np.array([1, 1]) / np.sqrt(2), atol=1e-15)
    assert parallel(sp.left_vectors[:, 0], [1, -1])
    assert parallel(sp.left_vectors[:, 1], [0, 1])


@pytest.mark.parametrize("method", ["paired", "adjoint"])
def test_hermitian_left_equals_right(method):
    rng = np.random.default_rng(3)
    m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
    sp = solve_pencil(pencil_from_matrices(m + m.conj().T), method=method)
    assert np.max(np.abs(sp.eigencharges.imag)) < 1e-12
    for k in range(6):
        assert parallel(sp.left_vectors[:, k], sp.right_vectors[:, k])


def test_upper_triangular_max_convention():
    p = pencil_from_matrices(UPPER)
    sp = biorthonormalize(solve_pencil(p), p, convention="max")
    np.testing.assert_allclose(sp.right_vectors, [[1, 1], [0, 1]], atol=1e-15)
    np.testing.assert_allclose(sp.left_vectors, [[1, 0], [-1, 1]], atol=1e-15)
    np.testing.assert_allclose(sp.biorthogonality_matrix(p.weights), np.eye(2), atol=1e-15)


def test_diagonal_pencil_unit_convention():
    p = pencil_from_matrices(np.diag([2.0, 6.0]), np.diag([1.0, 2.0]))
    sp = biorthonormalize(solve_pencil(p), p, convention="unit")
    np.testing.assert_allclose(sp.right_vectors, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(sp.left_vectors, np.diag([1.0, 0.5]), atol=1e-15)


def test_hermitian_orthonormal_is_unchanged():
    p = pencil_from_matrices([[2.0, 1.0], [1.0, 2.0]])
    raw = solve_pencil(p)
    for conv in ("unit", "balanced", "metric"):
        sp = biorthonormalize(raw, p, convention=conv)
        np.testing.assert_allclose(np.abs(sp.right_vectors), np.abs(raw.right_vectors), atol=1e-14)
        np.testing.assert_allclose(sp.left_vectors, sp.right_vectors, atol=1e-14)


def test_unit_convention_phase():
    p = assemble_pencil(ProblemSpec.pt_coulomb_demo(n_interior=40))
    sp = biorthonormalize(solve_pencil(p), p, convention="unit")
    r = sp.right_vectors
    np.testing.assert_allclose(np.linalg.norm(r, axis=0), 1.0, rtol=1e-13)
    first = np.argmax(np.abs(r) >= 1e-6 * np.abs(r).max(axis=0), axis=0)
    pivot = r[first, np.arange(r.shape[1])]
    assert np.all(pivot.real > 0)
    np.testing.assert_allclose(pivot.imag, 0.0, atol=1e-15)


@pytest.mark.parametrize("convention", ["metric", "max", "unit", "balanced"])
def test_biorthonormality_on_pt_problem(convention):
    p = assemble_pencil(ProblemSpec.pt_coulomb_demo(n_interior=40))
    sp = biorthonormalize(solve_pencil(p), p, convention=convention)
    g = sp.biorthogonality_matrix(p.weights)
    assert np.max(np.abs(g - np.eye(40))) < 1e-10 * sp.condition_scale()
    assert sp.convention == convention


def test_unknown_convention():
    p = pencil_from_matrices(UPPER)
    with pytest.raises(ValueError):
        biorthonormalize(solve_pencil(p), p, convention="nope")


def test_residual_bound_on_pt_problem():
    p = assemble_pencil(ProblemSpec.pt_coulomb_demo(n_interior=120))
    sp = solve_pencil(p)
    assert np.max(sp.residuals) <= DEFAULT_TOL_EIG
    assert np.max(sp.left_residuals) <= DEFAULT_TOL_EIG


def test_sorted_by_real_then_imag():
    p = assemble_pencil(ProblemSpec.pt_coulomb_demo(n_interior=60))
    lam = solve_pencil(p).eigencharges
    keys = list(zip(lam.real, lam.imag))
    assert keys == sorted(keys)


def test_methods_agree_on_pt_problem():
    p = assemble_pencil(ProblemSpec.pt_coulomb_demo(n_interior=50))
    a = solve_pencil(p, method="paired")
    b = solve_pencil(p, method="adjoint")
    np.testing.assert_allclose(a.eigencharges, b.eigencharges, rtol=1e-9)
    for k in range(50):
        assert abs(abs(np.vdot(a.left_vectors[:, k], b.left_vectors[:, k])) - 1) < 1e-6


def test_adjoint_method_flags_ambiguous_pairing():
    # a doubly degenerate eigenvalue makes the conjugate match ambiguous
    p = pencil_from_matrices(np.diag([1.0, 1.0, 3.0]))
    with pytest.warns(PairingAmbiguity):
        sp = solve_pencil(p, method="adjoint")
    assert sp.degenerate_flags[:2].all() and not sp.degenerate_flags[2]


def test_degenerate_spectrum_rejected():
    p = pencil_from_matrices(np.diag([1.0, 1.0, 3.0]))
    sp = solve_pencil(p)
    with pytest.raises(DegenerateSpectrum):
        biorthonormalize(sp, p)
    relaxed = biorthonormalize(sp, p, strict=False)
    assert relaxed.degenerate_flags.tolist() == [True, True, False]


def test_near_defective_pair_rejected():
    # [[0, 1], [e, 0]] approaches a Jordan block as e -> 0; here |l^H r| ~ 2e-10
    p = pencil_from_matrices([[0.0, 1.0], [1e-20, 0.0]])
    sp = solve_pencil(p)
    with pytest.raises(NearDefectivePair):
        biorthonormalize(sp, p, degeneracy_tol=0.0)
    relaxed = biorthonormalize(sp, p, degeneracy_tol=0.0, strict=False)
    assert relaxed.defect_flags.all()


def test_metric_gauge_makes_series_hermitian(crypto):
    p, _ = crypto
    sp = biorthonormalize(solve_pencil(p), p, convention="balanced")
    theta = sp.left_vectors @ (sp.left_vectors.conj().T * p.weights[None, :])
    assert np.max(np.abs(theta - theta.conj().T)) / np.max(np.abs(theta)) > 1e-3
    d, residual = metric_gauge(sp.right_vectors, sp.left_vectors)
    assert d is not None and np.all(d > 0)
    assert residual < 1e-12
    l = sp.left_vectors * np.sqrt(d)[None, :]
    theta = l @ (l.conj().T * p.weights[None, :])
    assert np.max(np.abs(theta - theta.conj().T)) / np.max(np.abs(theta)) < 1e-12


def test_metric_gauge_reports_failure_when_impossible():
    # every eigencharge of this PT problem is complex
    p = assemble_pencil(ProblemSpec.pt_coulomb_demo(n_interior=30))
    sp = biorthonormalize(solve_pencil(p), p, convention="balanced")
    assert classify_reality(sp).n_real == 0
    d, residual = metric_gauge(sp.right_vectors, sp.left_vectors)
    assert d is None and residual > 1e-6
    fallback = biorthonormalize(solve_pencil(p), p, convention="metric")
    np.testing.assert_array_equal(fallback.right_vectors, sp.right_vectors)
    assert fallback.gauge_residual == residual


def test_classify_reality_examples():
    rep = classify_reality(np.array([1.0, 2.0, 3.0]))
    assert (rep.n_real, rep.n_complex_pairs, rep.broken) == (3, 0, False)
    rep = classify_reality(np.array([1, 2 + 1j, 2 - 1j]))
    assert (rep.n_real, rep.n_complex_pairs, rep.broken) == (1, 1, False)
    rep = classify_reality(np.array([1, 2 + 1j]))
    assert rep.broken and rep.n_unpaired == 1


@given(st.lists(st.complex_numbers(max_magnitude=100, allow_nan=False, allow_infinity=False), max_size=30))
def test_reality_counts_add_up(values):
    lam = np.array(values + [v.conjugate() for v in values[::2]], dtype=complex)
    rep = classify_reality(lam)
    assert rep.total == len(lam)
    assert rep.broken == (rep.n_unpaired > 0)


def test_greedy_match():
    a = np.array([1, 2, 3], dtype=complex)
    b = np.array([3.01, 0.99, 2.0])
    perm, dist, amb = greedy_match(a, b, tol=0.1)
    assert perm.tolist() == [1, 2, 0]
    assert np.max(dist) < 0.011
    assert not amb.any()
    _, _, amb = greedy_match(a, np.array([1.0, 1.05, 3.0]), tol=0.1)
    assert amb.tolist() == [True, False, False]


def test_nearest_neighbor_gaps():
    gaps = nearest_neighbor_gaps(np.array([0, 1, 3 + 0j]))
    np.testing.assert_allclose(gaps, [1, 1, 2])
    assert nearest_neighbor_gaps(np.array([5.0])).tolist() == [np.inf]


def test_fast_path_matches_full_solve():
    p = assemble_pencil(ProblemSpec.hermitian_coulomb(n_interior=150))
    fast = eigencharges_only(p)
    full = solve_pencil(p, polish=False).eigencharges
    np.testing.assert_allclose(fast, full, rtol=1e-10)
    q = assemble_pencil(ProblemSpec.pt_coulomb_demo(n_interior=60))
    np.testing.assert_allclose(eigencharges_only(q), solve_pencil(q).eigencharges, rtol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 12), st.integers(0, 2**32 - 1))
def test_random_pencils_biorthonormal_and_complete(n, seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    w = rng.uniform(0.5, 2.0, n) * np.exp(1j * rng.uniform(-1, 1, n))
    p = pencil_from_matrices(a, w)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        raw = solve_pencil(p)
    sp = biorthonormalize(raw, p, convention="unit", strict=False)
    if sp.defect_flags.any() or sp.degenerate_flags.any():
        return
    tol = 1e-10 * sp.condition_scale() ** 2
    g = sp.biorthogonality_matrix(p.weights)
    assert np.max(np.abs(g - np.eye(n))) < tol
    comp = sp.right_vectors @ (sp.left_vectors.conj().T * p.weights[None, :])
    assert np.max(np.abs(comp - np.eye(n))) < tol
