"""Finite-difference assembly of the Sturmian pencil (A, B).

On a path r(x) the Sturm-Schroedinger equation

    -u'' + l(l+1)/r**2 u + kappa_sq u = lam W(r) u

is written in x with d/dr = s(x) d/dx, s = 1/r'(x).  The kinetic term uses the
conservative three-point stencil

    (T u)_j = -s_j [s_{j+1/2}(u_{j+1} - u_j) - s_{j-1/2}(u_j - u_{j-1})] / h**2

with s at half-steps taken from the analytic derivative, and homogeneous
Dirichlet closure at both ends.  The pencil is A = T + diag(l(l+1)/r_j**2)
+ kappa_sq I and B = diag(W(r_j)); its eigenvalue is the eigencharge lam.
"""

import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .contour import ContourSpec, Grid, contour_point, inverse_derivative
from .errors import InvalidProblem, SingularWeight

__all__ = [
    "WeightKind",
    "Weight",
    "ProblemSpec",
    "OperatorPencil",
    "assemble_kinetic",
    "assemble_pencil",
    "evaluate_weight",
    "pencil_from_matrices",
    "DEFAULT_WEIGHT_FLOOR",
]

DEFAULT_WEIGHT_FLOOR = 1e-12


class WeightKind(str, Enum):
    IDENTITY = "identity"
    PT_COULOMB = "pt_coulomb"
    COULOMB = "coulomb"
    POWER = "power"


@dataclass(frozen=True)
class Weight:
    """Multiplicative weight W(r).

    ``pt_coulomb`` is i/r, ``coulomb`` is 1/r and ``power`` is r**power for an
    integer power >= -2 (power = -2 is experimental).
    """

    kind: WeightKind = WeightKind.PT_COULOMB
    power: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", WeightKind(self.kind))
        if self.kind is WeightKind.POWER:
            if self.power is None or int(self.power) != self.power:
                raise InvalidProblem("power weight needs an integer exponent")
            if self.power < -2:
                raise InvalidProblem(f"power weight exponent must be >= -2, got {self.power}")
            object.__setattr__(self, "power", int(self.power))
        elif self.power is not None:
            raise InvalidProblem(f"weight {self.kind.value!r} takes no exponent")

    @property
    def experimental(self):
        return self.kind is WeightKind.POWER and self.power == -2

    @classmethod
    def identity(cls):
        return cls(WeightKind.IDENTITY)

    @classmethod
    def pt_coulomb(cls):
        return cls(WeightKind.PT_COULOMB)

    @classmethod
    def coulomb(cls):
        return cls(WeightKind.COULOMB)

    @classmethod
    def r_power(cls, n):
        return cls(WeightKind.POWER, n)

    def label(self):
        if self.kind is WeightKind.POWER:
            return f"power({self.power})"
        return self.kind.value


def _reciprocal(r):
    # conj(r)/|r|^2 keeps mirrored nodes exact conjugates of each other
    d = r.real * r.real + r.imag * r.imag
    return (r.real / d) + 1j * (-r.imag / d)


def _int_power(z, n):
    out = np.ones_like(z)
    for _ in range(n):
        out = out * z
    return out


def evaluate_weight(weight, r):
    r = np.asarray(r, dtype=complex)
    if weight.kind is WeightKind.IDENTITY:
        return np.ones_like(r)
    if weight.kind is WeightKind.COULOMB:
        return _reciprocal(r)
    if weight.kind is WeightKind.PT_COULOMB:
        inv = _reciprocal(r)
        return -inv.imag + 1j * inv.real
    if weight.power >= 0:
        return _int_power(r, weight.power)
    return _int_power(_reciprocal(r), -weight.power)


@dataclass(frozen=True)
class ProblemSpec:
    """Physical and numerical parameters of one Sturmian pencil."""

    ell: float
    kappa_sq: complex
    weight: Weight
    contour: ContourSpec
    grid: Grid
    weight_floor: float = DEFAULT_WEIGHT_FLOOR

    def __post_init__(self):
        if isinstance(self.ell, complex) or np.iscomplexobj(self.ell):
            raise InvalidProblem("ell must be real")
        ell = float(self.ell)
        if not np.isfinite(ell):
            raise InvalidProblem("ell must be finite")
        object.__setattr__(self, "ell", ell)
        object.__setattr__(self, "kappa_sq", complex(self.kappa_sq))
        if self.contour.is_real and self.grid.x_min < 0.0:
            raise InvalidProblem("the real half-line requires x_min >= 0")

    @property
    def centrifugal_strength(self):
        return self.ell * (self.ell + 1.0)

    def replace(self, **changes):
        fields = dict(
            ell=self.ell,
            kappa_sq=self.kappa_sq,
            weight=self.weight,
            contour=self.contour,
            grid=self.grid,
            weight_floor=self.weight_floor,
        )
        fields.update(changes)
        return ProblemSpec(**fields)

    @classmethod
    def pt_coulomb_demo(cls, n_interior=400, ell=0.0, kappa_sq=1.0, half_width=6.0):
        return cls(
            ell=ell,
            kappa_sq=kappa_sq,
            weight=Weight.pt_coulomb(),
            contour=ContourSpec.parabola(),
            grid=Grid(-half_width, half_width, n_interior),
        )

    @classmethod
    def hermitian_coulomb(cls, kappa=0.5, ell=0.0, length=40.0, n_interior=2000):
        return cls(
            ell=ell,
            kappa_sq=kappa * kappa,
            weight=Weight.coulomb(),
            contour=ContourSpec.real_half_line(),
            grid=Grid(0.0, length, n_interior),
        )


@dataclass(frozen=True, eq=False)
class OperatorPencil:
    """Dense pencil A v = lam B v with diagonal B.

    ``a_matrix`` is the full left-hand operator of the Sturmian equation,
    kappa_sq shift included; this is the H that enters every identity check.
    """

    a_matrix: np.ndarray
    weights: np.ndarray
    kappa_sq: complex = 0.0
    spec: ProblemSpec | None = field(default=None, repr=False)

    def __post_init__(self):
        a = np.array(self.a_matrix, dtype=complex)
        w = np.array(self.weights, dtype=complex).ravel()
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise InvalidProblem(f"A must be square, got shape {a.shape}")
        if w.shape[0] != a.shape[0]:
            raise InvalidProblem("weight vector length does not match A")
        if np.any(w == 0):
            raise SingularWeight("B has a zero diagonal entry")
        a.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "a_matrix", a)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "kappa_sq", complex(self.kappa_sq))

    @property
    def dim(self):
        return self.a_matrix.shape[0]

    @property
    def b_matrix(self):
        return np.diag(self.weights)

    @property
    def hamiltonian(self):
        return self.a_matrix

    @property
    def schrodinger_part(self):
        """A - kappa_sq I, i.e. kinetic plus centrifugal terms only."""
        return self.a_matrix - self.kappa_sq * np.eye(self.dim)

    def reduced(self):
        """C = B^-1 A, formed by row scaling."""
        return self.a_matrix / self.weights[:, None]

    def bandwidth(self):
        rows, cols = np.nonzero(self.a_matrix)
        return int(np.max(np.abs(rows - cols))) if rows.size else 0

    def is_hermitian_definite(self):
        """True when A is real symmetric and B is real positive."""
        a = self.a_matrix
        return (
            not np.any(a.imag)
            and not np.any(self.weights.imag)
            and bool(np.all(self.weights.real > 0))
            and np.array_equal(a, a.T)
        )


def pencil_from_matrices(a_matrix, b_matrix=None, kappa_sq=0.0):
    """Wrap user matrices; ``b_matrix`` must be diagonal (None means identity)."""
    a = np.asarray(a_matrix, dtype=complex)
    if b_matrix is None:
        w = np.ones(a.shape[0], dtype=complex)
    else:
        b = np.asarray(b_matrix, dtype=complex)
        if b.ndim == 1:
            w = b
        else:
            w = np.diag(b).copy()
            if np.any(b - np.diag(w)):
                raise InvalidProblem("only diagonal weight matrices are supported")
    return OperatorPencil(a, w, kappa_sq)


def _kinetic_bands(spec):
    grid, contour = spec.grid, spec.contour
    x, h = grid.nodes, grid.h
    s = inverse_derivative(contour, x)
    s_up = inverse_derivative(contour, x + 0.5 * h)
    s_dn = inverse_derivative(contour, x - 0.5 * h)
    inv_h2 = 1.0 / (h * h)
    diag = s * (s_up + s_dn) * inv_h2
    upper = -(s[:-1] * s_up[:-1]) * inv_h2
    lower = -(s[1:] * s_dn[1:]) * inv_h2
    return lower, diag, upper


def assemble_kinetic(spec):
    """Dense tridiagonal matrix of -(s d/dx)(s d/dx) on the interior nodes."""
    lower, diag, upper = _kinetic_bands(spec)
    n = spec.grid.n_interior
    t = np.zeros((n, n), dtype=complex)
    idx = np.arange(n)
    t[idx, idx] = diag
    t[idx[:-1], idx[1:]] = upper
    t[idx[1:], idx[:-1]] = lower
    return t


def assemble_pencil(spec):
    r = contour_point(spec.contour, spec.grid.nodes)
    abs_r = np.abs(r)
    floor = spec.weight_floor
    if np.any(abs_r <= floor * max(1.0, abs_r.max())):
        j = int(np.argmin(abs_r))
        raise SingularWeight(f"contour passes within {abs_r[j]:.2e} of r = 0 at x = {spec.grid.nodes[j]:.6g}")
    w = evaluate_weight(spec.weight, r)
    abs_w = np.abs(w)
    if np.any(abs_w <= floor * abs_w.max()):
        j = int(np.argmin(abs_w))
        raise SingularWeight(f"|W| = {abs_w[j]:.2e} at x = {spec.grid.nodes[j]:.6g} is below the floor")
    if spec.weight.experimental:
        warnings.warn("weight r**-2 is experimental", stacklevel=2)

    a = assemble_kinetic(spec)
    inv_r = _reciprocal(r)
    centrifugal = spec.centrifugal_strength * (inv_r * inv_r)
    idx = np.arange(spec.grid.n_interior)
    a[idx, idx] += centrifugal + spec.kappa_sq
    return OperatorPencil(a, w, spec.kappa_sq, spec)
