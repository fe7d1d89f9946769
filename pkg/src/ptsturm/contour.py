"""Integration paths r(x) and the uniform interior grid in x.

Two paths are supported: the real half-line r = x, and the left-right
symmetric parabola

    r(x) = alpha*x + i*(beta*x**2 - gamma),   x in (-inf, inf),

which with the defaults (2, 1, 1) passes below the Coulomb singularity at
r(0) = -i.  All evaluations are done with explicit real/imaginary parts so
that mirrored nodes give bit-exact complex conjugates of each other.
"""

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np

from .errors import InvalidContour, InvalidGrid

__all__ = [
    "ContourKind",
    "ContourSpec",
    "Grid",
    "contour_point",
    "contour_derivative",
    "inverse_derivative",
    "make_grid",
]


class ContourKind(str, Enum):
    REAL_HALF_LINE = "real_half_line"
    COMPLEX_PARABOLA = "complex_parabola"


@dataclass(frozen=True)
class ContourSpec:
    kind: ContourKind = ContourKind.COMPLEX_PARABOLA
    alpha: float = 2.0
    beta: float = 1.0
    gamma: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "kind", ContourKind(self.kind))
        for name in ("alpha", "beta", "gamma"):
            value = getattr(self, name)
            if isinstance(value, complex) or not np.isfinite(value):
                raise InvalidContour(f"{name} must be a finite real number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if self.kind is ContourKind.COMPLEX_PARABOLA:
            if self.alpha == 0.0:
                raise InvalidContour("alpha must be nonzero for the parabola")
            if self.beta < 0.0:
                raise InvalidContour("beta must be non-negative for the parabola")

    @classmethod
    def real_half_line(cls):
        return cls(ContourKind.REAL_HALF_LINE)

    @classmethod
    def parabola(cls, alpha=2.0, beta=1.0, gamma=1.0):
        return cls(ContourKind.COMPLEX_PARABOLA, alpha, beta, gamma)

    @property
    def is_real(self):
        return self.kind is ContourKind.REAL_HALF_LINE


def contour_point(spec, x):
    """Return r(x).  Accepts a scalar or an array of abscissas."""
    x = np.asarray(x, dtype=float)
    if spec.is_real:
        out = x.astype(complex)
    else:
        out = spec.alpha * x + 1j * (spec.beta * x * x - spec.gamma)
    return out[()] if out.ndim == 0 else out


def contour_derivative(spec, x):
    """Return dr/dx."""
    x = np.asarray(x, dtype=float)
    if spec.is_real:
        out = np.ones_like(x, dtype=complex)
    else:
        out = spec.alpha + 2j * spec.beta * x
    return out[()] if out.ndim == 0 else out


def inverse_derivative(spec, x):
    """Return s(x) = 1/r'(x), computed as conj(r')/|r'|**2 (odd-symmetric imaginary part)."""
    x = np.asarray(x, dtype=float)
    if spec.is_real:
        out = np.ones_like(x, dtype=complex)
    else:
        im = 2.0 * spec.beta * x
        denom = spec.alpha * spec.alpha + im * im
        out = (spec.alpha / denom) + 1j * (-im / denom)
    return out[()] if out.ndim == 0 else out


@dataclass(frozen=True)
class Grid:
    """Uniform grid of ``n_interior`` nodes strictly inside (x_min, x_max).

    Both endpoints carry homogeneous Dirichlet conditions and are not nodes.
    """

    x_min: float
    x_max: float
    n_interior: int

    def __post_init__(self):
        x_min, x_max = float(self.x_min), float(self.x_max)
        if not (np.isfinite(x_min) and np.isfinite(x_max)):
            raise InvalidGrid("grid endpoints must be finite")
        if int(self.n_interior) != self.n_interior:
            raise InvalidGrid(f"n_interior must be an integer, got {self.n_interior!r}")
        if not x_max > x_min:
            raise InvalidGrid(f"need x_max > x_min, got [{x_min}, {x_max}]")
        if self.n_interior < 3:
            raise InvalidGrid(f"need at least 3 interior nodes, got {self.n_interior}")
        object.__setattr__(self, "x_min", x_min)
        object.__setattr__(self, "x_max", x_max)
        object.__setattr__(self, "n_interior", int(self.n_interior))

    @property
    def h(self):
        return (self.x_max - self.x_min) / (self.n_interior + 1)

    @cached_property
    def nodes(self):
        # Offsets k - (n+1)/2 are exact half-integers, so a grid symmetric
        # about zero has exactly antisymmetric nodes.
        center = 0.5 * (self.x_min + self.x_max)
        k = np.arange(1, self.n_interior + 1, dtype=float)
        nodes = center + self.h * (k - 0.5 * (self.n_interior + 1))
        nodes.setflags(write=False)
        return nodes

    def refined(self):
        """Grid on the same interval with the spacing halved."""
        return Grid(self.x_min, self.x_max, 2 * self.n_interior + 1)

    def is_symmetric(self):
        return self.x_min == -self.x_max


def make_grid(x_min, x_max, n_interior):
    return Grid(x_min, x_max, n_interior)
