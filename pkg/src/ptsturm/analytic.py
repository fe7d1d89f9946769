"""Closed-form reference values for the Coulomb problems.

The PT-symmetric Coulomb levels are

    E(n, q) = lam**2 / (2n + 1 - q - 2 q ell)**2,   q = +1 or -1 (quasi-parity),

and the Hermitian Coulomb Sturmian charges at fixed kappa are
lam_n = 2 kappa (n + ell + 1).
"""

import math
from dataclasses import dataclass

from .errors import NonpositiveEnergy, SingularQuantumNumbers

__all__ = [
    "QuantumNumbers",
    "pt_coulomb_energy",
    "pt_coulomb_eigencharge",
    "hermitian_coulomb_charge",
]


@dataclass(frozen=True)
class QuantumNumbers:
    n: int
    q: int
    ell: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 0:
            raise ValueError(f"n must be a non-negative integer, got {self.n!r}")
        if self.q not in (1, -1):
            raise ValueError(f"quasi-parity q must be +1 or -1, got {self.q!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "ell", float(self.ell))

    @property
    def denominator(self):
        return 2 * self.n + 1 - self.q - 2 * self.q * self.ell

    def mirrored(self):
        """(q, ell) -> (-q, -ell - 1), which leaves the denominator unchanged."""
        return QuantumNumbers(self.n, -self.q, -self.ell - 1.0)


def _checked_denominator(qn):
    d = qn.denominator
    if d == 0 or not math.isfinite(d):
        raise SingularQuantumNumbers(f"2n + 1 - q - 2 q ell vanishes for n={qn.n}, q={qn.q}, ell={qn.ell}")
    return d


def pt_coulomb_energy(qn, lam):
    d = _checked_denominator(qn)
    return lam * lam / (d * d)


def pt_coulomb_eigencharge(qn, energy):
    """Both charges +-sqrt(E) * denominator that produce ``energy``."""
    d = _checked_denominator(qn)
    if not energy > 0:
        raise NonpositiveEnergy(f"energy must be positive, got {energy!r}")
    lam = math.sqrt(energy) * abs(d)
    return lam, -lam


def hermitian_coulomb_charge(n, ell, kappa):
    if int(n) != n or n < 0:
        raise ValueError(f"n must be a non-negative integer, got {n!r}")
    if not ell > -1.0:
        raise ValueError(f"ell must exceed -1, got {ell!r}")
    if not kappa > 0:
        raise ValueError(f"kappa must be positive, got {kappa!r}")
    return 2.0 * kappa * (n + ell + 1.0)
