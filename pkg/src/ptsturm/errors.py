"""Exception hierarchy shared by all modules."""


class SturmError(Exception):
    """Base class for every error raised by the package."""


class InvalidContour(SturmError, ValueError):
    pass


class InvalidGrid(SturmError, ValueError):
    pass


class InvalidProblem(SturmError, ValueError):
    pass


class SingularWeight(SturmError):
    """The contour passes too close to r = 0 for the weight to be inverted."""


class EigensolverFailure(SturmError):
    pass


class PairingAmbiguity(UserWarning):
    """Two adjoint eigenvalues matched the same eigencharge within tolerance."""


class DegenerateSpectrum(SturmError):
    pass


class NearDefectivePair(SturmError):
    """A left/right pair is nearly self-orthogonal (close to an exceptional point)."""


class RankDeficient(SturmError):
    pass


class AsymmetryExceeded(SturmError):
    pass


class NotPositiveDefinite(SturmError):
    def __init__(self, min_eig, msg=None):
        self.min_eig = float(min_eig)
        super().__init__(msg or f"matrix is not positive definite (min eigenvalue {min_eig:.3e})")


class InputMismatch(SturmError, ValueError):
    pass


class SingularQuantumNumbers(SturmError, ValueError):
    pass


class NonpositiveEnergy(SturmError, ValueError):
    pass


class ConfigError(SturmError):
    pass
