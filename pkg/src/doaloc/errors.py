"""Exception and warning types raised across the package."""


class DoalocError(Exception):
    """Base class for package errors."""


class DegenerateVectorError(DoalocError, ValueError):
    """A direction was requested for a (near) zero-length vector."""


class EmptyInputError(DoalocError, ValueError):
    pass


class NonPositiveScaleError(DoalocError, ValueError):
    pass


class InfeasibleError(DoalocError, RuntimeError):
    """The equality constraints of a lifted problem are inconsistent."""


class SolverError(DoalocError, RuntimeError):
    """The SDP solver stopped without a usable solution."""


class RankDeficientWarning(UserWarning):
    """The linear system has fewer than 12 (or 36) independent columns."""


class DegenerateSpectrumWarning(UserWarning):
    pass


class DegenerateTopWarning(UserWarning):
    """The two leading singular values of the lifted solution nearly coincide."""


class GimbalLockWarning(UserWarning):
    pass


class AmbiguousSolutionWarning(UserWarning):
    """The relaxed solution is far from rank one; the pose is not determined."""
