"""Exception hierarchy shared by every module of the package."""


class LdsError(Exception):
    """Base class for all errors raised by ldsdict."""


class DimensionMismatch(LdsError, ValueError):
    pass


class BadDims(DimensionMismatch):
    pass


class SingularSystem(LdsError, ArithmeticError):
    pass


class NotSymmetric(LdsError, ValueError):
    pass


class NotSkewSymmetric(LdsError, ValueError):
    pass


class NotStructured(LdsError, ValueError):
    """Matrix is neither symmetric nor skew-symmetric."""


class FullRankInput(LdsError, ValueError):
    """An orthogonal complement was requested for a basis that spans everything."""


class RankDeficient(LdsError, ValueError):
    pass


class NotStabilized(LdsError, ValueError):
    pass


class NearSingularGram(LdsError, ArithmeticError):
    pass


class Instability(LdsError, ValueError):
    """An eigenvalue magnitude reached or exceeded one."""


class MissingCovariance(LdsError, ValueError):
    pass


class ZeroDiagonal(LdsError, ValueError):
    pass


class ComplexResidue(LdsError, ArithmeticError):
    """A quantity that should be real carries a non-negligible imaginary part."""


class EmptyClass(LdsError, ValueError):
    pass


class EmptyReferenceSet(LdsError, ValueError):
    pass


class TooFewSequences(LdsError, ValueError):
    pass


class EmptyManifest(LdsError, ValueError):
    pass


class ObjectiveIncrease(LdsError, RuntimeError):
    """Raised by the learner when an update raised the objective beyond slack."""
