"""Exception hierarchy shared by every module of the package."""


class HellyQuantError(Exception):
    """Base class for all library errors."""


class PreconditionError(HellyQuantError, ValueError):
    """An operation was called outside its documented domain."""


class DimensionMismatch(PreconditionError):
    pass


class UnsupportedDimension(PreconditionError):
    pass


class InvalidConfig(PreconditionError):
    pass


class HypothesisViolated(PreconditionError):
    """The input does not satisfy the hypothesis of the theorem being run."""


# geometry / solvers

class EmptyInterior(HellyQuantError):
    pass


class NotBounded(HellyQuantError):
    pass


class SolverStalled(HellyQuantError):
    pass


class VolumeInfeasible(HellyQuantError):
    pass


class SizeBoundViolated(HellyQuantError):
    pass


class NumericalBreakdown(HellyQuantError):
    pass


class Infeasible(HellyQuantError):
    pass


# combinatorial pipelines

class BudgetExceeded(HellyQuantError):
    """Parent of all enumeration/search budget errors (CLI exit code 3)."""


class EnumerationBudgetExceeded(BudgetExceeded):
    pass


class SearchBudgetExceeded(BudgetExceeded):
    pass


class NoGoodTuple(HellyQuantError):
    pass


class CertificationInconclusive(HellyQuantError):
    pass


class InfeasibleEdge(HellyQuantError):
    """Some member contains no ellipsoid of the requested volume."""


class TauInfinite(InfeasibleEdge):
    pass


class CertificateFailure(HellyQuantError):
    """A produced certificate did not re-verify (CLI exit code 2)."""
