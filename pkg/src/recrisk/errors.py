"""Exception hierarchy shared across the package.

Plain ``ValueError`` is used for malformed inputs (bad shapes, levels outside
(0,1), negative liabilities where positivity is required).  The classes below
mark *numerical* failure modes that a caller may want to catch and handle
separately from validation errors; the CLI maps them to exit code 2.
"""


class RecriskError(Exception):
    """Base class for package-specific errors."""


class NumericalError(RecriskError):
    """A computation failed for numerical (not input-validation) reasons."""


class DenominatorNotPositive(NumericalError):
    """A ratio (recovery adjustment, RoRaC) was requested with a non-positive denominator."""


class AmbiguousBindingIndex(NumericalError):
    """The largest tail-average term is not a strict maximum, so the
    capital-allocation formula does not apply at the requested gap tolerance."""


class SolverStalled(NumericalError):
    """The simplex solver hit its iteration cap before reaching optimality."""


class TargetReturnInfeasible(NumericalError):
    """The requested expected return lies outside the attainable hull."""


class ConstructionInfeasible(NumericalError):
    """The requested worst-case balance-sheet construction has no feasible parameters."""
