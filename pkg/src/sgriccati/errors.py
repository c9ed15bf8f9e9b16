"""Exception hierarchy for the solver."""


class RiccatiError(Exception):
    """Base class for every solver failure."""


class SingularWeight(RiccatiError):
    """The full control weight R(t, X) is numerically singular."""


class SingularBlock(RiccatiError):
    """The player-2 block R22(t, X) is numerically singular."""


class DomainViolation(RiccatiError):
    """(t, X) left the domain where the sign conditions hold."""


class UnstableSystem(RiccatiError):
    """A Lyapunov solve was requested for a system that is not mean-square stable."""


class SingularSolve(RiccatiError):
    """A linear solve was rank deficient or too ill-conditioned."""


class IntegrationFailure(RiccatiError):
    """Non-finite values appeared while integrating over one period."""


class DriftUnstable(RiccatiError):
    """No admissible initial gain was found for an inner Riccati problem."""


class MaxInnerIterations(RiccatiError):
    """Newton-Kleinman iteration hit its cap."""


class MaxOuterIterations(RiccatiError):
    """The outer accumulation loop hit its cap."""


class SourceNotPSD(RiccatiError):
    """The constant term of an inner Riccati problem is not positive semidefinite."""
