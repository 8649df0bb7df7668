"""Exception hierarchy shared by every module."""


class HetrouteError(Exception):
    """Base class for all library errors."""


class ValidationError(HetrouteError, ValueError):
    """A named model invariant does not hold."""


class ParseError(HetrouteError, ValueError):
    """Malformed game or flows file. Carries the offending line number."""

    def __init__(self, message, line=None, source=None):
        self.line = line
        self.source = source
        where = ""
        if source is not None:
            where += f"{source}:"
        if line is not None:
            where += f"{line}:"
        super().__init__(f"{where} {message}" if where else message)


class Infeasible(HetrouteError):
    """Demand cannot be routed on the available paths."""


class SinkUnreachable(Infeasible):
    pass


class UnknownPath(HetrouteError, KeyError):
    pass


class NegativeFlow(HetrouteError, ValueError):
    pass


class AssumptionViolated(ValidationError):
    """Edge cost violates nonnegativity or own-flow monotonicity."""


class UnsupportedTypeCount(ValidationError):
    pass


class NoPotential(HetrouteError):
    """The game fails the cross-derivative symmetry test; see the tolls module."""


class InfeasibleFlows(HetrouteError, ValueError):
    pass


class TooLarge(HetrouteError):
    pass


class NotAffine(HetrouteError, TypeError):
    pass


class BoundViolated(AssertionError):
    """Price of anarchy exceeded 2 on a game satisfying the bound's hypotheses."""
