"""Exception hierarchy shared across the solver, preprocessing and I/O layers."""


class RiskrouteError(Exception):
    """Base class for all errors raised by this package."""


class ConfigurationError(RiskrouteError):
    """Invalid model input: bad grid, missing distribution, unusable risk function."""


class ParseError(RiskrouteError):
    """A graph, samples, policy or statistics file could not be parsed."""


class UnreachableNodeError(ConfigurationError):
    """One or more nodes cannot reach the destination."""

    def __init__(self, offenders):
        self.offenders = list(offenders)
        super().__init__(
            "destination unreachable from node(s): %s"
            % ", ".join(repr(o) for o in self.offenders)
        )


class DomainError(ConfigurationError):
    """A distribution leaves the domain on which a statistic is defined."""


class InfeasibleAmbiguityError(RiskrouteError):
    """An ambiguity set contains no distribution (possibly after interval clamping)."""


class NonconvergenceError(RiskrouteError):
    """Column generation hit its iteration cap with a residual violation left."""

    def __init__(self, message, residual=None, iterations=None):
        self.residual = residual
        self.iterations = iterations
        super().__init__(message)


class NumericalError(RiskrouteError):
    """An LP solve or other numeric routine failed beyond recoverable tolerance."""


class StateError(RiskrouteError):
    """A stateful object was used out of protocol (unfilled window, out-of-order feed)."""


class EvaluationError(RiskrouteError):
    """Policy evaluation reached a state the policy or value table does not cover."""
