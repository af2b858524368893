"""Exception hierarchy shared by every fuzzrisk module."""

from __future__ import annotations


class FuzzRiskError(ValueError):
    """Base class for domain errors (bad parameters, bad models, failed inference)."""


class InvalidInputError(FuzzRiskError):
    pass


class EmptySupportError(FuzzRiskError):
    pass


class DegenerateWeightsError(FuzzRiskError):
    pass


class InvalidResolutionError(FuzzRiskError):
    pass


class ModelError(FuzzRiskError):
    """A model failed one of its structural invariants.

    ``diagnostics`` holds the individual problems when more than one was found.
    """

    def __init__(self, message: str, diagnostics=()):
        super().__init__(message)
        self.diagnostics = tuple(diagnostics)


class ScenarioError(FuzzRiskError):
    pass


class NoRuleFiredError(FuzzRiskError):
    """The aggregated output set has no area, so no crisp value exists."""

    def __init__(self, output: str | None = None, message: str | None = None):
        if message is None:
            message = (
                f"no rule fired for output {output!r}"
                if output is not None
                else "aggregated output set has zero area (no rule fired)"
            )
        super().__init__(message)
        self.output = output


class GridMismatchError(AssertionError):
    """Sampled sets combined on different grids; this is a programming error."""


class ExpertAggregationError(FuzzRiskError):
    def __init__(self, expert: str, cause: Exception):
        super().__init__(f"expert {expert!r}: {cause}")
        self.expert = expert
        self.cause = cause


class EmptyDistributionError(FuzzRiskError):
    def __init__(self, message: str, n_failed: int = 0):
        super().__init__(message)
        self.n_failed = n_failed


class DivisionByZeroError(FuzzRiskError):
    pass


class RiskAssessmentError(FuzzRiskError):
    def __init__(self, risk_id: str, cause: Exception):
        super().__init__(f"risk {risk_id!r}: {cause}")
        self.risk_id = risk_id
        self.cause = cause
