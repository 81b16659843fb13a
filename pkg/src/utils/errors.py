"""
Exception hierarchy.

``CantorBayesError`` and its subclasses are precondition failures of an
otherwise well-formed request (the CLI maps them to exit code 2).
``SchemaError`` marks malformed input: words, rationals or spec files
(exit code 1).
"""


class CantorBayesError(Exception):
    """A well-formed request whose preconditions do not hold."""


class DepthBudgetExceeded(CantorBayesError):
    """An enumeration or evaluation would exceed the configured depth budget."""


class NullConditioningError(CantorBayesError):
    """Conditioning on a cylinder of probability zero."""


class InsufficientApproximantsError(CantorBayesError):
    """A counterexample evaluation needs approximants beyond the supplied list."""


class HypothesisViolation(CantorBayesError):
    """The finite hypothesis of the test-transfer construction fails."""


class PreconditionError(CantorBayesError):
    """Any other violated precondition."""


class SchemaError(ValueError):
    """Input that does not parse: bad words, rationals or specs."""
