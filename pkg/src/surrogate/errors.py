class ConfigurationError(ValueError):
    """Invalid physical or numerical setup."""


class ContractViolation(ValueError):
    """Arguments do not satisfy an operation's preconditions."""


class NumericalFailure(RuntimeError):
    """A propagation or relaxation diverged or failed to converge."""


class VerificationMismatch(AssertionError):
    """The production engine disagrees with the dense reference."""
