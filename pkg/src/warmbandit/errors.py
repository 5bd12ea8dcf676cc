class WarmBanditError(Exception):
    """Base class for library errors."""


class RejectedInputError(WarmBanditError, ValueError):
    """Input violates a stated precondition (shape, range, hypothesis)."""


class ConfigurationError(WarmBanditError, ValueError):
    pass


class ContractViolation(WarmBanditError, RuntimeError):
    """An operation was called in a state its contract does not allow."""
