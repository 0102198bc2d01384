"""Exception types shared across the package."""


class AtfeError(Exception):
    """Base class for all package errors."""


class UsageError(AtfeError):
    """An operation was called with arguments that violate its contract."""


class ConfigurationError(UsageError):
    """A probe or run configuration violates one of its invariants."""


class DomainError(AtfeError):
    """A formula was evaluated outside its domain of validity."""
