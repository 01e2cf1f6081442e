"""Exception types shared across the package."""


class ApakeError(Exception):
    """Base class for all package-specific errors."""


class SearchExhausted(ApakeError):
    """Parameter search gave up after the configured iteration bound."""


class OracleUnavailable(ApakeError):
    """A test-only oracle (enumeration, exhaustive DP) exceeds its size limit."""


class DomainError(ApakeError):
    """An argument violates a mathematical precondition (bad witness, y not in the group, ...)."""


class DecodeError(ApakeError):
    """A wire frame or payload cannot be parsed."""


class ProtocolPhaseError(ApakeError):
    """A message was delivered to a session in the wrong phase."""
