"""Exception types shared by every module and mapped to CLI exit codes."""


class DomainError(ValueError):
    """Input outside an operation's mathematical domain."""


class CapacityError(RuntimeError):
    """Input exceeds a configured enumeration limit."""
