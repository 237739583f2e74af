"""Shared exception types.

ArgumentError maps to CLI exit code 2, ResourceError to exit code 3.
"""


class MspecError(Exception):
    pass


class ArgumentError(MspecError):
    """A precondition on user-supplied arguments failed."""


class ResourceError(MspecError):
    """A computation would exceed a configured memory/size cap."""
