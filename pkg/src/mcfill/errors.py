"""Exception hierarchy shared by every module and mapped to CLI exit codes."""


class McfillError(Exception):
    """Base class for all library errors."""


class InputError(McfillError, ValueError):
    """Malformed input or violated precondition."""


class ResourceError(McfillError):
    """A sweep or search exceeded its configured cap.

    Raised instead of returning a possibly wrong answer.
    """


class InvariantViolation(McfillError, AssertionError):
    """A step that a proof guarantees possible turned out impossible."""
