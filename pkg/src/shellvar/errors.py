class ShellvarError(Exception):
    """Base class for all errors raised by shellvar."""


class DomainSpecError(ShellvarError, ValueError):
    """A domain description violates one of its invariants.

    ``invariant`` names the violated rule so callers (and the CLI) can report
    it without parsing the message.
    """

    def __init__(self, invariant, message):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class DomainError(ShellvarError, ValueError):
    """An argument lies outside the set where the operation is defined."""


class CapExceededError(ShellvarError):
    """A numeric path was asked to go beyond its cost cap."""

    def __init__(self, cap_name, value, cap, hint=""):
        msg = f"{cap_name}={value:g} exceeds cap {cap:g}"
        if hint:
            msg += f"; {hint}"
        super().__init__(msg)
        self.cap_name = cap_name
        self.value = value
        self.cap = cap


class ConvergenceError(ShellvarError, RuntimeError):
    """An iterative solver ran out of budget."""
