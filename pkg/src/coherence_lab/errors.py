"""Exception types shared across the package."""


class ContractViolation(ValueError):
    """An argument violates the documented precondition of an operation."""


class InvariantViolation(ContractViolation):
    """A data object fails one of its structural invariants.

    ``invariant`` names the violated property (e.g. ``"trace"``) so that
    front ends can report it without parsing the message.
    """

    def __init__(self, invariant: str, message: str):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class StateParseError(ValueError):
    """A state, channel or protocol document could not be parsed."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)
        self.line = line
        self.column = column
