"""Exception types shared by every stage.

Each class carries the CLI exit code it maps to.
"""


class IfsError(Exception):
    exit_code = 3


class InputError(IfsError, ValueError):
    """Bad arguments or malformed input data."""

    exit_code = 1


class DegenerateInputError(InputError):
    """Input is well formed but carries no information (e.g. a constant series)."""


class DivergenceError(IfsError, ArithmeticError):
    """An orbit left the bounded region during simulation."""

    exit_code = 1

    def __init__(self, message: str, step: int | None = None):
        super().__init__(message)
        self.step = step


class StructureError(IfsError):
    """The data lacks the structure a stage needs (too few components, no gap)."""

    exit_code = 2


class IntegrityError(IfsError, AssertionError):
    """An internal invariant was violated."""

    exit_code = 3
