"""Exception types shared across the package."""


class MDCSError(Exception):
    """Base class for library errors."""


class ShapeError(MDCSError, ValueError):
    """Non-conformable tensor or matrix extents."""


class ValidationError(MDCSError, ValueError):
    """An argument or loaded object violates a documented invariant."""


class FormatError(MDCSError):
    """A binary or text file could not be parsed."""


class NumericError(MDCSError, ArithmeticError):
    """A non-finite value appeared during an iterative computation."""


class OperatorTooLargeError(MDCSError, MemoryError):
    """Refusal to materialize a dense operator above the size cap."""

    def __init__(self, shape, cap_bytes):
        self.shape = tuple(int(n) for n in shape)
        self.required_bytes = 8 * int(_prod(self.shape))
        self.cap_bytes = int(cap_bytes)
        super().__init__(
            f"materializing a {self.shape[0]}x{self.shape[1]} float64 operator needs "
            f"{self.required_bytes} bytes, above the cap of {self.cap_bytes} bytes"
        )


def _prod(values):
    out = 1
    for v in values:
        out *= int(v)
    return out
