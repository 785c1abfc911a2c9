class ParameterError(ValueError):
    """Invalid user input: bad grid, non-admissible index, unknown experiment."""


class ConstraintViolation(ParameterError):
    """A field left the zero x-mean subspace D0' where d_x^{-1} is defined."""


class NumericalFailure(RuntimeError):
    """The numerics broke down: blow-up, NaN, drift or a rejected step."""
