class NormalizationWarning(RuntimeWarning):
    """Warning raised when a right-hand side does not have its nominal norm.

    The experiment's series right-hand side is nominally of unit norm, but with
    mutually orthonormal factors its norm evaluates to
    ``sqrt((1 - tau) / (1 + tau))``. The computed value is always used; this
    warning makes the discrepancy visible in experiment logs.
    """


class TreeMismatchError(ValueError):
    """Raised when operands are built on incompatible dimension trees.

    This is also raised when an operator and a tensor have different numbers
    of modes.
    """


class RankError(ValueError):
    """Raised for rank vectors that are inadmissible or exceed the ranks of
    the representation they are applied to."""


class DenseSizeError(ValueError):
    """Raised when a dense conversion would exceed the dense size guard."""


class RepresentationStateError(ValueError):
    """Raised when an operation needs a representation in hsvd form."""


class ParameterError(ValueError):
    """Raised for invalid tolerances or algorithm parameters."""


class ConfigError(ValueError):
    """Raised for invalid experiment configurations.

    :attr:`fields` holds the names of the offending configuration fields.
    """

    def __init__(self, msg, fields=()):
        super().__init__(msg)
        self.fields = tuple(fields)


class FormatError(ValueError):
    """Raised when a serialized representation cannot be decoded."""


class LevelOverflowError(OverflowError):
    """Raised when a wavelet index cannot be packed into a signed 64-bit
    integer.

    The solver treats this as a regular termination cause rather than a
    failure.
    """
