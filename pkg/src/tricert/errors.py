"""Exception hierarchy shared by all modules."""


class TriangulationError(Exception):
    """Base class for errors raised by tricert."""


class InvalidInputError(TriangulationError, ValueError):
    """Malformed or non-finite input."""


class DimensionMismatchError(InvalidInputError):
    pass


class SingularSystemError(TriangulationError):
    """A linear system could not be solved reliably."""

    def __init__(self, message, condition_number=float("inf")):
        super().__init__(f"{message} (condition number ~ {condition_number:.3g})")
        self.condition_number = condition_number


class PointAtInfinityError(TriangulationError):
    """A point has (numerically) zero depth or zero homogeneous weight."""


class UnsupportedCameraError(TriangulationError):
    """Camera with its center at infinity."""


class DegenerateGeometryError(TriangulationError):
    pass


class DegeneratePairError(DegenerateGeometryError):
    """Two cameras share a center, so no fundamental matrix exists."""


class DegenerateProblemError(TriangulationError):
    """SDP constraint matrices are linearly dependent."""
