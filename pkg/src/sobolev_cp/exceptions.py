"""Exception hierarchy.

Input problems derive from :class:`ValueError` so callers that only care
about "bad input" can catch that; numerical failures derive from
:class:`RuntimeError`.
"""


class SobolevError(Exception):
    """Base class for every error raised by this package."""


class InvalidInputError(SobolevError, ValueError):
    pass


class InvalidMapError(InvalidInputError):
    pass


class InvalidPolygonError(InvalidInputError):
    pass


class InvalidExponentError(InvalidInputError):
    pass


class WrongExponentError(InvalidInputError):
    pass


class ResolutionTooCoarseError(InvalidInputError):
    pass


class PoleHitError(SobolevError, ArithmeticError):
    """A Moebius denominator vanished at an evaluation point."""


class FoldedMeshError(SobolevError, RuntimeError):
    """An image triangle has non-positive signed area.

    Raised by the conformal push-forward; it means the map is not univalent
    on the meshed disk or the mesh is too coarse to resolve it.
    """


class NoInteriorVerticesError(InvalidInputError):
    pass


class CgStalledError(SobolevError, RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class NotConvergedError(SobolevError, RuntimeError):
    """The quotient iteration hit its iteration cap.

    The best iterate is attached as ``result`` so callers can still report it.
    """

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class SweepTooSparseError(SobolevError, RuntimeError):
    pass


class InsufficientRegularRowsError(SobolevError, RuntimeError):
    pass
