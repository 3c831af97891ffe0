"""Exception types raised across the package."""

import numpy as np


class DimensionError(ValueError):
    """Vector or matrix shapes do not agree."""


class ProjectionError(RuntimeError):
    """An iterative projection hit its cycle cap.

    Carries the last iterate and the final cycle displacement so callers can
    report how far from convergence the loop was.
    """

    def __init__(self, message, last_iterate=None, displacement=np.nan):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.displacement = displacement


class InfeasibleSetError(ProjectionError):
    """The projection target looks empty (stalled displacement, diverging corrections)."""


class NNLSConvergenceError(RuntimeError):
    def __init__(self, message, best_residual):
        super().__init__(message)
        self.best_residual = best_residual


class EmptyCutError(RuntimeError):
    """A cut row ``<0, z> <= b`` with ``b < 0`` made the cut set empty."""

    def __init__(self, message, row=None, offset=np.nan):
        super().__init__(message)
        self.row = row
        self.offset = offset
