"""Exception types shared across the package."""


class HHLabError(Exception):
    """Base class for all hhlab errors."""


class OffShell(HHLabError):
    """The requested (x, y, py) point is outside the accessible region at energy E."""


class Unbounded(HHLabError):
    """A trajectory left the escape radius (E > E_c escape)."""


class NonFinite(HHLabError):
    """Integration produced NaN or overflow."""


class TooShort(HHLabError):
    """Input series has too few samples for the requested operation."""


class NoCrossings(HHLabError):
    """An orbit never crossed the section within the integration time."""


class NoReturn(HHLabError):
    """A section point failed to return under the Poincare map within t_max."""


class EmptyLine(HHLabError):
    """A symmetry line has no on-shell segment at the working energy."""


class NoIntersections(HHLabError):
    """No symmetry-line intersections found at this energy."""


class NotClosed(HHLabError):
    """Candidate orbit does not close on itself within tolerance."""

    def __init__(self, best_time: float, best_distance: float):
        self.best_time = best_time
        self.best_distance = best_distance
        super().__init__(
            f"orbit does not close: best distance {best_distance:.3e} at t={best_time:.6f}"
        )


class LibraryTooSmall(HHLabError):
    """Candidate library degree K cannot hold all terms of the true model."""


class RankDeficient(HHLabError):
    """Design matrix numerically rank-deficient (degenerate trajectory)."""


class AllClean(HHLabError):
    """No step size in the scanned grid produced a spurious term."""


class NoRelation(HHLabError):
    """Residual terms do not factor into a linear coordinate relation."""
