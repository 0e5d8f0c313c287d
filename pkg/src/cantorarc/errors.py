"""Exception types shared across the pipeline."""


class CantorArcError(Exception):
    """Base class for all pipeline errors."""


class PointNotInSet(CantorArcError):
    """A query point was expected to belong to the point set but does not."""


class DegenerateSet(CantorArcError):
    """The point set is too small for the requested operation."""


class FullGrid(CantorArcError):
    """No free border cell: the grid has no stand-in for the unbounded
    complement component (insufficient padding)."""


class NotTotallyDisconnected(CantorArcError):
    """A node's member set failed to split before reaching max depth."""


class GridTooCoarse(CantorArcError):
    """A region's boundary clearance fell below the 2-cell resolution floor."""


class SeparationFailure(CantorArcError):
    """Entry-point selection achieved separation below grid resolution."""


class ResolutionFailure(CantorArcError):
    """A partition step could not make progress (degenerate input)."""


class NoPath(CantorArcError):
    """The clearance-dilated grid disconnects start from goal."""

    def __init__(self, message, context=None):
        super().__init__(message)
        self.context = context


class DisconnectedRegion(CantorArcError):
    """Start and goal lie in different components of the region itself."""


class DegenerateCurve(CantorArcError):
    """A polyline of zero length cannot be reparameterized."""


class TrimFailure(CantorArcError):
    """A distance level was never crossed while trimming (theta too large
    for the available resolution)."""


class KeyNotFound(CantorArcError):
    """Interval key absent from the interval tree."""


class WindowIsLimitBlock(CantorArcError):
    """Local bi-Lipschitz windows must be gap intervals, not limit blocks."""


class AddressMismatch(CantorArcError):
    """Residual block / tree node bijection failed during assembly."""


class SchemaError(CantorArcError):
    """Artifact JSON does not match the expected schema."""
