"""Arcs through totally disconnected planar sets.

Pipeline: hierarchical domain construction around a finite sample of a
compact planar set, exact rational interval decomposition, arc building by
clearance-constrained pathfinding, local splice modifications, global
assembly, and empirical verification of the resulting curve's metric
properties.
"""

from cantorarc.errors import (
    CantorArcError,
    DegenerateSet,
    FullGrid,
    GridTooCoarse,
    NoPath,
    NotTotallyDisconnected,
    PointNotInSet,
    SeparationFailure,
    TrimFailure,
)

__version__ = "0.1.0"

__all__ = [
    "CantorArcError",
    "DegenerateSet",
    "FullGrid",
    "GridTooCoarse",
    "NoPath",
    "NotTotallyDisconnected",
    "PointNotInSet",
    "SeparationFailure",
    "TrimFailure",
    "__version__",
]
