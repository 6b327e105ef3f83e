"""Error taxonomy shared by all modules.

Every failure a sweep is expected to survive (singular gauges, rank
ambiguities, tracking losses) raises a subclass of :class:`GeometryError`
so callers can isolate per-node problems without masking real bugs.
"""

from __future__ import annotations


class GeometryError(Exception):
    """Base class for all geometric / numerical failures in this package."""


class DimensionError(GeometryError):
    """Ambient or parameter dimension outside the supported range."""


class ShapeError(GeometryError):
    """Array arguments with incompatible shapes."""


class InvalidPointError(GeometryError):
    """Zero vector where a projective point was required."""


class DegenerateLineError(GeometryError):
    """Two dependent points do not span a line."""


class ImmersionRankError(GeometryError):
    """Tangent map of an immersion is rank deficient at the evaluated point."""


class GaugeError(GeometryError):
    """The requested frame gauge condition cannot be solved."""


class FrameDegeneracyError(GeometryError):
    """A frame matrix became singular or discontinuous across a stencil."""


class StencilError(GeometryError):
    """A finite-difference stencil does not fit inside the grid."""


class ReducedRankSignal(GeometryError):
    """A maximal-rank operation met reduced-rank data.

    Carries the measured spectrum so the caller can reroute to the
    reduced-rank pipeline.
    """

    def __init__(self, message, spectrum=None):
        super().__init__(message)
        self.spectrum = spectrum


class SingularGaugeWarning(UserWarning):
    """The exterior frame point sits on a focus; shift the gauge."""


class NormalizationUndefinedError(GeometryError):
    """The trace-free second-order tensor is degenerate (umbilic case)."""


class TrackingError(GeometryError):
    """Eigenvector overlap across a stencil fell below the matching threshold."""


class MultiplicityChangeSignal(GeometryError):
    """Root multiplicities change inside a stencil; classification skipped."""


class RankAmbiguityError(GeometryError):
    """A singular value landed inside the dead band around the rank cutoff."""

    def __init__(self, message, spectrum=None):
        super().__init__(message)
        self.spectrum = spectrum


class ConditioningError(GeometryError):
    """A least-squares system was too ill conditioned to trust."""


class ConsistencyError(GeometryError):
    """Two independent pipelines disagreed beyond tolerance."""


class ScreenUndefinedError(GeometryError):
    """The relative invariant vanishes; no screen distribution exists."""


class ValidationError(GeometryError):
    """Configuration value outside its documented range."""
