"""Error types raised by the segmentation pipeline.

Every error carries a ``category`` string equal to its class name; the CLI
prints it so callers can branch on failures without parsing messages.
"""


class SegmentationError(Exception):
    @property
    def category(self):
        return type(self).__name__


class NonFiniteInput(SegmentationError, ValueError):
    pass


class DegenerateVolume(SegmentationError, ValueError):
    pass


class EmptyClusterCollapse(SegmentationError, RuntimeError):
    pass


class SeedNotInMask(SegmentationError, ValueError):
    pass


class SeedEroded(SegmentationError, ValueError):
    """The seed point was removed by erosion.

    ``step`` is the 1-based erosion step at which it vanished.
    """

    def __init__(self, message, step):
        super().__init__(message)
        self.step = step


class EmptyMask(SegmentationError, ValueError):
    pass


class FullMask(SegmentationError, ValueError):
    pass


class EmptyRegion(SegmentationError, RuntimeError):
    pass


class NoZeroCrossing(SegmentationError, ValueError):
    pass


class SurfaceTouchesBorder(SegmentationError, ValueError):
    pass


class DimensionMismatch(SegmentationError, ValueError):
    pass


class BothEmpty(SegmentationError, ValueError):
    pass


class GeometryOutOfBounds(SegmentationError, ValueError):
    pass


class HeaderPayloadMismatch(SegmentationError, ValueError):
    pass


class UnknownDtype(SegmentationError, ValueError):
    pass


class MalformedHeader(SegmentationError, ValueError):
    pass


class MalformedMask(SegmentationError, ValueError):
    pass


class MalformedConfig(SegmentationError, ValueError):
    pass


class IndexOutOfRange(SegmentationError, IndexError):
    pass


class IoFailure(SegmentationError, OSError):
    pass


class NonConvergedWarning(UserWarning):
    """Evolution hit ``max_iters`` before reaching equilibrium."""
