"""Exception types raised by the library."""


class PlmbError(Exception):
    """Base class for all library-specific errors."""


class InvalidModelError(PlmbError):
    """A model matrix or parameter is malformed (non-SPD covariance, bad shape, ...)."""


class EmptyMixtureError(PlmbError):
    """An operation that requires at least one mixture component got none."""


class DuplicateLabelError(PlmbError):
    """Two tracks with the same label were combined into one density."""


class DegenerateUpdateError(PlmbError):
    """A measurement update produced no usable association hypothesis."""


class TopologyError(PlmbError):
    """A sensor graph is malformed or not connected."""
