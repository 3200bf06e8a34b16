"""Exception taxonomy shared across the package.

Every error raised by library code derives from SegmetricsError so that
corpus drivers can catch one base class, record the failure, and move on
to the next record.
"""


class SegmetricsError(Exception):
    """Base class for all errors raised by this package."""


class EmptyMask(SegmetricsError):
    """An operation that needs foreground pixels received an all-background mask."""


class WindowTooLarge(SegmetricsError):
    """A sliding-window size exceeds the smaller image dimension."""


class InvalidConfig(SegmetricsError):
    """A configuration value violates its documented constraints."""


class FormatError(SegmetricsError):
    """A file on disk does not match its declared binary or text format."""


class IoError(SegmetricsError):
    """A referenced file could not be read or written."""


class ChannelMismatch(SegmetricsError):
    """Image channel count is incompatible with the filter bank."""


class DegenerateObject(SegmetricsError):
    """Object or boundary region vanished, leaving no pixels to sample."""


class TooFewSamples(SegmetricsError):
    """Not enough labelled samples per class to fit and evaluate a probe."""


class DimensionMismatch(SegmetricsError):
    """Two arrays that must share a shape do not."""


class EmptyList(SegmetricsError):
    """A reduction over a list of inputs received an empty list."""


class LengthMismatch(SegmetricsError):
    """Two paired sequences have different lengths."""


class Undefined(SegmetricsError):
    """The requested statistic is undefined for the given input (e.g. constant data)."""


class InsufficientPixels(SegmetricsError):
    """Fewer candidate pixels exist than the number of prompts requested."""


class InsufficientTextures(SegmetricsError):
    """A texture bank needs at least two distinct tiles."""


class InvalidGrid(SegmetricsError):
    """A parameter sweep was requested over an empty or malformed grid."""
