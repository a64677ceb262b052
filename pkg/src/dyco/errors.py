"""Exception types shared across the package."""


class DycoError(Exception):
    """Base class for all package errors."""


class NonRotation(DycoError):
    """Matrix fails the orthonormality / determinant check."""


class SkeletonMismatch(DycoError):
    """Two pose-like objects disagree on the joint count K."""


class CyclicTree(DycoError):
    """Parent indices do not form a single rooted tree."""


class OutOfRange(DycoError, IndexError):
    """Index outside the valid range (joints, frames, pixels)."""


class OutOfBounds(OutOfRange):
    """Pixel coordinate outside the image."""


class EmptyTrack(DycoError):
    """Pose track contains no frames."""


class DimensionMismatch(DycoError, ValueError):
    """Array dimensions incompatible with the operation."""


class ShapeMismatch(DimensionMismatch):
    """Named arrays disagree on shape."""


class LengthMismatch(DimensionMismatch):
    """Sequences that must be equally long are not."""


class UnsortedSamples(DycoError, ValueError):
    """Ray sample depths are not strictly increasing."""


class TooSmall(DycoError, ValueError):
    """Input below the minimum supported size."""


class EmptyMask(DycoError, ValueError):
    """A mask selects no pixels."""


class DatasetEmpty(DycoError):
    """Dataset provides no usable frames."""


class NonFiniteLoss(DycoError):
    """Training loss became NaN or infinite."""


class CorruptFile(DycoError, IOError):
    """File does not parse as the expected format."""


class VersionMismatch(CorruptFile):
    """File format version is not supported."""


class IoError(DycoError, IOError):
    """Generic I/O failure while reading or writing artifacts."""


class ConfigError(DycoError, ValueError):
    """Malformed configuration text or unknown key."""


class NotFitted(DycoError, RuntimeError):
    """Estimator used before fit()."""
