"""Exception hierarchy shared by every module.

Two broad families: ``ValidationError`` for anything a caller handed us that
is wrong (shapes, ranges, NaN/Inf, arch mismatches), and ``FormatError`` for
anything a file on disk got wrong. The CLI maps both families to exit code 2;
everything else is an internal error (exit code 1).
"""


class DecoderError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(DecoderError):
    """Caller-supplied data violates an operation's precondition."""


class ShapeMismatch(ValidationError):
    """Tensor/vector dimensions are incompatible with the operation."""


class DimensionMismatch(ShapeMismatch):
    """Statistic dimensionalities disagree (e.g. Gaussian stats of unequal D)."""


# Latent/embedding files use the short name in their error contracts.
DimMismatch = DimensionMismatch


class EmptyOutput(ValidationError):
    """A computed output dimension came out smaller than 1."""


class EmptyInput(ValidationError):
    """An aggregate was asked for on an empty collection."""


class RangeError(ValidationError):
    """Values fall outside the documented range (e.g. pixels outside [0, 1])."""


class TooSmall(ValidationError):
    """Image smaller than the metric's window."""


class TooFewRows(ValidationError):
    """Fewer embedding rows than statistics require (covariance needs >= 2)."""


class TooFewFrames(ValidationError):
    """Temporal loss needs at least two frames."""


class ArchMismatch(ValidationError):
    """Model architecture does not support the requested decode path."""


class UnsupportedArch(ValidationError):
    """Unknown architecture identifier."""


class ManifestMismatch(ValidationError):
    """Weight container does not match the topology's tensor manifest."""


class SpecMismatch(ValidationError):
    """Benchmark inputs do not match the benchmark spec."""


class EigenFailure(DecoderError):
    """Eigendecomposition failed to converge."""


class FormatError(DecoderError):
    """Base class for on-disk format violations."""


class BadMagic(FormatError):
    """File does not start with the expected magic bytes."""


class VersionUnsupported(FormatError):
    """Container version is not one this reader understands."""


class CorruptManifest(FormatError):
    """Container manifest is internally inconsistent (overlap, out of range, dupes)."""


class TruncatedPayload(FormatError):
    """File ends before the declared payload does."""


class UnrepresentableValue(FormatError):
    """A value cannot be stored in the requested dtype (f16 overflow)."""


# File-system level failures are plain OSError; the alias keeps call sites
# aligned with the documented error names.
IoError = OSError
