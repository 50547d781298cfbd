"""Exception types shared across the package."""


class TreevecError(Exception):
    """Base class for every error raised by this package."""


class ParseError(TreevecError, SyntaxError):
    """Source text does not conform to the mini-language grammar."""

    def __init__(self, message, line, col, token=None):
        super().__init__(message)
        self.line = line
        self.col = col
        self.token = token

    def __str__(self):
        base = self.args[0] if self.args else "syntax error"
        return f"{base} (line {self.line}, column {self.col})"


class SchemaError(TreevecError):
    """A serialized AST document violates the interchange schema."""


class UnknownProfile(TreevecError):
    """Unrecognized language profile name."""


class EmptyIdentifierSet(TreevecError):
    """Statement-granularity split requested with no statement kinds."""


class ShapeMismatch(TreevecError):
    """Tensor operands have incompatible shapes or precisions."""


# Alias used by the encoder-facing surface; same failure class.
DimensionMismatch = ShapeMismatch


class BadSegmentId(TreevecError):
    """Segment id outside the declared group range."""


class EmptyInput(TreevecError):
    """Reduction over zero rows."""


class NotScalar(TreevecError):
    """backward() called on a non-scalar tensor."""


class EmptySequence(TreevecError):
    """An operation requires a non-empty subtree sequence."""


class EmptyBatch(TreevecError):
    """An operation requires a non-empty batch."""


class EmptyCorpus(TreevecError):
    """Embedding pretraining requires a non-empty corpus."""


class LengthMismatch(TreevecError):
    """Per-sample lengths do not add up to the flat batch size."""


class DataFormatError(TreevecError):
    """A dataset record is malformed."""


class NonFiniteLoss(TreevecError):
    """Training loss became NaN or infinite."""


class CheckpointError(TreevecError):
    """Checkpoint file is missing, truncated, or has a bad header."""


class ConfigError(TreevecError):
    """Inconsistent or out-of-range configuration values."""
