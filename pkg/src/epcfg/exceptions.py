"""Exception hierarchy.

Every error raised on bad input derives from :class:`EPCFGError`, which is a
``ValueError`` so callers that already catch ``ValueError`` keep working.
"""


class EPCFGError(ValueError):
    pass


class ShapeMismatch(EPCFGError):
    pass


class NonFiniteValue(EPCFGError):
    pass


class EmptyInput(EPCFGError):
    pass


class InvalidWindow(EPCFGError):
    pass


class InvalidStrength(EPCFGError):
    pass


class NonFiniteResult(EPCFGError):
    pass


class InvalidRange(EPCFGError):
    pass


class DegenerateAlpha(EPCFGError):
    pass


class IndexOutOfRange(EPCFGError, IndexError):
    pass


class EmptyBatch(EPCFGError):
    pass


class RaggedLogs(EPCFGError):
    pass


class LatentFormatError(EPCFGError):
    """Raised when a latent file does not follow the on-disk layout."""


class BadMagic(LatentFormatError):
    pass


class TruncatedFile(LatentFormatError):
    pass


class IoFailure(EPCFGError, OSError):
    pass


class MalformedCsv(EPCFGError):
    pass


class ConfigError(EPCFGError):
    pass
