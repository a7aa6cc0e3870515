"""Exception hierarchy shared by all seispipe modules."""


class SeispipeError(Exception):
    """Base class for every error raised deliberately by seispipe."""


class ShapeMismatch(SeispipeError, ValueError):
    pass


# -- codec -------------------------------------------------------------------

class CodecError(SeispipeError, ValueError):
    """Any failure while reading or writing a waveform container."""


class BadMagic(CodecError):
    pass


class BadVersion(CodecError):
    pass


class Truncated(CodecError):
    pass


class TrailingData(CodecError):
    pass


class BadChannelCount(CodecError):
    pass


class BadLabelCode(CodecError):
    pass


class SampleOverflow(CodecError):
    pass


class SampleCountOverflow(CodecError):
    pass


class InvalidEvent(CodecError):
    """A decoded or constructed value violates a domain invariant."""


class ParseError(CodecError):
    def __init__(self, message, lineno=None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


class RaggedColumns(ParseError):
    pass


# -- qc / preprocess / trigger -----------------------------------------------

class EmptyChannel(SeispipeError, ValueError):
    def __init__(self, message="channel has no samples", record=None, channel=None):
        self.record = record
        self.channel = channel
        if record is not None:
            message = f"{message} (record {record}, channel {channel})"
        super().__init__(message)


class EmptyDataset(SeispipeError, ValueError):
    pass


class TrimPaddingWarning(UserWarning):
    """A sequence was shorter than the resolved trim length and got zero-padded."""


class TooShort(SeispipeError, ValueError):
    pass


# -- neural ------------------------------------------------------------------

class NonFiniteInput(SeispipeError, ValueError):
    pass


class SequenceTooShort(SeispipeError, ValueError):
    pass


class BadTargetClass(SeispipeError, ValueError):
    pass


class NoForwardState(SeispipeError, RuntimeError):
    pass


class CheckpointError(SeispipeError, ValueError):
    pass


# -- boosting ----------------------------------------------------------------

class DegenerateLabels(SeispipeError, ValueError):
    pass


class SingleClass(SeispipeError, ValueError):
    pass


# -- bench -------------------------------------------------------------------

class TooFewEvents(SeispipeError, ValueError):
    pass


class LengthMismatch(SeispipeError, ValueError):
    pass


class BadSpec(SeispipeError, ValueError):
    pass


# -- command line ---------------------------------------------------------------------

class IoError(SeispipeError, OSError):
    """File-system failure with the offending path attached."""

    def __init__(self, message: str, path=None):
        super().__init__(f"{path}: {message}" if path is not None else message)
        self.path = path
