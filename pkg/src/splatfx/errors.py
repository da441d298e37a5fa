"""Exception hierarchy shared across the engine."""


class SplatfxError(Exception):
    """Base class for all engine errors."""


class IoError(SplatfxError):
    pass


class FormatError(SplatfxError):
    """Malformed splat file; carries the offending field name."""

    def __init__(self, field: str, message: str = ""):
        self.field = field
        super().__init__(message or f"missing or malformed field: {field}")


class DataError(SplatfxError):
    """Non-finite or out-of-domain value in a splat file; carries the point index."""

    def __init__(self, index: int, message: str = ""):
        self.index = index
        super().__init__(message or f"non-finite value at point {index}")


class MaskError(SplatfxError):
    def __init__(self, value: int, message: str = ""):
        self.value = value
        super().__init__(message or f"mask index out of range: {value}")


class EmptySelectionError(SplatfxError):
    pass


class ParseError(SplatfxError):
    """Field-language syntax or name error with a source location."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class FieldTypeError(SplatfxError):
    """Field-language type mismatch with a source location."""

    def __init__(self, message: str, line: int = 0, col: int = 0):
        self.line = line
        self.col = col
        super().__init__(f"{line}:{col}: {message}" if line else message)


class TimeRangeError(SplatfxError):
    def __init__(self, t: float, duration: float):
        self.t = t
        self.duration = duration
        super().__init__(f"t={t} outside [0, {duration}]")


class ArgumentError(SplatfxError):
    pass


class PhaseGapError(SplatfxError):
    def __init__(self, end: float, start: float):
        self.end = end
        self.start = start
        super().__init__(f"gap between phases: {end} -> {start}")


class PhaseOverlapError(SplatfxError):
    def __init__(self, end: float, start: float):
        self.end = end
        self.start = start
        super().__init__(f"overlapping phases: next starts at {start} before {end}")


class BadIntervalError(SplatfxError):
    pass


class StageError(SplatfxError):
    """A pipeline stage failed after exhausting its retries."""

    def __init__(self, stage: str, message: str = ""):
        self.stage = stage
        super().__init__(f"stage '{stage}' failed" + (f": {message}" if message else ""))


class ReplayMissError(SplatfxError):
    """Replay transport had no transcript entry for a request hash."""

    def __init__(self, request_hash: str):
        self.request_hash = request_hash
        super().__init__(f"no transcript entry for request {request_hash}")


class MetricError(SplatfxError):
    pass
