"""Exception hierarchy for ffrpitch."""


class FFRPitchError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParam(FFRPitchError, ValueError):
    pass


class SignalTooShort(FFRPitchError, ValueError):
    pass


class ResponseTooShort(SignalTooShort):
    pass


class InvalidCount(FFRPitchError, ValueError):
    pass


class InvalidBand(FFRPitchError, ValueError):
    pass


class FrameTooLong(FFRPitchError, ValueError):
    pass


class FrameTooShort(FFRPitchError, ValueError):
    pass


class HarmonicAboveNyquist(FFRPitchError, ValueError):
    pass


class GeometryMismatch(FFRPitchError, ValueError):
    pass


class NotAPeak(FFRPitchError, ValueError):
    pass


class EmptyWindow(FFRPitchError, ValueError):
    pass


class WindowTooNarrow(FFRPitchError, ValueError):
    pass


class LengthMismatch(FFRPitchError, ValueError):
    pass


class TimeMismatch(FFRPitchError, ValueError):
    pass


class DegenerateVariance(FFRPitchError, ValueError):
    pass


class InvalidSpec(FFRPitchError, ValueError):
    pass


class AliasedHarmonic(FFRPitchError, ValueError):
    pass


class FormatError(FFRPitchError, ValueError):
    """Malformed input file. ``location`` names the line or byte offset."""

    def __init__(self, path, location, message):
        self.path = str(path)
        self.location = location
        self.message = message
        super().__init__(f"{self.path}: {location}: {message}")
