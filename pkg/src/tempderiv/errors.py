"""Exception hierarchy shared by every stage of the pipeline."""


class TempDerivError(Exception):
    """Base class for all errors raised by this package."""


class EmptyInput(TempDerivError, ValueError):
    pass


class MissingColumn(TempDerivError, KeyError):
    def __str__(self) -> str:  # KeyError quotes its message otherwise
        return str(self.args[0]) if self.args else ""


class BadDate(TempDerivError, ValueError):
    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


class TooFewPoints(TempDerivError, ValueError):
    pass


class TooFewYears(TempDerivError, ValueError):
    pass


class SingularDesign(TempDerivError, ValueError):
    pass


class NonStationary(TempDerivError, ValueError):
    pass


class NegativeAutocorr(TempDerivError, ValueError):
    pass


class EmptyBucket(TempDerivError, ValueError):
    pass


class NonPositiveVolatility(TempDerivError, ValueError):
    pass


class CutoffOutOfRange(TempDerivError, ValueError):
    pass


class ProbOverflow(TempDerivError, ValueError):
    pass


class WindowOutOfRange(TempDerivError, ValueError):
    pass


class EmptyPathSet(TempDerivError, ValueError):
    pass


class ZeroPrice(TempDerivError, ZeroDivisionError):
    pass


class EmptyOverlap(TempDerivError, ValueError):
    pass


class ConfigError(TempDerivError, ValueError):
    pass
