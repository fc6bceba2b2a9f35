"""Exception hierarchy shared by all lqmfc modules."""


class LqmfcError(Exception):
    """Base class for every error raised by lqmfc."""


class NotSymmetric(LqmfcError, ValueError):
    pass


class NotFinite(LqmfcError, ValueError):
    pass


class NotPSD(LqmfcError, ValueError):
    pass


class OutOfRange(LqmfcError, ValueError):
    pass


class ShapeMismatch(LqmfcError, ValueError):
    pass


class ParseError(LqmfcError, ValueError):
    """Malformed or non-strict problem file."""


class NumericalFailure(LqmfcError, ArithmeticError):
    """Base for failures the CLI maps to exit status 3."""


class BlowUp(NumericalFailure):
    """A Riccati iterate escaped the finite-horizon bound."""


class NonFinite(NumericalFailure):
    """A particle or moment left the finite range."""


class LengthMismatch(LqmfcError, ValueError):
    pass


class SizeLimit(LqmfcError, ValueError):
    pass


class GridMismatch(LqmfcError, ValueError):
    pass


class VariantMismatch(LqmfcError, TypeError):
    pass


class DegenerateFit(LqmfcError, ValueError):
    """Errors hit exact zero, so a log-log slope is meaningless."""


class ReportIncomplete(LqmfcError, RuntimeError):
    pass
