"""Exception hierarchy shared by every wignerlab module."""


class WignerLabError(Exception):
    """Base class for all wignerlab errors."""


class LayoutMismatchError(WignerLabError, ValueError):
    pass


class DimensionCapError(WignerLabError, ValueError):
    pass


class NormalizationError(WignerLabError, ValueError):
    pass


class BasisError(WignerLabError, ValueError):
    """Vectors fail orthonormality or completeness checks."""


class ZeroProbabilityError(WignerLabError, ValueError):
    """Conditioning on (or collapsing onto) an outcome that cannot occur."""


class InvariantViolation(WignerLabError, ArithmeticError):
    """An internal numerical consistency check failed."""


class ScenarioError(WignerLabError, ValueError):
    """A scenario is structurally invalid or cannot be executed."""


class ScenarioParseError(ScenarioError):
    def __init__(self, message, line=None, col=None):
        self.line = line
        self.col = col
        where = f"line {line}, col {col}: " if line is not None else ""
        super().__init__(where + message)
