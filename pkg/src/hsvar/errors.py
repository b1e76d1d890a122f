"""Exception types shared across the package.

Each error exposes a ``kind`` (its class name) plus optional structured
attributes so front ends can emit machine-readable reports.
"""

from __future__ import annotations


class HsvarError(Exception):
    """Base class for all data/model errors raised by hsvar."""

    exit_code = 1

    @property
    def kind(self) -> str:
        return type(self).__name__

    def payload(self) -> dict:
        """Structured description of the error (used by the CLI report)."""
        out: dict = {"kind": self.kind, "message": str(self)}
        for attr in ("line", "index", "x", "params"):
            value = getattr(self, attr, None)
            if value is not None:
                out[attr] = value
        return out


class MalformedRow(HsvarError):
    """A CSV row that cannot be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class DuplicateDate(HsvarError):
    """Two observations share the same calendar day."""

    def __init__(self, line: int, date: str):
        super().__init__(f"line {line}: duplicate date {date}")
        self.line = line


class NonFiniteValue(HsvarError):
    """An observation parsed to NaN or +/-Inf."""

    def __init__(self, line: int, raw: str):
        super().__init__(f"line {line}: non-finite value {raw!r}")
        self.line = line


class SeriesTooShort(HsvarError):
    """Fewer observations than the operation needs."""


class DenominatorTooSmall(HsvarError):
    """A relative shift would divide by a level at or below the threshold.

    Signals that the relative-shift model is ill-posed on this data.
    """

    def __init__(self, index: int, value: float, eps: float):
        super().__init__(
            f"level {value!r} at index {index} is <= threshold {eps!r}; "
            "relative shifts are not well defined on this series"
        )
        self.index = index


class NonpositiveVolatility(HsvarError):
    """The local volatility function is not strictly positive at some level."""

    def __init__(self, x: float, index: int | None = None):
        where = "" if index is None else f" (index {index})"
        super().__init__(f"volatility function is non-positive at x={x!r}{where}")
        self.x = x
        self.index = index


class DegenerateBase(HsvarError):
    """Implied mix weight is undefined when the base equals the historical level."""


class ZeroVariance(HsvarError):
    """A statistic that needs dispersion was asked of a constant sample."""


class EmptyScenarios(HsvarError):
    """A risk measure was requested on an empty scenario set."""


class WindowTooShort(HsvarError):
    """A date window restricts the series below two observations."""


class ConstraintViolation(HsvarError):
    """Parameters or inputs violate a documented precondition."""


class NumericalFailure(HsvarError):
    """A non-finite objective or degenerate sample stopped a computation."""

    exit_code = 2

    def __init__(self, message: str, params: dict | None = None):
        super().__init__(message)
        self.params = params
