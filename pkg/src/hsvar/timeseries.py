"""Historical price/rate series: ingestion, validation, raw shifts.

The CSV contract is deliberately narrow: header exactly ``date,value``,
ISO-8601 dates, decimal point ``.``, optional ``#`` comment lines. Rows are
sorted by date on ingestion; duplicate dates, non-finite values and series
shorter than two observations are rejected outright. Missing values are
never interpolated (that would inject serial dependence into the extracted
innovations downstream).
"""

from __future__ import annotations

import datetime as dt
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DenominatorTooSmall,
    DuplicateDate,
    MalformedRow,
    NonFiniteValue,
    SeriesTooShort,
    WindowTooShort,
)

CSV_HEADER = "date,value"


def _readonly(values) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    arr = arr.copy()
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PriceSeries:
    """Dated, strictly ordered observations of a single risk factor.

    Invariants enforced at construction: strictly increasing dates, at least
    two observations, all values finite.
    """

    dates: tuple[dt.date, ...]
    values: np.ndarray
    label: str = ""

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "values", _readonly(self.values))
        if len(self.dates) != len(self.values):
            raise SeriesTooShort(
                f"dates ({len(self.dates)}) and values ({len(self.values)}) differ in length"
            )
        if len(self.values) < 2:
            raise SeriesTooShort("need at least 2 observations (one increment)")
        if not np.isfinite(self.values).all():
            bad = int(np.flatnonzero(~np.isfinite(self.values))[0])
            raise NonFiniteValue(bad + 1, repr(float(self.values[bad])))
        for i in range(1, len(self.dates)):
            if self.dates[i] == self.dates[i - 1]:
                raise DuplicateDate(i + 1, self.dates[i].isoformat())
            if self.dates[i] < self.dates[i - 1]:
                raise MalformedRow(i + 1, "dates not strictly increasing")

    def __len__(self) -> int:
        return len(self.values)

    def restrict(self, start: dt.date | str | None, end: dt.date | str | None) -> "PriceSeries":
        """Sub-series with start <= date <= end (both inclusive, either open)."""
        start = as_date(start)
        end = as_date(end)
        keep = [
            i
            for i, d in enumerate(self.dates)
            if (start is None or d >= start) and (end is None or d <= end)
        ]
        if len(keep) < 2:
            raise WindowTooShort(
                f"window [{start}, {end}] keeps {len(keep)} observation(s); need at least 2"
            )
        return PriceSeries(
            dates=tuple(self.dates[i] for i in keep),
            values=self.values[keep],
            label=self.label,
        )


def _as_date(d) -> dt.date | None:
    if d is None or isinstance(d, dt.date):
        return d
    return dt.date.fromisoformat(str(d))


@dataclass(frozen=True)
class ShiftSeries:
    """Raw one-step shifts, aligned to observation days 1..N.

    kind "absolute": values[k] = S_k - S_{k-1}.
    kind "relative": values[k] = S_k / S_{k-1} - 1, defined only when every
    denominator stays above the positivity threshold.
    """

    kind: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.kind not in ("absolute", "relative"):
            raise ValueError(f"unknown shift kind {self.kind!r}")
        object.__setattr__(self, "values", _readonly(self.values))

    def __len__(self) -> int:
        return len(self.values)


def ingest_csv(source, label: str = "") -> PriceSeries:
    """Parse and validate a ``date,value`` CSV into a PriceSeries.

    Accepts bytes, text, or a file-like object. Rows are sorted by date;
    comment lines starting with ``#`` and blank lines are skipped. Errors
    report 1-based line numbers of the offending row.
    """
    text = _as_text(source)
    rows: list[tuple[dt.date, float]] = []
    seen: dict[dt.date, int] = {}
    header_seen = False
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line != CSV_HEADER:
                raise MalformedRow(lineno, f"expected header {CSV_HEADER!r}, got {line!r}")
            header_seen = True
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise MalformedRow(lineno, f"expected 2 fields, got {len(parts)}")
        try:
            day = dt.date.fromisoformat(parts[0].strip())
        except ValueError:
            raise MalformedRow(lineno, f"bad ISO-8601 date {parts[0].strip()!r}") from None
        raw_value = parts[1].strip()
        try:
            value = float(raw_value)
        except ValueError:
            raise MalformedRow(lineno, f"bad numeric value {raw_value!r}") from None
        if not math.isfinite(value):
            raise NonFiniteValue(lineno, raw_value)
        if day in seen:
            raise DuplicateDate(lineno, day.isoformat())
        seen[day] = lineno
        rows.append((day, value))
    if not header_seen:
        raise MalformedRow(1, "empty input: missing header")
    if len(rows) < 2:
        raise SeriesTooShort(f"need at least 2 rows, got {len(rows)}")
    rows.sort(key=lambda r: r[0])
    return PriceSeries(
        dates=tuple(r[0] for r in rows),
        values=np.array([r[1] for r in rows], dtype=float),
        label=label,
    )


def to_csv(series: PriceSeries) -> str:
    """Serialize back to the ingestion format (ingest -> to_csv is a fixed point)."""
    lines = [CSV_HEADER]
    for day, value in zip(series.dates, series.values):
        lines.append(f"{day.isoformat()},{float(value)!r}")
    return "\n".join(lines) + "\n"


def _as_text(source) -> str:
    if isinstance(source, str):
        return source
    if isinstance(source, (bytes, bytearray)):
        try:
            return source.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedRow(1, f"input is not UTF-8: {exc}") from None
    if hasattr(source, "read"):
        return _as_text(source.read())
    raise TypeError(f"cannot read CSV from {type(source).__name__}")


def absolute_shifts(series: PriceSeries) -> ShiftSeries:
    """One-step differences S_k - S_{k-1}; defined for any levels."""
    return ShiftSeries(kind="absolute", values=np.diff(series.values))


def default_eps(series: PriceSeries) -> float:
    """Positivity threshold for relative shifts: 1e-8 * median(|S|)."""
    return 1e-8 * float(np.median(np.abs(series.values)))


def relative_shifts(series: PriceSeries, eps: float | None = None) -> ShiftSeries:
    """One-step returns S_k / S_{k-1} - 1.

    Every denominator S_{k-1} must exceed ``eps`` (default: 1e-8 times the
    median absolute level); otherwise the shift is ill-posed (zero or
    near-zero denominators make it undefined or arbitrarily large) and
    DenominatorTooSmall is raised with the index of the first bad level.
    """
    if eps is None:
        eps = default_eps(series)
    denom = series.values[:-1]
    bad = denom <= eps
    if bad.any():
        idx = int(np.flatnonzero(bad)[0])
        raise DenominatorTooSmall(idx, float(denom[idx]), float(eps))
    return ShiftSeries(kind="relative", values=series.values[1:] / denom - 1.0)
