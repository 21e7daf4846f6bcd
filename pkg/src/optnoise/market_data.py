"""Ingestion of end-of-day option chains, treasury curves and underlying closes.

Conventions
-----------
* Option time to expiry is calendar days / 365.
* Volatility is annualised with sqrt(252) over daily log returns, using the
  sample (n - 1) standard deviation.
* Treasury yields are read in percent and returned as decimals, linearly
  interpolated in maturity with flat extrapolation beyond the end tenors.
* A missing treasury date (holiday) uses the most recent earlier curve.
"""
from __future__ import annotations

import bisect
import csv
import datetime as dt
import io
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Mapping, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from .exceptions import DomainError, FormatError, SchemaError
from .pricing import OptionType

OPTION_COLUMNS = ("trade_date", "expiration", "type", "strike", "bid", "ask",
                  "volume", "open_interest", "underlying_close")

TENORS = ("1mo", "3mo", "6mo", "1yr", "2yr", "3yr", "5yr", "7yr", "10yr", "20yr", "30yr")
TENOR_YEARS = (1 / 12, 0.25, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0, 20.0, 30.0)

DAYS_PER_YEAR = 365.0
TRADING_DAYS = 252


@dataclass(frozen=True)
class OptionRecord:
    trade_date: dt.date
    expiration_date: dt.date
    option_type: OptionType
    strike: float
    bid: float
    ask: float
    volume: int
    open_interest: int
    underlying_close: float

    @property
    def key(self):
        return (self.expiration_date, self.strike, self.option_type.value)


@dataclass(frozen=True)
class TreasuryCurveDay:
    date: dt.date
    yields: Tuple[float, ...]  # percent, in TENORS order

    def __post_init__(self):
        if len(self.yields) != len(TENORS):
            raise SchemaError(f"curve for {self.date} needs {len(TENORS)} tenors")
        if any(not math.isfinite(y) or y < 0 for y in self.yields):
            raise DomainError(f"curve for {self.date} has a negative or non-finite yield")

    def as_dict(self):
        return dict(zip(TENORS, self.yields))


@dataclass(frozen=True)
class VolatilityPoint:
    date: dt.date
    sigma: float

    @property
    def degenerate(self):
        return not self.sigma > 0


class Diagnostic(NamedTuple):
    line: int
    kind: str
    message: str


@dataclass
class IngestResult:
    records: List[OptionRecord]
    diagnostics: List[Diagnostic]
    rows_in: int

    def counts_by_kind(self):
        out: Dict[str, int] = {}
        for d in self.diagnostics:
            out[d.kind] = out.get(d.kind, 0) + 1
        return dict(sorted(out.items()))


def _text_stream(source):
    """Return a text stream for a path, a byte/text stream, or raw bytes."""
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, (bytes, bytearray)):
        return io.StringIO(bytes(source).decode("utf-8"), newline="")
    if isinstance(source, io.TextIOBase):
        return source
    return io.TextIOWrapper(source, encoding="utf-8", newline="")


def _read_rows(source, delimiter):
    stream = _text_stream(source)
    reader = csv.reader(stream, delimiter=delimiter)
    try:
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty input: missing header row", line=1) from None
        rows = []
        for row in reader:
            if not row or all(not c.strip() for c in row):
                continue
            rows.append((reader.line_num, row))
    except (csv.Error, UnicodeDecodeError) as exc:
        raise FormatError(str(exc), line=reader.line_num) from exc
    finally:
        if isinstance(source, (str, os.PathLike)):
            stream.close()
    return [h.strip() for h in header], rows


def parse_date(text):
    return dt.date.fromisoformat(text.strip())


def load_option_records(source, schema: Optional[Mapping[str, str]] = None,
                        delimiter=","):
    """Read an option chain into records plus ingest diagnostics.

    Parameters
    ----------
    source : path, bytes, or binary/text stream
        Delimiter-separated text with a header row.
    schema : mapping, optional
        Canonical column name -> name used in the file, for any columns
        that differ from :data:`OPTION_COLUMNS`.

    Every data row either becomes a record or produces exactly one
    diagnostic, so ``rows_in == len(records) + len(diagnostics)``.
    """
    header, rows = _read_rows(source, delimiter)
    names = {c: (schema or {}).get(c, c) for c in OPTION_COLUMNS}
    index = {}
    for canon, name in names.items():
        if name not in header:
            raise SchemaError(f"missing required column {name!r}"
                              + (f" (for {canon!r})" if name != canon else ""))
        index[canon] = header.index(name)

    records, diags = [], []
    for line, row in rows:
        if len(row) != len(header):
            diags.append(Diagnostic(line, "field count",
                                    f"expected {len(header)} fields, got {len(row)}"))
            continue
        try:
            get = lambda c: row[index[c]].strip()  # noqa: E731
            rec = OptionRecord(
                trade_date=parse_date(get("trade_date")),
                expiration_date=parse_date(get("expiration")),
                option_type=OptionType.parse(get("type")),
                strike=float(get("strike")),
                bid=float(get("bid")),
                ask=float(get("ask")),
                volume=int(float(get("volume"))),
                open_interest=int(float(get("open_interest"))),
                underlying_close=float(get("underlying_close")),
            )
        except ValueError as exc:
            diags.append(Diagnostic(line, "bad value", str(exc)))
            continue
        problem = _validate(rec)
        if problem:
            diags.append(Diagnostic(line, *problem))
            continue
        records.append(rec)
    return IngestResult(records, diags, len(rows))


def _validate(rec):
    values = (rec.strike, rec.bid, rec.ask, rec.underlying_close)
    if not all(math.isfinite(v) for v in values):
        return "bad value", "non-finite number"
    if rec.bid < 0 or rec.ask < 0:
        return "negative quote", f"bid={rec.bid} ask={rec.ask}"
    if rec.ask < rec.bid:
        return "crossed quote", f"ask {rec.ask} < bid {rec.bid}"
    if rec.strike <= 0 or rec.underlying_close <= 0:
        return "bad value", "strike and underlying close must be positive"
    if rec.volume < 0 or rec.open_interest < 0:
        return "bad value", "negative volume or open interest"
    if rec.expiration_date < rec.trade_date:
        return "expired", f"expiration {rec.expiration_date} before trade date {rec.trade_date}"
    return None


def filter_active(records):
    """Keep rows with both non-zero volume and non-zero open interest."""
    return [r for r in records if r.volume > 0 and r.open_interest > 0]


def mid_price(record):
    return (record.bid + record.ask) / 2.0


def time_to_expiry(trade_date, expiration_date):
    days = (expiration_date - trade_date).days
    if days < 0:
        raise DomainError("expiration precedes trade date")
    return days / DAYS_PER_YEAR


def trailing_volatility(closes: Sequence[Tuple[dt.date, float]], window=21):
    """Annualised trailing volatility of daily log returns.

    The point dated ``closes[i]`` uses the ``window`` returns ending at
    ``i``; the first ``window`` dates produce no point, so the result has
    ``len(closes) - window`` entries (none if history is too short).
    A flat window yields ``sigma == 0``, which callers treat as degenerate.
    """
    if window < 2:
        raise DomainError("window must be >= 2")
    dates = [d for d, _ in closes]
    if any(b <= a for a, b in zip(dates, dates[1:])):
        raise DomainError("closes must be strictly date-ordered")
    px = np.asarray([c for _, c in closes], dtype=float)
    if np.any(~np.isfinite(px)) or np.any(px <= 0):
        raise DomainError("closes must be positive")
    if len(px) < window + 1:
        return []
    rets = np.diff(np.log(px))
    windows = np.lib.stride_tricks.sliding_window_view(rets, window)
    sd = windows.std(axis=1, ddof=1) * math.sqrt(TRADING_DAYS)
    return [VolatilityPoint(dates[i + window], float(s)) for i, s in enumerate(sd)]


def rate_for_maturity(curve: TreasuryCurveDay, time_to_expiry: float):
    """Treasury yield for a maturity, as a decimal per annum."""
    if not time_to_expiry > 0:
        raise DomainError("time_to_expiry must be > 0")
    return float(np.interp(time_to_expiry, TENOR_YEARS, curve.yields)) / 100.0


def _normalise_tenor(name):
    n = name.strip().lower().replace(" ", "").replace(".", "").replace("_", "")
    if n.startswith("x") and n[1:2].isdigit():
        n = n[1:]
    return n.replace("month", "mo").replace("year", "yr").replace("mos", "mo").replace("yrs", "yr")


class TreasuryCurves:
    """Date-indexed curves with carry-forward lookup."""

    def __init__(self, curves: Sequence[TreasuryCurveDay]):
        self._curves = sorted(curves, key=lambda c: c.date)
        self._dates = [c.date for c in self._curves]
        if any(b == a for a, b in zip(self._dates, self._dates[1:])):
            raise FormatError("duplicate treasury dates")

    def __len__(self):
        return len(self._curves)

    def __iter__(self):
        return iter(self._curves)

    def curve_for(self, date):
        """Curve on ``date`` or the latest earlier one; None if none exists."""
        i = bisect.bisect_right(self._dates, date)
        return self._curves[i - 1] if i else None


def load_treasury_curves(source, delimiter=","):
    """Read a curve file with a ``date`` column and the eleven tenor columns."""
    header, rows = _read_rows(source, delimiter)
    norm = [_normalise_tenor(h) for h in header]
    lowered = [h.lower() for h in header]
    if "date" not in lowered:
        raise SchemaError("missing required column 'date'")
    di = lowered.index("date")
    idx = []
    for t in TENORS:
        if t not in norm:
            raise SchemaError(f"missing required column {t!r}")
        idx.append(norm.index(t))
    curves = []
    for line, row in rows:
        try:
            curves.append(TreasuryCurveDay(parse_date(row[di]),
                                           tuple(float(row[i]) for i in idx)))
        except (ValueError, IndexError) as exc:
            raise FormatError(str(exc), line=line) from exc
    return TreasuryCurves(curves)


def load_closes(source, delimiter=","):
    """Read ``date, adjusted close`` rows, sorted by date."""
    header, rows = _read_rows(source, delimiter)
    if len(header) < 2:
        raise SchemaError("closes file needs a date column and a close column")
    lowered = [h.lower() for h in header]
    di = lowered.index("date") if "date" in lowered else 0
    ci = next((i for i, h in enumerate(lowered) if "close" in h), 1 if di == 0 else 0)
    out = []
    for line, row in rows:
        try:
            out.append((parse_date(row[di]), float(row[ci])))
        except (ValueError, IndexError) as exc:
            raise FormatError(str(exc), line=line) from exc
    out.sort(key=lambda p: p[0])
    return out
