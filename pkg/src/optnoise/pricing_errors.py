"""Model-minus-market pricing errors, the outlier rule and summary statistics."""
from __future__ import annotations

import csv
import datetime as dt
import os
from dataclasses import dataclass, fields
from typing import List, Sequence

import numpy as np

from ._backend import kernels
from .exceptions import ContractPricingError, DomainError, OptnoiseError, SchemaError
from .market_data import _text_stream, mid_price, parse_date, time_to_expiry
from .pricing import (DEFAULT_MAX_ITER, DEFAULT_TOL, ExerciseStyle, MarketParams,
                      OptionContractSpec, OptionType, baw_price, bs_price)

DEFAULT_OUTLIER_THRESHOLD = 25.0


@dataclass(frozen=True)
class ErrorRecord:
    trade_date: dt.date
    expiration_date: dt.date
    strike: float
    option_type: str
    market_price: float
    bs_price: float
    baw_price: float
    x_bs: float
    x_baw: float
    volume: int

    @property
    def key(self):
        return (self.expiration_date, self.strike, self.option_type)


@dataclass(frozen=True)
class SeriesStats:
    n: int
    mean: float
    sd: float
    min: float
    max: float
    sd_defined: bool = True

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def contract_spec(record):
    """American contract described by an option-chain row."""
    return OptionContractSpec(record.option_type, ExerciseStyle.AMERICAN, record.strike,
                              time_to_expiry(record.trade_date, record.expiration_date))


def _make(record, mid, bs, baw):
    return ErrorRecord(record.trade_date, record.expiration_date, record.strike,
                       record.option_type.value, mid, bs, baw, bs - mid, baw - mid,
                       record.volume)


def compute_errors(record, params: MarketParams):
    """Price one row both ways; errors are model price minus mid price.

    Black-Scholes prices the European twin of the (American) contract.
    """
    spec = contract_spec(record)
    try:
        bs = bs_price(spec.european_twin(), params)
        baw = baw_price(spec, params)
    except OptnoiseError as exc:
        raise ContractPricingError((record.trade_date,) + record.key, exc) from exc
    return _make(record, mid_price(record), bs, baw)


def compute_errors_batch(records, spots, rates, sigmas, dividend_yield=0.0,
                         tol=DEFAULT_TOL, max_iter=DEFAULT_MAX_ITER):
    """Vectorised :func:`compute_errors` over rows with ``T > 0``, ``sigma > 0``.

    Output order matches ``records``.
    """
    n = len(records)
    if n == 0:
        return []
    S = np.asarray(spots, dtype=float)
    r = np.asarray(rates, dtype=float)
    sig = np.asarray(sigmas, dtype=float)
    K = np.fromiter((rec.strike for rec in records), float, n)
    T = np.fromiter((time_to_expiry(rec.trade_date, rec.expiration_date) for rec in records),
                    float, n)
    if np.any(T <= 0) or np.any(sig <= 0):
        raise DomainError("batch pricing needs T > 0 and sigma > 0 on every row")
    is_call = np.fromiter((rec.option_type is OptionType.CALL for rec in records), np.int8, n)
    b = r - dividend_yield
    bs = np.maximum(kernels.bs_price_batch(is_call, S, K, T, r, b, sig), 0.0)
    baw, s_crit, iters, status = kernels.baw_price_batch(is_call, S, K, T, r, b, sig,
                                                         tol, max_iter)
    bad = np.flatnonzero(status != 0)
    if bad.size:
        rec = records[bad[0]]
        raise ContractPricingError((rec.trade_date,) + rec.key,
                                   f"critical price did not converge (last {s_crit[bad[0]]:.6g})")
    baw = np.maximum(baw, 0.0)
    return [_make(rec, mid_price(rec), float(bs[i]), float(baw[i]))
            for i, rec in enumerate(records)]


def drop_outliers(errors: Sequence[ErrorRecord], threshold=DEFAULT_OUTLIER_THRESHOLD):
    """Remove rows where either absolute error exceeds ``threshold``.

    Returns ``(retained, dropped_count)``.
    """
    if not threshold > 0:
        raise DomainError("threshold must be > 0")
    kept = [e for e in errors if abs(e.x_bs) <= threshold and abs(e.x_baw) <= threshold]
    return kept, len(errors) - len(kept)


def descriptive_stats(series):
    """n, mean, sample sd, min and max.

    With a single observation the sd is reported as 0 and ``sd_defined``
    is False.
    """
    x = np.asarray(series, dtype=float)
    if x.size == 0:
        raise DomainError("descriptive_stats needs at least one value")
    n = int(x.size)
    if n == 1:
        sd, ok = 0.0, False
    else:
        sd, ok = float(x.std(ddof=1)), True
    return SeriesStats(n, float(x.mean()), sd, float(x.min()), float(x.max()), ok)


_COLUMNS = [f.name for f in fields(ErrorRecord)]


def write_error_records(path, errors: Sequence[ErrorRecord]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(_COLUMNS)
        for e in errors:
            w.writerow([_cell(getattr(e, c)) for c in _COLUMNS])


def _cell(value):
    if isinstance(value, dt.date):
        return value.isoformat()
    if isinstance(value, float):
        return repr(value)  # round-trips exactly
    return value


def read_error_records(source) -> List[ErrorRecord]:
    stream = _text_stream(source)
    try:
        reader = csv.DictReader(stream)
        missing = [c for c in _COLUMNS if c not in (reader.fieldnames or [])]
        if missing:
            raise SchemaError(f"missing required column {missing[0]!r}")
        out = []
        for row in reader:
            out.append(ErrorRecord(
                parse_date(row["trade_date"]), parse_date(row["expiration_date"]),
                float(row["strike"]), row["option_type"], float(row["market_price"]),
                float(row["bs_price"]), float(row["baw_price"]), float(row["x_bs"]),
                float(row["x_baw"]), int(row["volume"])))
    finally:
        if isinstance(source, (str, os.PathLike)):
            stream.close()
    return out
