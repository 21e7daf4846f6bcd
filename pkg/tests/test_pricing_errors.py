import datetime as dt

import pytest
from hypothesis import given, strategies as st

from optnoise.exceptions import ContractPricingError, DomainError
from optnoise.market_data import OptionRecord
from optnoise.pricing import MarketParams, OptionType
from optnoise.pricing_errors import (
    ErrorRecord, compute_errors, compute_errors_batch, descriptive_stats, drop_outliers,
    read_error_records, write_error_records,
)

D0, D1 = dt.date(2016, 3, 1), dt.date(2016, 6, 17)


def rec(kind="put", strike=100.0, bid=5.9, ask=6.1, spot=100.0):
    return OptionRecord(D0, D1, OptionType(kind), strike, bid, ask, 10, 50, spot)


def err(x_bs, x_baw=0.0):
    return ErrorRecord(D0, D1, 100.0, "call", 5.0, 5.0 + x_bs, 5.0 + x_baw, x_bs, x_baw, 3)


def test_error_sign_convention():
    # model price below market gives a negative error
    e = ErrorRecord(D0, D1, 100.0, "call", 6.0, 5.0, 5.0, 5.0 - 6.0, 5.0 - 6.0, 1)
    assert e.x_bs == -1.0
    out = compute_errors(rec(), MarketParams(100.0, 0.02, 0.2))
    assert out.market_price == pytest.approx(6.0)
    assert out.x_bs == out.bs_price - out.market_price
    assert out.x_baw == out.baw_price - out.market_price
    assert out.bs_price < out.market_price and out.x_bs < 0


@pytest.mark.parametrize("kind", ["call", "put"])
@pytest.mark.parametrize("strike", [80.0, 100.0, 120.0])
def test_baw_error_dominates_bs_error(kind, strike):
    e = compute_errors(rec(kind, strike), MarketParams(100.0, 0.03, 0.25))
    assert e.x_baw - e.x_bs == pytest.approx(e.baw_price - e.bs_price)
    assert e.x_baw - e.x_bs >= -1e-12


def test_pricing_failure_carries_key():
    with pytest.raises(ContractPricingError) as info:
        compute_errors(rec(), MarketParams(100.0, 0.03, 0.0))
    assert info.value.key == (D0, D1, 100.0, "put")


def test_batch_matches_scalar():
    rows = [rec(k, s) for k in ("call", "put") for s in (90.0, 100.0, 110.0)]
    batch = compute_errors_batch(rows, [100.0] * 6, [0.03] * 6, [0.25] * 6)
    for r, b in zip(rows, batch):
        assert b == compute_errors(r, MarketParams(100.0, 0.03, 0.25))


def test_batch_rejects_degenerate_rows():
    with pytest.raises(DomainError):
        compute_errors_batch([rec()], [100.0], [0.03], [0.0])


def test_outlier_rule():
    kept, dropped = drop_outliers([err(24.973), err(25.1), err(0.0, -30.0), err(-25.0)])
    assert [e.x_bs for e in kept] == [24.973, -25.0]
    assert dropped == 2
    assert drop_outliers([]) == ([], 0)
    with pytest.raises(DomainError):
        drop_outliers([], threshold=0)


@given(st.lists(st.tuples(st.floats(-60, 60), st.floats(-60, 60)), max_size=40))
def test_outlier_conservation(pairs):
    rows = [err(a, b) for a, b in pairs]
    kept, dropped = drop_outliers(rows)
    assert len(kept) + dropped == len(rows)
    assert all(k in rows for k in kept)


def test_descriptive_stats_examples():
    s = descriptive_stats([1, 1, 1])
    assert (s.mean, s.sd) == (1.0, 0.0)
    s = descriptive_stats([0, 10])
    assert s.mean == 5.0
    assert s.sd == pytest.approx(50 ** 0.5, abs=1e-12)
    assert s.sd == pytest.approx(7.0711, abs=1e-4)
    s = descriptive_stats([-3])
    assert s.mean == -3 and s.sd == 0 and not s.sd_defined
    with pytest.raises(DomainError):
        descriptive_stats([])


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=50))
def test_stats_invariants(xs):
    s = descriptive_stats(xs)
    assert s.min <= s.mean + 1e-9 * max(1, abs(s.mean)) and s.mean <= s.max + 1e-9 * max(1, abs(s.mean))
    assert s.sd >= 0


def test_error_file_round_trip(tmp_path):
    rows = [compute_errors(rec(k), MarketParams(100.0, 0.03, 0.2)) for k in ("call", "put")]
    path = tmp_path / "errors.csv"
    write_error_records(path, rows)
    assert read_error_records(path) == rows
