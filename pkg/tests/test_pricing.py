import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from optnoise.exceptions import CriticalPriceError, DegenerateInputError, DomainError
from optnoise.pricing import (
    ExerciseStyle, MarketParams, OptionContractSpec, OptionType, baw_critical_price,
    baw_intermediates, baw_price, baw_q_values, bs_d_values, bs_price,
    crr_binomial_price, intrinsic_value, std_normal_cdf, value_matching_residual,
)

import oracles

# independent bisection (scipy), 1e-10 bracket width, frozen
PUT_CRITICAL_FIXTURE = 89.36932551526797


def euro(kind, K, T):
    return OptionContractSpec(kind, ExerciseStyle.EUROPEAN, K, T)


def amer(kind, K, T):
    return OptionContractSpec(kind, ExerciseStyle.AMERICAN, K, T)


# -- normal CDF ---------------------------------------------------------------

def test_cdf_at_zero():
    assert std_normal_cdf(0.0) == 0.5


def test_cdf_tail_saturates():
    assert abs(std_normal_cdf(8.0) - 1.0) < 1e-15


def test_cdf_matches_quadrature():
    assert std_normal_cdf(1.0) == pytest.approx(oracles.normal_cdf_quad(1.0), abs=1e-12)
    assert std_normal_cdf(1.0) == pytest.approx(0.841344746, abs=1e-9)


@given(st.floats(-40, 40))
def test_cdf_symmetry(x):
    assert abs(std_normal_cdf(x) + std_normal_cdf(-x) - 1.0) < 1e-15


def test_cdf_monotone():
    xs = np.linspace(-10, 10, 4001)
    vals = [std_normal_cdf(x) for x in xs]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


@pytest.mark.parametrize("bad", [math.nan, math.inf, -math.inf])
def test_cdf_rejects_non_finite(bad):
    with pytest.raises(DomainError):
        std_normal_cdf(bad)


# -- d values -------------------------------------------------------------------

def test_d_values_at_the_money_zero_rate():
    d1, d2 = bs_d_values(euro("call", 100, 1.0), MarketParams(100, 0.0, 0.2))
    assert d1 == pytest.approx(0.1, abs=1e-15)
    assert d2 == pytest.approx(-0.1, abs=1e-15)


def test_d_values_with_rate():
    d1, d2 = bs_d_values(euro("call", 100, 1.0), MarketParams(100, 0.05, 0.2))
    assert d1 == pytest.approx(0.35, abs=1e-15)
    assert d2 == pytest.approx(0.15, abs=1e-15)
    assert d1 - d2 == pytest.approx(0.2, abs=1e-15)


def test_d_values_degenerate():
    with pytest.raises(DegenerateInputError):
        bs_d_values(euro("call", 100, 0.0), MarketParams(100, 0.05, 0.2))
    with pytest.raises(DegenerateInputError):
        bs_d_values(euro("call", 100, 1.0), MarketParams(100, 0.05, 0.0))


# -- Black-Scholes --------------------------------------------------------------

def test_bs_call_reference_two_oracles():
    price = bs_price(euro("call", 100, 1.0), MarketParams(100, 0.05, 0.2))
    quad = oracles.bs_quadrature(True, 100, 100, 1.0, 0.05, 0.2)
    lattice = crr_binomial_price(euro("call", 100, 1.0), MarketParams(100, 0.05, 0.2), 50_000)
    assert abs(quad - lattice) < 1e-4
    assert price == pytest.approx(10.4506, abs=1e-4)
    assert price == pytest.approx(quad, abs=1e-10)
    assert price == pytest.approx(lattice, abs=1e-4)


def test_bs_boundary_at_expiry():
    assert bs_price(euro("call", 100, 0.0), MarketParams(120, 0.05, 0.2)) == 20.0
    assert bs_price(euro("put", 100, 0.0), MarketParams(120, 0.05, 0.2)) == 0.0


def test_bs_put_deterministic_forward():
    assert bs_price(euro("put", 100, 1.0), MarketParams(100, 0.0, 1e-9)) == pytest.approx(0, abs=1e-6)


def test_bs_dividend_matches_quadrature():
    spec = euro("put", 95, 0.7)
    params = MarketParams(100, 0.03, 0.35, dividend_yield=0.02)
    assert bs_price(spec, params) == pytest.approx(
        oracles.bs_quadrature(False, 100, 95, 0.7, 0.03, 0.35, q=0.02), abs=1e-9)


def test_bs_rejects_bad_inputs():
    with pytest.raises(DomainError):
        euro("call", -1, 1.0)
    with pytest.raises(DomainError):
        MarketParams(-100, 0.05, 0.2)
    with pytest.raises(DomainError):
        MarketParams(100, 0.05, -0.2)
    with pytest.raises(DomainError):
        bs_price(amer("call", 100, 1.0), MarketParams(100, 0.05, 0.2))


@settings(max_examples=300)
@given(S=st.floats(20, 300), K=st.floats(20, 300), T=st.floats(0.01, 3),
       r=st.floats(0, 0.15), q=st.floats(0, 0.1), sigma=st.floats(0.05, 1.0))
def test_put_call_parity(S, K, T, r, q, sigma):
    p = MarketParams(S, r, sigma, q)
    c = bs_price(euro("call", K, T), p)
    pu = bs_price(euro("put", K, T), p)
    assert c - pu == pytest.approx(S * math.exp(-q * T) - K * math.exp(-r * T), abs=1e-10)


def test_bs_monotonicity():
    spots = np.linspace(50, 150, 101)
    for sigma in (0.1, 0.3, 0.6):
        calls = [bs_price(euro("call", 100, 0.5), MarketParams(s, 0.03, sigma)) for s in spots]
        puts = [bs_price(euro("put", 100, 0.5), MarketParams(s, 0.03, sigma)) for s in spots]
        assert np.all(np.diff(calls) >= 0)
        assert np.all(np.diff(puts) <= 0)
    vols = np.linspace(0.05, 1.0, 96)
    calls = [bs_price(euro("call", 100, 0.5), MarketParams(90, 0.03, v)) for v in vols]
    assert np.all(np.diff(calls) >= 0)


# -- BAW q values -------------------------------------------------------------------

def test_big_x_value():
    _, _, big_x = baw_q_values(MarketParams(100, 0.05, 0.2), amer("call", 100, 1.0))
    assert big_x == pytest.approx(1 - math.exp(-0.05), abs=1e-15)
    assert big_x == pytest.approx(0.048771, abs=1e-6)


@settings(max_examples=200)
@given(r=st.floats(1e-4, 0.2), q=st.floats(0, 0.1), sigma=st.floats(0.05, 1.0),
       T=st.floats(0.01, 3))
def test_q_vieta_identities(r, q, sigma, T):
    p = MarketParams(100, r, sigma, q)
    q1, q2, big_x = baw_q_values(p, amer("put", 100, T))
    b = p.cost_of_carry
    assert q1 < 0 < q2
    assert q1 * q2 == pytest.approx(-2 * r / (sigma ** 2 * big_x), rel=1e-10)
    assert q1 + q2 == pytest.approx(-(2 * b / sigma ** 2 - 1), rel=1e-10, abs=1e-10)


def test_q_zero_rate_limit():
    q1, q2, big_x = baw_q_values(MarketParams(100, 0.0, 0.2), amer("put", 100, 0.5))
    assert big_x == 0.0
    assert q1 * q2 == pytest.approx(-2 / (0.04 * 0.5))
    near = baw_q_values(MarketParams(100, 1e-9, 0.2), amer("put", 100, 0.5))
    assert near[0] == pytest.approx(q1, rel=1e-6)


# -- critical price --------------------------------------------------------------

def test_call_without_dividend_has_no_boundary():
    crit = baw_critical_price(amer("call", 100, 0.5), MarketParams(100, 0.05, 0.3))
    assert math.isinf(crit.critical_price)
    assert crit.iterations == 0


def test_put_critical_price_fixture():
    spec, params = amer("put", 100, 0.25), MarketParams(100, 0.08, 0.2)
    crit = baw_critical_price(spec, params)
    assert abs(crit.residual) < 1e-6 * 100
    assert crit.critical_price == pytest.approx(PUT_CRITICAL_FIXTURE, abs=1e-4)
    tight = baw_critical_price(spec, params, tol=1e-13)
    assert tight.critical_price == pytest.approx(PUT_CRITICAL_FIXTURE, abs=1e-8)
    # bracket check independent of the solver
    assert oracles.put_value_matching(PUT_CRITICAL_FIXTURE - 1e-6, 100, 0.25, 0.08, 0.08, 0.2) > 0
    assert oracles.put_value_matching(PUT_CRITICAL_FIXTURE + 1e-6, 100, 0.25, 0.08, 0.08, 0.2) < 0


@pytest.mark.parametrize("kind,q", [("call", 0.04), ("call", 0.12), ("put", 0.0), ("put", 0.03)])
def test_residual_contract(kind, q):
    for sigma in (0.1, 0.3, 0.5):
        for T in (0.1, 0.5, 2.0):
            spec, params = amer(kind, 100, T), MarketParams(100, 0.08, sigma, q)
            crit = baw_critical_price(spec, params)
            assert abs(value_matching_residual(spec, params, crit.critical_price)) < 1e-6 * 100
            assert crit.critical_price > 0


def test_call_boundary_far_out_is_found():
    # tiny dividend yield pushes S* far above 10 K
    crit = baw_critical_price(amer("call", 100, 1.0), MarketParams(100, 0.05, 0.2, 0.0005))
    assert crit.critical_price > 1000
    assert abs(crit.residual) < 1e-4


def test_solver_non_convergence_carries_state():
    with pytest.raises(CriticalPriceError) as info:
        baw_critical_price(amer("put", 100, 0.25), MarketParams(100, 0.08, 0.2), max_iter=1)
    err = info.value
    assert err.iterations == 1
    assert err.last_iterate > 0
    assert abs(err.residual) >= 1e-4


# -- BAW price --------------------------------------------------------------------

def test_american_call_no_dividend_equals_european():
    for S in (80, 100, 120):
        for sigma in (0.1, 0.3):
            p = MarketParams(S, 0.05, sigma)
            assert baw_price(amer("call", 100, 0.5), p) == pytest.approx(
                bs_price(euro("call", 100, 0.5), p), abs=1e-12)


def test_put_branches():
    params90 = MarketParams(90, 0.08, 0.2)
    inter = baw_intermediates(amer("put", 100, 0.25), params90)
    # the solved boundary lies just below 90, so the premium branch applies
    assert inter.critical_price < 90
    p = bs_price(euro("put", 100, 0.25), params90)
    expect = p + inter.a1 * (90 / inter.critical_price) ** inter.q1
    assert baw_price(amer("put", 100, 0.25), params90) == pytest.approx(expect, abs=1e-12)
    assert baw_price(amer("put", 100, 0.25), params90) >= 10.0
    # below the boundary the price is exactly K - S
    assert baw_price(amer("put", 100, 0.25), MarketParams(85, 0.08, 0.2)) == 15.0


def test_put_matches_american_lattice():
    spec, params = amer("put", 100, 0.25), MarketParams(100, 0.08, 0.2)
    lattice = crr_binomial_price(spec, params, 10_000)
    assert abs(baw_price(spec, params) - lattice) / lattice < 0.005


def test_call_with_dividend_exercises_above_boundary():
    spec, params = amer("call", 100, 0.5), MarketParams(100, 0.05, 0.25, 0.1)
    s_star = baw_critical_price(spec, params).critical_price
    above = MarketParams(s_star * 1.01, 0.05, 0.25, 0.1)
    assert baw_price(spec, above) == pytest.approx(s_star * 1.01 - 100)


def test_intermediate_signs():
    call = baw_intermediates(amer("call", 100, 0.5), MarketParams(100, 0.05, 0.3, 0.04))
    put = baw_intermediates(amer("put", 100, 0.5), MarketParams(100, 0.05, 0.3, 0.0))
    assert call.a2 > 0 and call.q2 > 0
    assert put.a1 > 0 and put.q1 < 0


def test_zero_rate_baw_is_european():
    p = MarketParams(100, 0.0, 0.3)
    assert baw_price(amer("put", 100, 0.5), p) == pytest.approx(bs_price(euro("put", 100, 0.5), p), abs=1e-14)


def test_baw_at_expiry_is_intrinsic():
    assert baw_price(amer("put", 100, 0.0), MarketParams(90, 0.05, 0.2)) == 10.0


@settings(max_examples=200, deadline=None)
@given(S=st.floats(50, 200), T=st.floats(0.02, 2), r=st.floats(0.001, 0.12),
       q=st.floats(0, 0.1), sigma=st.floats(0.05, 0.8), is_call=st.booleans())
def test_american_dominance(S, T, r, q, sigma, is_call):
    kind = "call" if is_call else "put"
    p = MarketParams(S, r, sigma, q)
    a = baw_price(amer(kind, 100, T), p)
    e = bs_price(euro(kind, 100, T), p)
    assert a >= e - 1e-12
    assert a >= intrinsic_value(amer(kind, 100, T), S) - 1e-12


# -- CRR lattice ----------------------------------------------------------------

def test_crr_single_step_by_hand():
    sigma = math.log(1.1)
    price = crr_binomial_price(euro("call", 100, 1.0), MarketParams(100, 0.0, sigma), 1)
    # p = (1 - 1/1.1) / (1.1 - 1/1.1) = 1/2.1; payoff 10 in the up state
    assert price == pytest.approx(10 / 2.1, abs=1e-12)


def test_crr_rejects_zero_steps():
    with pytest.raises(DomainError):
        crr_binomial_price(euro("call", 100, 1.0), MarketParams(100, 0.05, 0.2), 0)


@pytest.mark.parametrize("steps", [1, 2, 7, 50, 500])
def test_crr_american_dominates(steps):
    for kind in ("call", "put"):
        p = MarketParams(100, 0.06, 0.3, 0.03)
        assert crr_binomial_price(amer(kind, 100, 1.0), p, steps) >= \
            crr_binomial_price(euro(kind, 100, 1.0), p, steps)


def test_option_type_parsing():
    assert OptionType.parse("C") is OptionType.CALL
    assert OptionType.parse("Put") is OptionType.PUT
    with pytest.raises(DomainError):
        OptionType.parse("straddle")
