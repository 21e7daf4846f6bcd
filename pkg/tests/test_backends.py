import numpy as np
import pytest

from optnoise import _backend, _pykernels as py

cy = pytest.importorskip("optnoise._kernels")


def test_backend_reports_choice():
    assert _backend.BACKEND in ("cython", "python")


@pytest.fixture
def draws():
    rng = np.random.default_rng(7)
    n = 400
    return dict(
        is_call=rng.integers(0, 2, n).astype(np.int8),
        S=rng.uniform(50, 150, n), K=rng.uniform(60, 140, n),
        T=rng.uniform(0.02, 2.0, n), r=rng.uniform(0.001, 0.1, n),
        b=rng.uniform(-0.05, 0.1, n), sigma=rng.uniform(0.05, 0.8, n),
    )


def test_bs_batch_agrees(draws):
    args = [draws[k] for k in ("is_call", "S", "K", "T", "r", "b", "sigma")]
    np.testing.assert_allclose(cy.bs_price_batch(*args), py.bs_price_batch(*args),
                               rtol=1e-13, atol=1e-13)


def test_baw_batch_agrees(draws):
    args = [draws[k] for k in ("is_call", "S", "K", "T", "r", "b", "sigma")]
    pc, sc, ic, stc = cy.baw_price_batch(*args, 1e-6, 100)
    pp, sp, ip, stp = py.baw_price_batch(*args, 1e-6, 100)
    np.testing.assert_array_equal(stc, stp)
    np.testing.assert_array_equal(ic, ip)
    np.testing.assert_allclose(pc, pp, rtol=1e-11, atol=1e-11)
    np.testing.assert_allclose(sc, sp, rtol=1e-11)


@pytest.mark.parametrize("american", [False, True])
@pytest.mark.parametrize("is_call", [False, True])
def test_crr_agrees(american, is_call):
    a = cy.crr_price(is_call, american, 95.0, 100.0, 0.75, 0.05, 0.02, 0.3, 2000)
    b = py.crr_price(is_call, american, 95.0, 100.0, 0.75, 0.05, 0.02, 0.3, 2000)
    assert a == pytest.approx(b, rel=1e-11)


def test_scalar_helpers_agree():
    for x in (-7.5, -1.0, 0.0, 0.3, 6.0):
        assert cy.norm_cdf(x) == py.norm_cdf(x)
    assert cy.baw_q(0.5, 0.04, 0.01, 0.25) == pytest.approx(py.baw_q(0.5, 0.04, 0.01, 0.25), rel=1e-14)
