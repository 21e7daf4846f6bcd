"""Independent reference computations used only by the test-suite.

Nothing here imports optnoise: each oracle re-derives its quantity from
scipy primitives so that agreement is meaningful.
"""
import math

import numpy as np
from scipy import integrate, stats


def normal_cdf_quad(x):
    val, _ = integrate.quad(lambda z: math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi),
                            -np.inf, x, epsabs=1e-14, epsrel=1e-14)
    return val


def bs_quadrature(is_call, S, K, T, r, sigma, q=0.0):
    """Discounted risk-neutral expectation of the payoff by quadrature."""
    drift = (r - q - 0.5 * sigma ** 2) * T
    vol = sigma * math.sqrt(T)
    z_star = (math.log(K / S) - drift) / vol

    def integrand(z):
        st = S * math.exp(drift + vol * z)
        pay = st - K if is_call else K - st
        return pay * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)

    if is_call:
        lo, hi = z_star, max(z_star, 0.0) + 40.0
    else:
        lo, hi = min(z_star, 0.0) - 40.0, z_star
    if hi <= lo:
        return 0.0
    val, _ = integrate.quad(integrand, lo, hi, epsabs=1e-13, epsrel=1e-13, limit=200)
    return math.exp(-r * T) * val


def put_value_matching(S, K, T, r, b, sigma):
    """K - S - p(S) + (1 - e^{(b-r)T} N(-d1)) S / q1, written from scratch."""
    n = stats.norm
    m = 2 * r / sigma ** 2
    nn = 2 * b / sigma ** 2
    k = m / (1 - math.exp(-r * T))
    q1 = (-(nn - 1) - math.sqrt((nn - 1) ** 2 + 4 * k)) / 2
    d1 = (math.log(S / K) + (b + sigma ** 2 / 2) * T) / (sigma * math.sqrt(T))
    d2 = d1 - sigma * math.sqrt(T)
    p = K * math.exp(-r * T) * n.cdf(-d2) - S * math.exp((b - r) * T) * n.cdf(-d1)
    return K - S - p + (1 - math.exp((b - r) * T) * n.cdf(-d1)) * S / q1


def bisect(f, lo, hi, width=1e-10):
    flo = f(lo)
    while hi - lo > width:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def ols_normal_equations(X, y):
    return np.linalg.solve(X.T @ X, X.T @ y)
