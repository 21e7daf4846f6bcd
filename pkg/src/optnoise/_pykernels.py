"""Pure-Python pricing kernels.

Drop-in fallback for the compiled ``_kernels`` extension; both expose the
same functions with the same argument order and return conventions so
``_backend`` can select either at import time.

Conventions
-----------
All kernels assume ``T > 0`` and ``sigma > 0``; the public wrappers in
:mod:`optnoise.pricing` screen degenerate inputs first.  ``b`` is the cost
of carry (rate minus dividend yield).  Solver status codes: ``0`` converged,
``1`` iteration limit reached.
"""
import math

import numpy as np

RATE_EPS = 1e-12
# call boundaries beyond this multiple of the strike are reported as +inf
BOUNDARY_CAP = 1e8
TINY = 1e-300
_SQRT2 = math.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def norm_cdf(x):
    return 0.5 * math.erfc(-x / _SQRT2)


def norm_pdf(x):
    return _INV_SQRT_2PI * math.exp(-0.5 * x * x)


def bs_price(is_call, S, K, T, r, b, sigma):
    sd = sigma * math.sqrt(T)
    d1 = (math.log(S / K) + (b + 0.5 * sigma * sigma) * T) / sd
    d2 = d1 - sd
    carry = math.exp((b - r) * T)
    disc = math.exp(-r * T)
    if is_call:
        return S * carry * norm_cdf(d1) - K * disc * norm_cdf(d2)
    return K * disc * norm_cdf(-d2) - S * carry * norm_cdf(-d1)


def baw_q(T, r, b, sigma):
    """Return ``(q1, q2, big_x)``; ``big_x = 0`` flags the r -> 0 limit."""
    var = sigma * sigma
    n_minus_1 = 2.0 * b / var - 1.0
    if abs(r) < RATE_EPS:
        # 2r / (sigma^2 X) -> 2 / (sigma^2 T) as r -> 0
        big_x = 0.0
        k = 2.0 / (var * T)
    else:
        big_x = -math.expm1(-r * T)
        k = 2.0 * r / (var * big_x)
    root = math.sqrt(n_minus_1 * n_minus_1 + 4.0 * k)
    return 0.5 * (-n_minus_1 - root), 0.5 * (-n_minus_1 + root), big_x


def value_matching(is_call, S, K, T, r, b, sigma, q):
    """Residual of the value-matching condition and its derivative in S."""
    sd = sigma * math.sqrt(T)
    d1 = (math.log(S / K) + (b + 0.5 * sigma * sigma) * T) / sd
    d2 = d1 - sd
    carry = math.exp((b - r) * T)
    disc = math.exp(-r * T)
    slope = carry * norm_pdf(d1) / (sd * q)
    if is_call:
        nd1 = norm_cdf(d1)
        euro = S * carry * nd1 - K * disc * norm_cdf(d2)
        lift = 1.0 - carry * nd1
        g = S - K - euro - lift * S / q
        dg = lift * (1.0 - 1.0 / q) + slope
    else:
        nmd1 = norm_cdf(-d1)
        euro = K * disc * norm_cdf(-d2) - S * carry * nmd1
        lift = 1.0 - carry * nmd1
        g = K - S - euro + lift * S / q
        dg = -lift * (1.0 - 1.0 / q) + slope
    return g, dg


def baw_critical_price(is_call, K, T, r, b, sigma, tol, max_iter):
    """Solve for the early-exercise boundary.

    Newton-Raphson seeded at the strike, safeguarded by a bracket: a Newton
    step that leaves the bracket (or the positive half-line) is replaced by
    bisection, or by doubling while a call's upper bracket is still open.

    Returns ``(s_crit, iterations, residual, status)``.  Calls with
    ``b >= r`` and any option with ``r ~ 0`` have no finite boundary:
    ``+inf`` for calls and ``0.0`` for puts, with zero iterations.  A call
    boundary shown to exceed ``BOUNDARY_CAP * K`` is also reported as
    ``+inf``: the residual cannot be resolved in double precision there and
    the premium it would carry is below ``S * (1 - exp((b - r) T))``.
    """
    if abs(r) < RATE_EPS:
        return (math.inf if is_call else 0.0), 0, 0.0, 0
    if is_call and b >= r:
        return math.inf, 0, 0.0, 0
    q1, q2, _ = baw_q(T, r, b, sigma)
    q = q2 if is_call else q1
    target = tol * K
    if is_call:
        lo, hi = K, math.inf      # g(lo) < 0 < g(hi)
    else:
        lo, hi = 0.0, K           # g(lo) > 0 > g(hi)
    s = K
    g, dg = value_matching(is_call, s, K, T, r, b, sigma, q)
    if abs(g) < target:
        return s, 0, g, 0
    for it in range(1, max_iter + 1):
        below = g < 0.0 if is_call else g > 0.0
        if below:
            lo = max(lo, s)
            if is_call and lo > BOUNDARY_CAP * K:
                return math.inf, it, 0.0, 0
        else:
            hi = min(hi, s)
        step = s - g / dg if dg != 0.0 else math.nan
        if math.isfinite(step) and lo < step < hi:
            s = step
        elif math.isinf(hi):
            s = 2.0 * max(s, lo)
        else:
            s = 0.5 * (lo + hi)
        g, dg = value_matching(is_call, s, K, T, r, b, sigma, q)
        if abs(g) < target:
            return s, it, g, 0
    return s, max_iter, g, 1


def baw_price(is_call, S, K, T, r, b, sigma, tol, max_iter):
    """Return ``(price, s_crit, iterations, residual, status)``."""
    euro = bs_price(is_call, S, K, T, r, b, sigma)
    s_crit, iters, resid, status = baw_critical_price(
        is_call, K, T, r, b, sigma, tol, max_iter)
    if status != 0:
        return math.nan, s_crit, iters, resid, status
    if is_call:
        if math.isinf(s_crit):
            return euro, s_crit, iters, resid, status
        if S >= s_crit:
            return S - K, s_crit, iters, resid, status
    else:
        if s_crit == 0.0:
            return euro, s_crit, iters, resid, status
        if S <= s_crit:
            return K - S, s_crit, iters, resid, status
    q1, q2, _ = baw_q(T, r, b, sigma)
    sd = sigma * math.sqrt(T)
    d1 = (math.log(s_crit / K) + (b + 0.5 * sigma * sigma) * T) / sd
    carry = math.exp((b - r) * T)
    if is_call:
        a2 = s_crit / q2 * (1.0 - carry * norm_cdf(d1))
        price = euro + a2 * (S / s_crit) ** q2
    else:
        a1 = -s_crit / q1 * (1.0 - carry * norm_cdf(-d1))
        price = euro + a1 * (S / s_crit) ** q1
    return price, s_crit, iters, resid, status


def crr_price(is_call, american, S, K, T, r, b, sigma, steps):
    """Cox-Ross-Rubinstein lattice price by backward induction."""
    dt = T / steps
    u = math.exp(sigma * math.sqrt(dt))
    d = 1.0 / u
    p = (math.exp(b * dt) - d) / (u - d)
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"risk-neutral probability {p} outside [0, 1]")
    disc = math.exp(-r * dt)
    pu, pd = disc * p, disc * (1.0 - p)
    # node prices S * u^k for k = -steps..steps
    spots = S * np.exp(sigma * math.sqrt(dt) * np.arange(-steps, steps + 1))
    terminal = spots[0::2]
    values = np.maximum(terminal - K, 0.0) if is_call else np.maximum(K - terminal, 0.0)
    for i in range(steps - 1, -1, -1):
        values = pu * values[1:] + pd * values[:-1]
        values[values < TINY] = 0.0  # subnormals are very slow
        if american:
            nodes = spots[steps - i:steps + i + 1:2]
            exercise = nodes - K if is_call else K - nodes
            np.maximum(values, exercise, out=values)
    return float(values[0])


def bs_price_batch(is_call, S, K, T, r, b, sigma):
    n = len(S)
    out = np.empty(n)
    for i in range(n):
        out[i] = bs_price(bool(is_call[i]), S[i], K[i], T[i], r[i], b[i], sigma[i])
    return out


def baw_price_batch(is_call, S, K, T, r, b, sigma, tol, max_iter):
    """Vectorised :func:`baw_price`; returns four arrays."""
    n = len(S)
    price = np.empty(n)
    s_crit = np.empty(n)
    iters = np.empty(n, dtype=np.int64)
    status = np.empty(n, dtype=np.int64)
    for i in range(n):
        price[i], s_crit[i], iters[i], _, status[i] = baw_price(
            bool(is_call[i]), S[i], K[i], T[i], r[i], b[i], sigma[i], tol, max_iter)
    return price, s_crit, iters, status
