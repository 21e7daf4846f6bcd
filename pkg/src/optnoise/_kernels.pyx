# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled pricing kernels.

Mirrors ``_pykernels`` function for function; see that module for the
conventions.  Results agree with the fallback to rounding error.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport erfc, exp, expm1, log, sqrt, fabs, pow, isfinite, isinf, INFINITY, NAN

cnp.import_array()

RATE_EPS = 1e-12
cdef double _RATE_EPS = 1e-12
cdef double _BOUNDARY_CAP = 1e8
cdef double _TINY = 1e-300
BOUNDARY_CAP = 1e8
cdef double _SQRT2 = 1.4142135623730951
cdef double _INV_SQRT_2PI = 0.3989422804014327


cdef inline double _cdf(double x) noexcept nogil:
    return 0.5 * erfc(-x / _SQRT2)


cdef inline double _pdf(double x) noexcept nogil:
    return _INV_SQRT_2PI * exp(-0.5 * x * x)


cdef inline double _bs(bint is_call, double S, double K, double T, double r,
                       double b, double sigma) noexcept nogil:
    cdef double sd = sigma * sqrt(T)
    cdef double d1 = (log(S / K) + (b + 0.5 * sigma * sigma) * T) / sd
    cdef double d2 = d1 - sd
    cdef double carry = exp((b - r) * T)
    cdef double disc = exp(-r * T)
    if is_call:
        return S * carry * _cdf(d1) - K * disc * _cdf(d2)
    return K * disc * _cdf(-d2) - S * carry * _cdf(-d1)


cdef void _q(double T, double r, double b, double sigma,
             double* q1, double* q2, double* big_x) noexcept nogil:
    cdef double var = sigma * sigma
    cdef double nm1 = 2.0 * b / var - 1.0
    cdef double k, root
    if fabs(r) < _RATE_EPS:
        big_x[0] = 0.0
        k = 2.0 / (var * T)
    else:
        big_x[0] = -expm1(-r * T)
        k = 2.0 * r / (var * big_x[0])
    root = sqrt(nm1 * nm1 + 4.0 * k)
    q1[0] = 0.5 * (-nm1 - root)
    q2[0] = 0.5 * (-nm1 + root)


cdef void _vm(bint is_call, double S, double K, double T, double r, double b,
              double sigma, double q, double* g, double* dg) noexcept nogil:
    cdef double sd = sigma * sqrt(T)
    cdef double d1 = (log(S / K) + (b + 0.5 * sigma * sigma) * T) / sd
    cdef double d2 = d1 - sd
    cdef double carry = exp((b - r) * T)
    cdef double disc = exp(-r * T)
    cdef double slope = carry * _pdf(d1) / (sd * q)
    cdef double nd, euro, lift
    if is_call:
        nd = _cdf(d1)
        euro = S * carry * nd - K * disc * _cdf(d2)
        lift = 1.0 - carry * nd
        g[0] = S - K - euro - lift * S / q
        dg[0] = lift * (1.0 - 1.0 / q) + slope
    else:
        nd = _cdf(-d1)
        euro = K * disc * _cdf(-d2) - S * carry * nd
        lift = 1.0 - carry * nd
        g[0] = K - S - euro + lift * S / q
        dg[0] = -lift * (1.0 - 1.0 / q) + slope


cdef int _solve(bint is_call, double K, double T, double r, double b,
                double sigma, double tol, int max_iter,
                double* s_out, int* it_out, double* g_out) noexcept nogil:
    cdef double q1, q2, big_x, q, target, lo, hi, s, g, dg, step
    cdef int it
    cdef bint below
    if fabs(r) < _RATE_EPS or (is_call and b >= r):
        s_out[0] = INFINITY if is_call else 0.0
        it_out[0] = 0
        g_out[0] = 0.0
        return 0
    _q(T, r, b, sigma, &q1, &q2, &big_x)
    q = q2 if is_call else q1
    target = tol * K
    if is_call:
        lo = K
        hi = INFINITY
    else:
        lo = 0.0
        hi = K
    s = K
    _vm(is_call, s, K, T, r, b, sigma, q, &g, &dg)
    if fabs(g) < target:
        s_out[0] = s
        it_out[0] = 0
        g_out[0] = g
        return 0
    for it in range(1, max_iter + 1):
        below = (g < 0.0) if is_call else (g > 0.0)
        if below:
            if s > lo:
                lo = s
            if is_call and lo > _BOUNDARY_CAP * K:
                s_out[0] = INFINITY
                it_out[0] = it
                g_out[0] = 0.0
                return 0
        elif s < hi:
            hi = s
        step = s - g / dg if dg != 0.0 else NAN
        if isfinite(step) and lo < step < hi:
            s = step
        elif isinf(hi):
            s = 2.0 * (s if s > lo else lo)
        else:
            s = 0.5 * (lo + hi)
        _vm(is_call, s, K, T, r, b, sigma, q, &g, &dg)
        if fabs(g) < target:
            s_out[0] = s
            it_out[0] = it
            g_out[0] = g
            return 0
    s_out[0] = s
    it_out[0] = max_iter
    g_out[0] = g
    return 1


cdef int _baw(bint is_call, double S, double K, double T, double r, double b,
              double sigma, double tol, int max_iter, double* price,
              double* s_crit, int* iters, double* resid) noexcept nogil:
    cdef double euro = _bs(is_call, S, K, T, r, b, sigma)
    cdef double q1, q2, big_x, d1, carry
    cdef int status = _solve(is_call, K, T, r, b, sigma, tol, max_iter,
                             s_crit, iters, resid)
    if status != 0:
        price[0] = NAN
        return status
    if is_call:
        if isinf(s_crit[0]):
            price[0] = euro
            return 0
        if S >= s_crit[0]:
            price[0] = S - K
            return 0
    else:
        if s_crit[0] == 0.0:
            price[0] = euro
            return 0
        if S <= s_crit[0]:
            price[0] = K - S
            return 0
    _q(T, r, b, sigma, &q1, &q2, &big_x)
    d1 = (log(s_crit[0] / K) + (b + 0.5 * sigma * sigma) * T) / (sigma * sqrt(T))
    carry = exp((b - r) * T)
    if is_call:
        price[0] = euro + s_crit[0] / q2 * (1.0 - carry * _cdf(d1)) * pow(S / s_crit[0], q2)
    else:
        price[0] = euro - s_crit[0] / q1 * (1.0 - carry * _cdf(-d1)) * pow(S / s_crit[0], q1)
    return 0


def norm_cdf(double x):
    return _cdf(x)


def norm_pdf(double x):
    return _pdf(x)


def bs_price(bint is_call, double S, double K, double T, double r, double b, double sigma):
    return _bs(is_call, S, K, T, r, b, sigma)


def baw_q(double T, double r, double b, double sigma):
    cdef double q1, q2, big_x
    _q(T, r, b, sigma, &q1, &q2, &big_x)
    return q1, q2, big_x


def value_matching(bint is_call, double S, double K, double T, double r,
                   double b, double sigma, double q):
    cdef double g, dg
    _vm(is_call, S, K, T, r, b, sigma, q, &g, &dg)
    return g, dg


def baw_critical_price(bint is_call, double K, double T, double r, double b,
                       double sigma, double tol, int max_iter):
    cdef double s, g
    cdef int it
    cdef int status = _solve(is_call, K, T, r, b, sigma, tol, max_iter, &s, &it, &g)
    return s, it, g, status


def baw_price(bint is_call, double S, double K, double T, double r, double b,
              double sigma, double tol, int max_iter):
    cdef double price, s, g
    cdef int it
    cdef int status = _baw(is_call, S, K, T, r, b, sigma, tol, max_iter,
                           &price, &s, &it, &g)
    return price, s, it, g, status


def crr_price(bint is_call, bint american, double S, double K, double T,
              double r, double b, double sigma, int steps):
    cdef double dt = T / steps
    cdef double u = exp(sigma * sqrt(dt))
    cdef double d = 1.0 / u
    cdef double p = (exp(b * dt) - d) / (u - d)
    if not (0.0 <= p <= 1.0):
        raise ValueError(f"risk-neutral probability {p} outside [0, 1]")
    cdef double disc = exp(-r * dt)
    cdef double pu = disc * p
    cdef double pd = disc * (1.0 - p)
    cdef double u2 = u * u
    cdef cnp.ndarray[cnp.double_t, ndim=1] buf = np.empty(steps + 1)
    cdef double[::1] v = buf
    cdef double node, ex, cont
    cdef int i, j
    with nogil:
        node = S * pow(d, steps)
        for j in range(steps + 1):
            ex = node - K if is_call else K - node
            v[j] = ex if ex > 0.0 else 0.0
            node *= u2
        for i in range(steps - 1, -1, -1):
            if not american:
                for j in range(i + 1):
                    ex = pu * v[j + 1] + pd * v[j]
                    v[j] = ex if ex > _TINY else 0.0  # avoid slow subnormals
                continue
            node = S * pow(d, i)
            for j in range(i + 1):
                cont = pu * v[j + 1] + pd * v[j]
                ex = node - K if is_call else K - node
                v[j] = ex if ex > cont else (cont if cont > _TINY else 0.0)
                node *= u2
    return v[0]


def bs_price_batch(is_call, S, K, T, r, b, sigma):
    cdef const signed char[::1] c = np.ascontiguousarray(is_call, dtype=np.int8)
    cdef const double[::1] s_ = np.ascontiguousarray(S, dtype=np.float64)
    cdef const double[::1] k_ = np.ascontiguousarray(K, dtype=np.float64)
    cdef const double[::1] t_ = np.ascontiguousarray(T, dtype=np.float64)
    cdef const double[::1] r_ = np.ascontiguousarray(r, dtype=np.float64)
    cdef const double[::1] b_ = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[::1] v_ = np.ascontiguousarray(sigma, dtype=np.float64)
    cdef Py_ssize_t n = s_.shape[0], i
    out = np.empty(n)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = _bs(c[i] != 0, s_[i], k_[i], t_[i], r_[i], b_[i], v_[i])
    return out


def baw_price_batch(is_call, S, K, T, r, b, sigma, double tol, int max_iter):
    cdef const signed char[::1] c = np.ascontiguousarray(is_call, dtype=np.int8)
    cdef const double[::1] s_ = np.ascontiguousarray(S, dtype=np.float64)
    cdef const double[::1] k_ = np.ascontiguousarray(K, dtype=np.float64)
    cdef const double[::1] t_ = np.ascontiguousarray(T, dtype=np.float64)
    cdef const double[::1] r_ = np.ascontiguousarray(r, dtype=np.float64)
    cdef const double[::1] b_ = np.ascontiguousarray(b, dtype=np.float64)
    cdef const double[::1] v_ = np.ascontiguousarray(sigma, dtype=np.float64)
    cdef Py_ssize_t n = s_.shape[0], i
    price = np.empty(n)
    s_crit = np.empty(n)
    iters = np.empty(n, dtype=np.int64)
    status = np.empty(n, dtype=np.int64)
    cdef double[::1] po = price
    cdef double[::1] so = s_crit
    cdef long long[::1] io = iters
    cdef long long[::1] st = status
    cdef double p, s, g
    cdef int it
    with nogil:
        for i in range(n):
            st[i] = _baw(c[i] != 0, s_[i], k_[i], t_[i], r_[i], b_[i], v_[i],
                         tol, max_iter, &p, &s, &it, &g)
            po[i] = p
            so[i] = s
            io[i] = it
    return price, s_crit, iters, status
