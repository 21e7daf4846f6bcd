"""OLS with classical inference, PACF, augmented Dickey-Fuller, VIF and the
log-volume autoregression with pricing-error shocks.

Everything here is deterministic: no randomness, no threading.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg, stats

from .exceptions import CollinearityError, DomainError

RANK_TOL = 1e-10


@dataclass(frozen=True)
class RegressionResult:
    names: Tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    t: np.ndarray
    p_values: np.ndarray
    cov: np.ndarray
    r_squared: float
    adjusted_r_squared: float
    f_statistic: float
    f_df: Tuple[int, int]
    f_pvalue: float
    residual_std_error: float
    df_resid: int
    n_observations: int
    residuals: np.ndarray = field(repr=False, compare=False)

    def index(self, name):
        return self.names.index(name)

    def coefficient(self, name):
        return float(self.coef[self.index(name)])

    def std_error(self, name):
        return float(self.se[self.index(name)])

    def p_value(self, name):
        return float(self.p_values[self.index(name)])

    def covariance(self, names):
        idx = [self.index(n) for n in names]
        return self.cov[np.ix_(idx, idx)]

    def to_dict(self):
        return {
            "names": list(self.names),
            "coef": self.coef.tolist(),
            "se": self.se.tolist(),
            "t": self.t.tolist(),
            "p_values": self.p_values.tolist(),
            "cov": self.cov.tolist(),
            "r_squared": self.r_squared,
            "adjusted_r_squared": self.adjusted_r_squared,
            "f_statistic": self.f_statistic,
            "f_df": list(self.f_df),
            "f_pvalue": self.f_pvalue,
            "residual_std_error": self.residual_std_error,
            "df_resid": self.df_resid,
            "n_observations": self.n_observations,
        }


def _factor(X, names):
    """Pivoted QR; raises CollinearityError naming the dependent columns."""
    Q, R, piv = linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    rank = int(np.sum(diag > RANK_TOL * diag[0])) if diag.size and diag[0] > 0 else 0
    if rank < X.shape[1]:
        dependent = [names[i] for i in sorted(piv[rank:])]
        raise CollinearityError(
            f"design is rank deficient ({rank} of {X.shape[1]}); "
            f"dependent columns: {', '.join(dependent)}", dependent)
    return Q, R, piv


def _solve(X, y, names):
    Q, R, piv = _factor(X, names)
    beta = np.empty(X.shape[1])
    beta[piv] = linalg.solve_triangular(R, Q.T @ y)
    return beta, R, piv


def _has_constant(X):
    return bool(np.any(np.all(X == X[0], axis=0) & (X[0] != 0)))


def ols_fit(design, response, names: Optional[Sequence[str]] = None):
    """Ordinary least squares with homoskedastic standard errors.

    Parameters
    ----------
    design : (n, k) array
        Regressors, including an intercept column when one is wanted.
    response : (n,) array
    names : sequence of str, optional
        Column labels; default ``x0 .. x{k-1}``.

    Notes
    -----
    Solved through a column-pivoted QR factorisation.  R^2 and F are
    centred when the design contains a constant column.
    """
    X = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DomainError("design must be (n, k) and response (n,)")
    n, k = X.shape
    names = tuple(names) if names is not None else tuple(f"x{i}" for i in range(k))
    if len(names) != k:
        raise DomainError("one name per design column")
    if n < k:
        raise DomainError(f"need at least as many rows ({n}) as columns ({k})")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DomainError("non-finite entries in regression inputs")

    beta, R, piv = _solve(X, y, names)
    resid = y - X @ beta
    ssr = float(resid @ resid)
    df_resid = n - k
    intercept = _has_constant(X)
    sst = float(((y - y.mean()) @ (y - y.mean())) if intercept else y @ y)

    rinv = linalg.solve_triangular(R, np.eye(k))
    xtx_inv_p = rinv @ rinv.T
    xtx_inv = np.empty((k, k))
    xtx_inv[np.ix_(piv, piv)] = xtx_inv_p
    sigma2 = ssr / df_resid if df_resid > 0 else math.nan
    cov = sigma2 * xtx_inv
    se = np.sqrt(np.diag(cov))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = beta / se
    p = 2.0 * stats.t.sf(np.abs(t), df_resid) if df_resid > 0 else np.full(k, math.nan)

    r2 = 1.0 - ssr / sst if sst > 0 else math.nan
    df_model = k - 1 if intercept else k
    if df_resid > 0 and sst > 0:
        adj = 1.0 - (1.0 - r2) * (n - 1 if intercept else n) / df_resid
    else:
        adj = math.nan
    if df_model > 0 and df_resid > 0 and ssr > 0:
        f = ((sst - ssr) / df_model) / (ssr / df_resid)
        f_p = float(stats.f.sf(f, df_model, df_resid))
    else:
        f, f_p = math.inf if ssr == 0 else math.nan, 0.0 if ssr == 0 else math.nan
    return RegressionResult(names, beta, se, t, p, cov, float(r2), float(adj), float(f),
                            (df_model, df_resid), f_p, math.sqrt(sigma2), df_resid, n, resid)


@dataclass(frozen=True)
class PacfResult:
    values: np.ndarray          # lag 1..max_lag
    significance_bound: float
    n: int

    @property
    def lags(self):
        return np.arange(1, len(self.values) + 1)


def lag_matrix(x, k):
    """Rows t = k..n-1 of ``[x_{t-1}, ..., x_{t-k}]``."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    return np.column_stack([x[k - i:n - i] for i in range(1, k + 1)]) if k else np.empty((n, 0))


def pacf(series, max_lag):
    """Sample partial autocorrelations by successive OLS autoregressions.

    The value at lag j is the coefficient on ``x_{t-j}`` in the OLS fit of
    ``x_t`` on a constant and ``x_{t-1} .. x_{t-j}`` over ``t = j .. n-1``.
    Values lie in [-1, 1] for stationary data; a unit-root series can push
    the lag-1 value marginally above 1.
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    if max_lag < 1:
        raise DomainError("max_lag must be >= 1")
    if n <= max_lag + 1:
        raise DomainError(f"series of length {n} too short for max_lag={max_lag}")
    vals = np.empty(max_lag)
    for j in range(1, max_lag + 1):
        X = np.column_stack([np.ones(n - j), lag_matrix(x, j)])
        names = ["const"] + [f"lag{i}" for i in range(1, j + 1)]
        vals[j - 1] = _solve(X, x[j:], names)[0][-1]
    return PacfResult(vals, 1.96 / math.sqrt(n), n)


def select_ar_order(result: PacfResult):
    """Largest lag whose |PACF| strictly exceeds the significance bound (0 if none)."""
    sig = np.flatnonzero(np.abs(result.values) > result.significance_bound)
    return int(sig[-1] + 1) if sig.size else 0


# Dickey-Fuller t-statistic quantiles (Fuller 1976; Hamilton Table B.6),
# rows by sample size, columns by probability 0.01, 0.025, 0.05, 0.10.
_DF_SIZES = np.array([25, 50, 100, 250, 500, 100000], dtype=float)
_DF_PROBS = np.array([0.01, 0.025, 0.05, 0.10])
_DF_CONST = np.array([
    [-3.75, -3.33, -3.00, -2.63],
    [-3.58, -3.22, -2.93, -2.60],
    [-3.51, -3.17, -2.89, -2.58],
    [-3.46, -3.14, -2.88, -2.57],
    [-3.44, -3.13, -2.87, -2.57],
    [-3.43, -3.12, -2.86, -2.57],
])
_DF_TREND = np.array([
    [-4.38, -3.95, -3.60, -3.24],
    [-4.15, -3.80, -3.50, -3.18],
    [-4.04, -3.73, -3.45, -3.15],
    [-3.99, -3.69, -3.43, -3.13],
    [-3.98, -3.68, -3.42, -3.13],
    [-3.96, -3.66, -3.41, -3.12],
])


def df_critical_values(nobs, include_trend=False):
    """Critical values at 1, 2.5, 5 and 10 %, linearly interpolated in n."""
    table = _DF_TREND if include_trend else _DF_CONST
    return np.array([np.interp(nobs, _DF_SIZES, table[:, j]) for j in range(table.shape[1])])


@dataclass(frozen=True)
class AdfResult:
    statistic: float
    lag_order: int
    includes_trend: bool
    n_obs: int
    critical_values: Dict[str, float]
    p_value: float              # interpolated, clamped to [0.01, 0.10]
    p_bound: str                # "p<=0.01", "interpolated" or "p>=0.10"
    reject_unit_root_at_5pct: bool

    def to_dict(self):
        return {
            "statistic": self.statistic, "lag_order": self.lag_order,
            "includes_trend": self.includes_trend, "n_obs": self.n_obs,
            "critical_values": dict(self.critical_values), "p_value": self.p_value,
            "p_bound": self.p_bound,
            "reject_unit_root_at_5pct": self.reject_unit_root_at_5pct,
        }


def adf_test(series, lag_order, include_trend=False):
    """Augmented Dickey-Fuller test of a unit root against stationarity.

    Fits ``dy_t = a0 + beta y_{t-1} [+ delta t] + sum_i a_i dy_{t-i} + u_t``
    and returns the t-ratio on ``beta``.  The p-value is interpolated from
    tabulated quantiles; below the 1% quantile it is reported as the floor
    0.01, above the 10% quantile as 0.10.
    """
    y = np.asarray(series, dtype=float)
    p = int(lag_order)
    if p < 0:
        raise DomainError("lag_order must be >= 0")
    n = len(y)
    if n <= p + 2:
        raise DomainError(f"series of length {n} too short for lag_order={p}")
    dy = np.diff(y)
    resp = dy[p:]
    nobs = len(resp)
    cols = [np.ones(nobs), y[p:-1]]
    names = ["const", "level_lag1"]
    if include_trend:
        cols.append(np.arange(p + 1, p + 1 + nobs, dtype=float))
        names.append("trend")
    if p:
        cols.append(lag_matrix(dy, p))
        names += [f"diff_lag{i}" for i in range(1, p + 1)]
    X = np.column_stack(cols)
    if nobs <= X.shape[1]:
        raise DomainError(f"series of length {n} too short for lag_order={p}")
    fit = ols_fit(X, resp, names)
    stat = float(fit.t[1])

    cv = df_critical_values(nobs, include_trend)
    if stat <= cv[0]:
        pval, bound = 0.01, "p<=0.01"
    elif stat >= cv[-1]:
        pval, bound = 0.10, "p>=0.10"
    else:
        pval, bound = float(np.interp(stat, cv, _DF_PROBS)), "interpolated"
    labels = ("1%", "2.5%", "5%", "10%")
    return AdfResult(stat, p, bool(include_trend), nobs,
                     {l: float(v) for l, v in zip(labels, cv)}, pval, bound,
                     bool(stat < cv[2]))


def vif(design, names: Optional[Sequence[str]] = None):
    """Variance-inflation factor of each column against all others plus a constant."""
    X = np.asarray(design, dtype=float)
    if X.ndim != 2 or X.shape[1] < 2:
        raise DomainError("vif needs at least two regressors")
    n, k = X.shape
    names = list(names) if names is not None else [f"x{i}" for i in range(k)]
    out = np.empty(k)
    ones = np.ones(n)
    for j in range(k):
        others = np.column_stack([ones, np.delete(X, j, axis=1)])
        y = X[:, j]
        try:
            Q, R, piv = _factor(others, ["const"] + names[:j] + names[j + 1:])
        except CollinearityError as exc:
            raise CollinearityError(f"infinite VIF: {exc}", exc.columns) from exc
        beta = linalg.solve_triangular(R, Q.T @ y)
        resid = y - others[:, piv] @ beta
        ssr = resid @ resid
        sst = (y - y.mean()) @ (y - y.mean())
        if sst == 0 or ssr <= 1e-12 * sst:
            raise CollinearityError(f"infinite VIF for column {names[j]!r}", [names[j]])
        out[j] = sst / ssr
    return out


@dataclass(frozen=True)
class VolumeTable:
    """Rows in analysis order: volume and the two error series."""

    volume: np.ndarray
    x_bs: np.ndarray
    x_baw: np.ndarray

    def __post_init__(self):
        for name in ("volume", "x_bs", "x_baw"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        if not (len(self.volume) == len(self.x_bs) == len(self.x_baw)):
            raise DomainError("table columns differ in length")

    def __len__(self):
        return len(self.volume)


ERROR_COLUMNS = ("x_bs", "x_baw")


def noise_model_design(table: VolumeTable, k, error_columns=("x_bs",)):
    """Response and design for the log-volume AR(k) with error shocks."""
    if k < 1:
        raise DomainError("AR order must be >= 1")
    unknown = set(error_columns) - set(ERROR_COLUMNS)
    if unknown:
        raise DomainError(f"unknown error columns {sorted(unknown)}")
    n = len(table)
    if n < k + 2:
        raise DomainError(f"need at least {k + 2} rows for k={k}, got {n}")
    if np.any(table.volume < 1):
        raise DomainError("volumes must be >= 1 so logs are finite")
    logv = np.log(table.volume)
    cols = [np.ones(n - k), lag_matrix(logv, k)]
    names = ["const"] + [f"lag{i}" for i in range(1, k + 1)]
    for c in error_columns:
        cols.append(getattr(table, c)[k:])
        names.append(c)
    return logv[k:], np.column_stack(cols), names


def fit_noise_model(table: VolumeTable, k=22, error_columns=("x_bs",)):
    """OLS of log V_t on a constant, log V_{t-1..t-k} and raw pricing errors.

    The first ``k`` rows only supply lags, so ``n_observations = len - k``.
    An error column that is identically zero carries no information and
    is left out, so the fit then equals the pure AR(k) fit exactly.
    """
    live = tuple(c for c in error_columns if np.any(getattr(table, c)))
    y, X, names = noise_model_design(table, k, live)
    return ols_fit(X, y, names)
