"""End-to-end analysis: ingest -> filter -> price -> errors -> regressions.

Also home to the synthetic market generator used to test the whole chain
without proprietary data, and to report emission.
"""
from __future__ import annotations

import calendar
import csv
import datetime as dt
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, fields
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from . import __version__
from ._backend import BACKEND, kernels
from .econometrics import (AdfResult, PacfResult, RegressionResult, VolumeTable, adf_test,
                           fit_noise_model, noise_model_design, pacf, select_ar_order, vif)
from .exceptions import DomainError, OptnoiseError, PipelineError
from .market_data import (TENORS, OptionRecord, TreasuryCurveDay, TreasuryCurves,
                          filter_active, load_closes, load_option_records, load_treasury_curves,
                          rate_for_maturity, time_to_expiry, trailing_volatility)
from .pricing import OptionType
from .pricing_errors import (ErrorRecord, SeriesStats, compute_errors_batch,
                             descriptive_stats, drop_outliers)

log = logging.getLogger(__name__)

LAG_MODES = ("pooled", "daily")
MODEL_SETS = {"bs": ("x_bs",), "baw": ("x_baw",), "combined": ("x_bs", "x_baw")}
RNG_ALGORITHM = "numpy.random.Generator(PCG64)"
Z95 = 1.959963984540054


@dataclass
class SynthParams:
    """Knobs for :func:`synthesize_market`."""

    n_days: int = 120
    history_days: int = 40
    spot0: float = 200.0
    drift: float = 0.05
    volatility: float = 0.2
    moneyness: Tuple[float, ...] = (0.85, 0.9, 0.95, 1.0, 1.05, 1.1, 1.15)
    n_expiries: int = 3
    error_mean: float = 0.8      # mids sit this far above BAW on average
    error_sd: float = 0.5
    half_spread: float = 0.02    # fraction of mid
    inactive_fraction: float = 0.1
    outlier_fraction: float = 0.01
    ar: Tuple[float, ...] = (0.3, 0.2)
    log_volume_mean: float = 6.0
    innovation_sd: float = 0.1
    noise_share: Optional[float] = 0.03   # planted |phi . mean(x)|; None uses phi_* as given
    phi_bs: float = 1.0
    phi_baw: float = 0.0


@dataclass
class PipelineConfig:
    options_path: Optional[str] = None
    treasury_path: Optional[str] = None
    closes_path: Optional[str] = None
    vol_window: int = 21
    outlier_threshold: float = 25.0
    lag_mode: str = "pooled"
    ar_order: Union[int, str] = 22
    models: Tuple[str, ...] = ("bs", "baw", "combined")
    seed: int = 0
    dividend_yield: float = 0.0
    pacf_max_lag: int = 30
    option_columns: Dict[str, str] = field(default_factory=dict)  # canonical -> file header
    synth: SynthParams = field(default_factory=SynthParams)

    def __post_init__(self):
        if isinstance(self.synth, dict):
            self.synth = SynthParams(**_tuples(self.synth))
        self.models = tuple(self.models)
        if self.ar_order != "auto":
            if not isinstance(self.ar_order, (int, np.integer)) or isinstance(self.ar_order, bool):
                raise DomainError("ar_order must be an integer or 'auto'")
            self.ar_order = int(self.ar_order)
            if self.ar_order < 1:
                raise DomainError("ar_order must be >= 1")
        if self.vol_window < 2:
            raise DomainError("vol_window must be >= 2")
        if not self.outlier_threshold > 0:
            raise DomainError("outlier_threshold must be > 0")
        if self.lag_mode not in LAG_MODES:
            raise DomainError(f"lag_mode must be one of {LAG_MODES}")
        if not self.models or set(self.models) - set(MODEL_SETS):
            raise DomainError(f"models must be a non-empty subset of {tuple(MODEL_SETS)}")
        self.option_columns = dict(self.option_columns or {})
        if self.pacf_max_lag < 1:
            raise DomainError("pacf_max_lag must be >= 1")

    def to_dict(self):
        return asdict(self)

    @classmethod
    def from_dict(cls, data):
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DomainError(f"unknown config keys: {sorted(unknown)}")
        return cls(**_tuples(data))


def _tuples(d):
    return {k: tuple(v) if isinstance(v, list) else v for k, v in d.items()}


# -- dataset ---------------------------------------------------------------------

@dataclass
class Dataset:
    """Retained rows in analysis order plus the per-stage manifest."""

    errors: List[ErrorRecord]
    manifest: Dict


def _sort_key(e):
    return (e.trade_date, e.expiration_date, e.strike, e.option_type)


def price_records(records: Sequence[OptionRecord], closes, curves: TreasuryCurves,
                  window=21, dividend_yield=0.0):
    """Derive (spot, rate, sigma) per row and price the priceable ones.

    Returns ``(errors, skipped)`` where ``skipped`` maps a reason to a
    count.  Rows are skipped, not failed, when no volatility exists for
    the trade date, the volatility is zero, the contract expires that day,
    or no treasury curve precedes the date.
    """
    vols = {p.date: p.sigma for p in trailing_volatility(closes, window)}
    keep, spots, rates, sigmas = [], [], [], []
    skipped: Dict[str, int] = {}

    def skip(reason):
        skipped[reason] = skipped.get(reason, 0) + 1

    for rec in records:
        sigma = vols.get(rec.trade_date)
        T = time_to_expiry(rec.trade_date, rec.expiration_date)
        curve = curves.curve_for(rec.trade_date)
        if sigma is None:
            skip("no volatility")
        elif not sigma > 0:
            skip("zero volatility")
        elif T == 0:
            skip("zero time to expiry")
        elif curve is None:
            skip("no treasury curve")
        else:
            keep.append(rec)
            spots.append(rec.underlying_close)
            rates.append(rate_for_maturity(curve, T))
            sigmas.append(sigma)
    errors = compute_errors_batch(keep, spots, rates, sigmas, dividend_yield)
    return errors, dict(sorted(skipped.items()))


def _stage(name, counts):
    """Context helper turning library errors into PipelineError(name)."""

    class _Guard:
        def __enter__(self):
            return self

        def __exit__(self, typ, exc, tb):
            if exc is not None and isinstance(exc, (OptnoiseError, OSError)) \
                    and not isinstance(exc, PipelineError):
                raise PipelineError(name, str(exc), counts) from exc
            return False

    return _Guard()


def build_dataset(config: PipelineConfig):
    """Run ingest, activity filter, pricing and outlier stages.

    Every stage records ``in``, ``kept`` and ``dropped`` so that
    ``kept + dropped == in`` and each ``in`` equals the previous ``kept``.
    """
    counts: Dict[str, Dict] = {}
    with _stage("ingest", counts):
        for attr in ("options_path", "treasury_path", "closes_path"):
            if not getattr(config, attr):
                raise PipelineError("ingest", f"{attr} not set", counts)
        ingest = load_option_records(config.options_path, schema=config.option_columns or None)
        curves = load_treasury_curves(config.treasury_path)
        closes = load_closes(config.closes_path)
        counts["ingest"] = {"in": ingest.rows_in, "kept": len(ingest.records),
                            "dropped": len(ingest.diagnostics),
                            "dropped_by_reason": ingest.counts_by_kind()}
        log.info("ingest: %d rows, %d records", ingest.rows_in, len(ingest.records))
        if not ingest.records:
            raise PipelineError("ingest", "no usable option rows", counts)

    with _stage("activity_filter", counts):
        active = filter_active(ingest.records)
        counts["activity_filter"] = {"in": len(ingest.records), "kept": len(active),
                                     "dropped": len(ingest.records) - len(active)}
        log.info("activity filter: %d kept", len(active))
        if not active:
            raise PipelineError("activity_filter", "no active contracts", counts)

    with _stage("pricing", counts):
        errors, skipped = price_records(active, closes, curves, config.vol_window,
                                        config.dividend_yield)
        counts["pricing"] = {"in": len(active), "kept": len(errors),
                             "dropped": len(active) - len(errors), "dropped_by_reason": skipped}
        log.info("pricing: %d priced", len(errors))
        if not errors:
            raise PipelineError("pricing", "no priceable contracts", counts)

    with _stage("outliers", counts):
        kept, dropped = drop_outliers(errors, config.outlier_threshold)
        counts["outliers"] = {"in": len(errors), "kept": len(kept), "dropped": dropped}
        log.info("outliers: %d dropped", dropped)
        if not kept:
            raise PipelineError("outliers", "every row is an outlier", counts)

    kept.sort(key=_sort_key)
    manifest = {"stages": counts, "stage_order": list(counts)}
    return Dataset(kept, manifest)


def analysis_table(errors: Sequence[ErrorRecord], lag_mode="pooled"):
    """Volume and error columns in lag order, with a date label per row.

    ``pooled`` keeps one row per contract-day in (date, contract key)
    order; ``daily`` averages volume and both errors per trade date.
    """
    if lag_mode == "pooled":
        vol = np.fromiter((e.volume for e in errors), float, len(errors))
        xb = np.fromiter((e.x_bs for e in errors), float, len(errors))
        xw = np.fromiter((e.x_baw for e in errors), float, len(errors))
        return VolumeTable(vol, xb, xw), [e.trade_date for e in errors]
    if lag_mode != "daily":
        raise DomainError(f"lag_mode must be one of {LAG_MODES}")
    groups: Dict[dt.date, List[ErrorRecord]] = {}
    for e in errors:
        groups.setdefault(e.trade_date, []).append(e)
    dates = sorted(groups)
    mean = lambda attr: np.array([np.mean([getattr(e, attr) for e in groups[d]])  # noqa: E731
                                  for d in dates])
    return VolumeTable(mean("volume"), mean("x_bs"), mean("x_baw")), dates


# -- models and noise share ------------------------------------------------------

def run_models(table: VolumeTable, k, models=("bs", "baw", "combined")):
    """Fit the selected specifications with an identical lag structure."""
    return {m: fit_noise_model(table, k, MODEL_SETS[m]) for m in models}


@dataclass(frozen=True)
class NoiseShare:
    point: float
    low: float
    high: float
    raw_estimate: float
    raw_se: float
    raw_negative: bool
    formula: str
    alternate_marginal_sum: Optional[float] = None

    def to_dict(self):
        return asdict(self)


NOISE_SHARE_FORMULA = ("|phi_bs*mean(x_bs) + phi_baw*mean(x_baw)| from the combined model; "
                       "95% delta-method interval on the signed sum with means fixed, "
                       "mapped through |.| (lower bound 0 when the interval spans 0)")


def estimate_noise_share(combined: RegressionResult, error_stats: Dict[str, SeriesStats],
                         marginal: Optional[Dict[str, RegressionResult]] = None):
    """Share of volume attributed to mean pricing errors, with a 95% interval.

    Parameters
    ----------
    combined : RegressionResult
        Fit containing both ``x_bs`` and ``x_baw``.
    error_stats : dict
        ``{"x_bs": SeriesStats, "x_baw": SeriesStats}``.
    marginal : dict, optional
        Single-error fits keyed ``"bs"``/``"baw"``; when given, the
        alternate reading ``|phi_bs m_bs| + |phi_baw m_baw|`` is reported.
    """
    if combined.cov is None or not np.all(np.isfinite(combined.cov)):
        raise DomainError("combined model has no usable coefficient covariance")
    missing = [c for c in ("x_bs", "x_baw") if c not in combined.names]
    if missing:
        raise DomainError(f"combined model lacks {missing}")
    cols = ["x_bs", "x_baw"]
    m = np.array([error_stats[c].mean for c in cols])
    phi = np.array([combined.coefficient(c) for c in cols])
    est = float(m @ phi)
    se = float(math.sqrt(max(m @ combined.covariance(cols) @ m, 0.0)))
    lo, hi = est - Z95 * se, est + Z95 * se
    if lo <= 0 <= hi:
        low, high = 0.0, max(-lo, hi)
    else:
        low, high = sorted((abs(lo), abs(hi)))
    alt = None
    if marginal and "bs" in marginal and "baw" in marginal:
        alt = abs(marginal["bs"].coefficient("x_bs") * m[0]) + \
            abs(marginal["baw"].coefficient("x_baw") * m[1])
    return NoiseShare(abs(est), low, high, est, se, est < 0, NOISE_SHARE_FORMULA,
                      None if alt is None else float(alt))


# -- full run ----------------------------------------------------------------------

@dataclass
class NoiseReport:
    config: Dict
    manifest: Dict
    models: Dict[str, RegressionResult]
    error_stats: Dict[str, SeriesStats]
    vifs: Dict[str, float]
    adf: AdfResult
    pacf: PacfResult
    ar_order: int
    noise_share: Optional[NoiseShare]
    volume_series: List[Tuple[str, float]]

    def to_dict(self):
        return {
            "config": self.config,
            "manifest": self.manifest,
            "models": {k: v.to_dict() for k, v in self.models.items()},
            "error_stats": {k: v.as_dict() for k, v in self.error_stats.items()},
            "vif": self.vifs,
            "adf": self.adf.to_dict(),
            "pacf": {"values": self.pacf.values.tolist(),
                     "significance_bound": self.pacf.significance_bound, "n": self.pacf.n},
            "ar_order": self.ar_order,
            "noise_share": self.noise_share.to_dict() if self.noise_share else None,
        }


def analyze(config: PipelineConfig):
    """Build the dataset, run diagnostics and models, estimate the share."""
    data = build_dataset(config)
    counts = data.manifest["stages"]
    table, labels = analysis_table(data.errors, config.lag_mode)
    n = len(table)

    with _stage("diagnostics", counts):
        max_lag = min(config.pacf_max_lag, n - 2)
        if max_lag < 1:
            raise PipelineError("diagnostics", f"only {n} rows in the analysis table", counts)
        pac = pacf(table.volume, max_lag)
        if config.ar_order == "auto":
            selected = select_ar_order(pac)
            k = max(selected, 1)
        else:
            selected, k = None, config.ar_order
        adf = adf_test(table.volume, k)

    with _stage("regression", counts):
        if n < k + 2:
            raise PipelineError("regression", f"{n} rows cannot support {k} lags", counts)
        models = run_models(table, k, config.models)
        vifs = {}
        if "combined" in models:
            _, X, names = noise_model_design(table, k, MODEL_SETS["combined"])
            vifs = dict(zip(names[1:], vif(X[:, 1:], names[1:]).tolist()))

    stats = {c: descriptive_stats(getattr(table, c)) for c in ("x_bs", "x_baw")}
    with _stage("noise_share", counts):
        share = None
        if "combined" in models:
            share = estimate_noise_share(models["combined"], stats, models)

    manifest = dict(data.manifest)
    manifest.update({
        "analysis_rows": n,
        "regression_observations": n - k,
        "lag_mode": config.lag_mode,
        "ar_order_requested": config.ar_order,
        "ar_order_selected": selected,
        "ar_order_used": k,
        "pacf_max_lag_used": max_lag,
        "diagnostic_series": "volume (levels)",
        "error_stats_rows": "analysis table",
        "dataset_error_stats": {c: descriptive_stats([getattr(e, c) for e in data.errors]).as_dict()
                                for c in ("x_bs", "x_baw")},
        "noise_share_formula": share.formula if share else None,
        "noise_share_alternate": "|phi_bs(1)*mean(x_bs)| + |phi_baw(2)*mean(x_baw)| "
                                 "from the single-error models",
        "rng": RNG_ALGORITHM,
        "backend": BACKEND,
        "version": __version__,
    })
    series = [(str(d), float(v)) for d, v in zip(labels, table.volume)]
    return NoiseReport(config.to_dict(), manifest, models, stats, vifs, adf, pac, k,
                       share, series)


# -- report emission ---------------------------------------------------------------

_MODEL_LABELS = {"bs": "(1)", "baw": "(2)", "combined": "(3)"}
_ROW_LABELS = {"x_bs": "Black-Scholes Errors", "x_baw": "BAW Errors", "const": "Constant"}


def _stars(p):
    return "***" if p < 0.01 else "**" if p < 0.05 else "*" if p < 0.1 else ""


def _g(x, nd=3):
    return f"{x:.{nd}f}"


def render_table(models: Dict[str, RegressionResult]):
    """Three-column regression table: coefficient with stars, se below."""
    keys = [m for m in ("bs", "baw", "combined") if m in models]
    k = max(sum(n.startswith("lag") for n in models[m].names) for m in keys)
    rows = ["x_bs", "x_baw"] + [f"lag{i}" for i in range(1, k + 1)] + ["const"]
    label_w, col_w = 28, 18
    rule = "-" * (label_w + col_w * len(keys))

    def line(label, cells):
        return label.ljust(label_w) + "".join(c.rjust(col_w) for c in cells)

    out = ["=" * len(rule),
           "Dependent variable: log(Volume)".rjust(len(rule)),
           line("", [_MODEL_LABELS[m] + "   " for m in keys]), rule]
    for r in rows:
        label = _ROW_LABELS.get(r, f"log(Volume) t-{r[3:]}" if r.startswith("lag") else r)
        coef, se = [], []
        for m in keys:
            res = models[m]
            if r in res.names:
                i = res.index(r)
                coef.append(_g(res.coef[i]) + _stars(res.p_values[i]).ljust(3))
                se.append(f"({_g(res.se[i])})" + "   ")
            else:
                coef.append("")
                se.append("")
        out.append(line(label, coef))
        out.append(line("", se))
    out.append(rule)
    out.append(line("Observations", [f"{models[m].n_observations:,}   " for m in keys]))
    out.append(line("R2", [_g(models[m].r_squared) + "   " for m in keys]))
    out.append(line("Adjusted R2", [_g(models[m].adjusted_r_squared) + "   " for m in keys]))
    out.append(line("Residual Std. Error",
                    [f"{_g(models[m].residual_std_error)} (df={models[m].df_resid})"
                     for m in keys]))
    out.append(line("F Statistic",
                    [f"{models[m].f_statistic:.1f}{_stars(models[m].f_pvalue)}" for m in keys]))
    out.append(line("F df", [f"({models[m].f_df[0]}; {models[m].f_df[1]})" for m in keys]))
    out.append("=" * len(rule))
    out.append("Note: *p<0.1; **p<0.05; ***p<0.01")
    return "\n".join(out) + "\n"


def render_report_text(report: NoiseReport):
    parts = [render_table(report.models)]
    if report.vifs:
        parts.append("Variance-inflation factors (model (3))")
        parts += [f"  {k:<12}{v:12.4f}" for k, v in report.vifs.items()]
    a = report.adf
    parts.append(f"\nAugmented Dickey-Fuller (lag order {a.lag_order}): statistic {a.statistic:.4f}, "
                 f"p {'<=' if a.p_bound == 'p<=0.01' else '>=' if a.p_bound == 'p>=0.10' else '='}"
                 f" {a.p_value:.4f}")
    if report.noise_share:
        s = report.noise_share
        parts.append(f"Noise share: {100 * s.point:.2f}% "
                     f"(95% interval {100 * s.low:.2f}% to {100 * s.high:.2f}%)"
                     + (" [signed estimate negative]" if s.raw_negative else ""))
        if s.alternate_marginal_sum is not None:
            parts.append(f"Alternate marginal-model sum: {100 * s.alternate_marginal_sum:.2f}%")
    return "\n".join(parts) + "\n"


REPORT_FILES = {"table": "report_table.txt", "json": "report.json",
                "volume": "volume_series.csv", "pacf": "pacf.csv"}


def _open_sink(path):
    try:
        return open(path, "w", encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(exc.errno, f"cannot write report sink {path}: {exc.strerror}",
                      str(path)) from exc


def emit_report(report: NoiseReport, out_dir):
    """Write the human table, JSON report and two plot-data CSVs.

    Returns a mapping of sink name to path.  Output bytes depend only on
    the report contents.
    """
    out_dir = os.fspath(out_dir)
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(exc.errno, f"cannot create output directory {out_dir}: {exc.strerror}",
                      out_dir) from exc
    paths = {k: os.path.join(out_dir, v) for k, v in REPORT_FILES.items()}
    with _open_sink(paths["table"]) as fh:
        fh.write(render_report_text(report))
    with _open_sink(paths["json"]) as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2, allow_nan=True)
        fh.write("\n")
    with _open_sink(paths["volume"]) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "trade_date", "volume"])
        for i, (d, v) in enumerate(report.volume_series):
            w.writerow([i, d, repr(v)])
    with _open_sink(paths["pacf"]) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lag", "pacf", "lower_bound", "upper_bound"])
        b = report.pacf.significance_bound
        for lag, v in zip(report.pacf.lags, report.pacf.values):
            w.writerow([int(lag), repr(float(v)), repr(-b), repr(b)])
    return paths


# -- synthetic market --------------------------------------------------------------

def _r2(x):
    return float(f"{x:.2f}")


def _third_friday(year, month):
    first = dt.date(year, month, 1)
    offset = (calendar.FRIDAY - first.weekday()) % 7
    return first + dt.timedelta(days=offset + 14)


def _expiries(day, count):
    out, y, m = [], day.year, day.month
    while len(out) < count:
        e = _third_friday(y, m)
        if e >= day + dt.timedelta(days=7):
            out.append(e)
        y, m = (y + 1, 1) if m == 12 else (y, m + 1)
    return out


def _weekdays(start, n):
    out, d = [], start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return out


_BASE_CURVE = (2.50, 2.70, 2.90, 3.10, 3.30, 3.50, 3.80, 4.00, 4.20, 4.40, 4.50)


@dataclass
class SynthResult:
    paths: Dict[str, str]
    truth: Dict


def synthesize_market(config: PipelineConfig, out_dir):
    """Write options.csv, treasury.csv and closes.csv for a seeded market.

    The underlying follows a discretised geometric Brownian motion.  Mids
    are BAW prices plus contract-level noise; quotes, closes and yields are
    rounded to cents/basis points before any pricing so that reading the
    files back reproduces the errors exactly.  Volumes along the retained
    rows (in analysis order) follow

        log V_t = c + sum_i a_i log V_{t-i} + phi_bs x_bs,t + phi_baw x_baw,t + u_t

    with phi scaled so that ``|phi . mean(x)|`` equals the planted share.
    """
    sp = config.synth
    rng = np.random.default_rng(config.seed)
    days = _weekdays(dt.date(2015, 1, 2), sp.history_days + sp.n_days)

    # underlying
    dt_y = 1.0 / 252
    shocks = rng.standard_normal(len(days))
    logret = (sp.drift - 0.5 * sp.volatility ** 2) * dt_y + sp.volatility * math.sqrt(dt_y) * shocks
    closes = [(d, _r2(sp.spot0 * math.exp(c))) for d, c in zip(days, np.cumsum(logret))]

    # treasury curves: parallel random walk, one missing day in 17
    level = np.cumsum(rng.normal(0, 0.01, len(days)))
    curves = []
    for i, d in enumerate(days):
        if i % 17 == 16:
            continue
        curves.append(TreasuryCurveDay(d, tuple(max(0.0, _r2(b + level[i])) for b in _BASE_CURVE)))
    curve_set = TreasuryCurves(curves)

    # contracts
    trade_days = list(zip(days, closes))[sp.history_days:]
    vols = {p.date: p.sigma for p in trailing_volatility(closes, config.vol_window)}
    rows = []  # (date, expiry, type, strike, spot)
    for d, (_, spot) in trade_days:
        strikes = sorted({float(round(spot * m)) for m in sp.moneyness})
        for e in _expiries(d, sp.n_expiries):
            for K in strikes:
                for t in (OptionType.CALL, OptionType.PUT):
                    rows.append((d, e, t, K, spot))
    n = len(rows)
    is_call = np.array([r[2] is OptionType.CALL for r in rows], dtype=np.int8)
    S = np.array([r[4] for r in rows])
    K = np.array([r[3] for r in rows])
    T = np.array([time_to_expiry(r[0], r[1]) for r in rows])
    sig = np.array([vols[r[0]] for r in rows])
    rate = np.array([rate_for_maturity(curve_set.curve_for(r[0]), t) for r, t in zip(rows, T)])
    baw = np.maximum(kernels.baw_price_batch(is_call, S, K, T, rate, rate - config.dividend_yield,
                                             sig, 1e-6, 100)[0], 0.0)

    # quotes
    noise = rng.normal(sp.error_mean, sp.error_sd, n)
    outlier = rng.random(n) < sp.outlier_fraction
    noise[outlier] += 30.0
    target = np.maximum(baw + noise, 0.01)
    half = np.maximum(0.01, sp.half_spread * target)
    bid = np.array([max(0.0, _r2(m - h)) for m, h in zip(target, half)])
    ask = np.array([_r2(max(m + h, b + 0.01)) for m, h, b in zip(target, half, bid)])

    inactive = rng.random(n) < sp.inactive_fraction
    zero_volume = rng.random(n) < 0.5
    oi = rng.integers(1, 5000, n)
    oi[inactive & ~zero_volume] = 0
    recs = [OptionRecord(r[0], r[1], r[2], r[3], float(bid[i]), float(ask[i]), 1, int(oi[i]), r[4])
            for i, r in enumerate(rows)]

    # errors exactly as the pipeline will see them
    active_idx = [i for i in range(n) if not inactive[i]]
    errs, _ = price_records([recs[i] for i in active_idx], closes, curve_set,
                            config.vol_window, config.dividend_yield)
    keep = [(i, e) for i, e in zip(active_idx, errs)
            if abs(e.x_bs) <= config.outlier_threshold and abs(e.x_baw) <= config.outlier_threshold]
    keep.sort(key=lambda ie: _sort_key(ie[1]))
    xb = np.array([e.x_bs for _, e in keep])
    xw = np.array([e.x_baw for _, e in keep])
    means = np.array([xb.mean(), xw.mean()])
    phi = np.array([sp.phi_bs, sp.phi_baw], dtype=float)
    if sp.noise_share is not None:
        denom = abs(phi @ means)
        if denom == 0:
            raise DomainError("planted direction is orthogonal to the mean errors")
        phi = phi * sp.noise_share / denom
    a = np.asarray(sp.ar, dtype=float)
    c = sp.log_volume_mean * (1 - a.sum()) - phi @ means

    # volume chain over retained rows
    u = rng.normal(0, sp.innovation_sd, len(keep))
    p = len(a)
    logv = np.full(len(keep) + p, sp.log_volume_mean)
    for t in range(len(keep)):
        mu = c + a @ logv[t + p - 1::-1][:p] if p else c
        val = mu + phi[0] * xb[t] + phi[1] * xw[t] + u[t]
        logv[t + p] = math.log(max(1, round(math.exp(val))))
    volume = np.zeros(n, dtype=np.int64)
    for (i, _), lv in zip(keep, logv[p:]):
        volume[i] = int(round(math.exp(lv)))
    other = rng.integers(1, 2000, n)
    for i in range(n):
        if volume[i] == 0:
            volume[i] = 0 if (inactive[i] and zero_volume[i]) else other[i]

    os.makedirs(out_dir, exist_ok=True)
    paths = {k: os.path.join(out_dir, f"{k}.csv") for k in ("options", "treasury", "closes")}
    with open(paths["options"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trade_date", "expiration", "type", "strike", "bid", "ask", "volume",
                    "open_interest", "underlying_close"])
        for i, r in enumerate(recs):
            w.writerow([r.trade_date.isoformat(), r.expiration_date.isoformat(),
                        r.option_type.value, f"{r.strike:.2f}", f"{r.bid:.2f}", f"{r.ask:.2f}",
                        int(volume[i]), r.open_interest, f"{r.underlying_close:.2f}"])
    with open(paths["treasury"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date"] + list(TENORS))
        for cv in curves:
            w.writerow([cv.date.isoformat()] + [f"{y:.2f}" for y in cv.yields])
    with open(paths["closes"], "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", "adjusted_close"])
        for d, cl in closes:
            w.writerow([d.isoformat(), f"{cl:.2f}"])

    truth = {"phi_bs": float(phi[0]), "phi_baw": float(phi[1]), "ar": a.tolist(),
             "constant": float(c), "mean_x_bs": float(means[0]), "mean_x_baw": float(means[1]),
             "noise_share": float(abs(phi @ means)), "rows": n, "retained_rows": len(keep),
             "seed": config.seed, "rng": RNG_ALGORITHM}
    paths["truth"] = os.path.join(out_dir, "truth.json")
    with open(paths["truth"], "w", encoding="utf-8") as fh:
        json.dump(truth, fh, sort_keys=True, indent=2)
        fh.write("\n")
    return SynthResult(paths, truth)
