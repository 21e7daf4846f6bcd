"""Command-line entry point: ``optnoise {price,analyze,synth,pacf,adf}``.

Pipeline flags mirror :class:`optnoise.pipeline.PipelineConfig`.  A JSON
file given with ``--config`` supplies the same keys; flags on the command
line win.  ``OPTNOISE_OUTPUT_DIR`` sets the default output directory.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import fields

import numpy as np

from .econometrics import adf_test, pacf, select_ar_order
from .exceptions import OptnoiseError
from .pipeline import (MODEL_SETS, PipelineConfig, SynthParams, analysis_table, analyze,
                       build_dataset, emit_report, synthesize_market)
from .pricing import (ExerciseStyle, MarketParams, OptionContractSpec, OptionType,
                      baw_intermediates, baw_price, bs_price, crr_binomial_price)

OUTPUT_ENV = "OPTNOISE_OUTPUT_DIR"
_DEFAULTS = PipelineConfig()
_SYNTH_DEFAULTS = SynthParams()


def _ar_order(text):
    if text == "auto":
        return text
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer or 'auto', got {text!r}")
    if v < 1:
        raise argparse.ArgumentTypeError("ar order must be >= 1")
    return v


def _models(text):
    items = tuple(s.strip() for s in text.split(",") if s.strip())
    bad = [m for m in items if m not in MODEL_SETS]
    if bad or not items:
        raise argparse.ArgumentTypeError(f"models must be a comma list from {sorted(MODEL_SETS)}")
    return items


def _floats(text):
    try:
        return tuple(float(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _mapping(text):
    out = {}
    for item in filter(None, (s.strip() for s in text.split(","))):
        key, sep, value = item.partition("=")
        if not sep or not key or not value:
            raise argparse.ArgumentTypeError(f"expected canonical=header pairs, got {item!r}")
        out[key.strip()] = value.strip()
    return out


def _add(p, flag, dest, default, help, **kw):
    """Flag whose default is shown in help but left unset in the namespace."""
    p.add_argument(flag, dest=dest, default=argparse.SUPPRESS,
                   help=f"{help} (default: {default})", **kw)


def _pipeline_flags(p, inputs=True):
    p.add_argument("--config", help="JSON file with PipelineConfig keys (default: none)")
    if inputs:
        _add(p, "--options", "options_path", None, "option chain CSV")
        _add(p, "--treasury", "treasury_path", None, "treasury curve CSV")
        _add(p, "--closes", "closes_path", None, "underlying closes CSV")
        _add(p, "--option-columns", "option_columns", "identity",
             "header renames as canonical=header pairs, e.g. open_interest=open.interest",
             type=_mapping)
    _add(p, "--vol-window", "vol_window", _DEFAULTS.vol_window, "trailing volatility window",
         type=int)
    _add(p, "--outlier-threshold", "outlier_threshold", _DEFAULTS.outlier_threshold,
         "drop rows with |error| above this", type=float)
    _add(p, "--lag-mode", "lag_mode", _DEFAULTS.lag_mode, "row order for lags",
         choices=("pooled", "daily"))
    _add(p, "--ar-order", "ar_order", _DEFAULTS.ar_order, "lags k, or 'auto' for PACF selection",
         type=_ar_order)
    _add(p, "--models", "models", ",".join(_DEFAULTS.models), "comma list of bs,baw,combined",
         type=_models)
    _add(p, "--seed", "seed", _DEFAULTS.seed, "random seed for synthesis", type=int)
    _add(p, "--div-yield", "dividend_yield", _DEFAULTS.dividend_yield,
         "continuous dividend yield", type=float)
    _add(p, "--pacf-max-lag", "pacf_max_lag", _DEFAULTS.pacf_max_lag, "largest PACF lag",
         type=int)


def _out_dir_flag(p, name):
    default = os.environ.get(OUTPUT_ENV) or name
    p.add_argument("--out-dir", default=default,
                   help=f"output directory (default: ${OUTPUT_ENV} or {name!r}; now {default!r})")


def build_parser():
    parser = argparse.ArgumentParser(prog="optnoise", description=__doc__.splitlines()[0])
    parser.add_argument("--log-level", default="INFO", help="logging level (default: INFO)")
    sub = parser.add_subparsers(dest="command", required=True)

    fmt = argparse.ArgumentDefaultsHelpFormatter
    pr = sub.add_parser("price", help="price one contract", formatter_class=fmt)
    pr.add_argument("--type", required=True, choices=("call", "put"), help="option type")
    pr.add_argument("--style", default="american", choices=("american", "european"),
                    help="exercise style (bs always prices the European twin)")
    pr.add_argument("--spot", type=float, required=True, help="underlying price")
    pr.add_argument("--strike", type=float, required=True, help="strike price")
    pr.add_argument("--rate", type=float, required=True, help="risk-free rate, decimal")
    pr.add_argument("--div-yield", type=float, default=0.0, help="dividend yield, decimal")
    pr.add_argument("--sigma", type=float, required=True, help="volatility, decimal")
    pr.add_argument("--tte", type=float, required=True, help="time to expiry in years")
    pr.add_argument("--model", default="baw", choices=("bs", "baw", "crr"), help="pricer")
    pr.add_argument("--steps", type=int, default=10_000, help="binomial steps for crr")

    an = sub.add_parser("analyze", help="run the full pipeline and write reports")
    _pipeline_flags(an)
    _out_dir_flag(an, "optnoise_report")

    sy = sub.add_parser("synth", help="write a seeded synthetic market")
    _pipeline_flags(sy, inputs=False)
    _out_dir_flag(sy, "optnoise_synth")
    _add(sy, "--days", "n_days", _SYNTH_DEFAULTS.n_days, "trading days with option quotes",
         type=int)
    _add(sy, "--noise-share", "noise_share", _SYNTH_DEFAULTS.noise_share,
         "planted |phi . mean(x)|; negative disables scaling", type=float)
    _add(sy, "--phi-bs", "phi_bs", _SYNTH_DEFAULTS.phi_bs, "planted BS error coefficient (or "
         "direction when --noise-share is set)", type=float)
    _add(sy, "--phi-baw", "phi_baw", _SYNTH_DEFAULTS.phi_baw, "planted BAW error coefficient",
         type=float)
    _add(sy, "--ar", "ar", ",".join(map(str, _SYNTH_DEFAULTS.ar)),
         "planted log-volume AR coefficients", type=_floats)

    for name, helptext in (("pacf", "partial autocorrelations of volume"),
                           ("adf", "augmented Dickey-Fuller test on volume")):
        p = sub.add_parser(name, help=helptext)
        _pipeline_flags(p)
        p.add_argument("--series", help="CSV with a numeric column to test instead of the "
                                        "pipeline volume (default: none)")
        p.add_argument("--column", default=None,
                       help="column of --series (default: last column)")
        p.add_argument("--transform", default="level", choices=("level", "log"),
                       help="apply to the series first (default: level)")
        if name == "pacf":
            p.add_argument("--max-lag", type=int, default=None,
                           help="largest lag (default: --pacf-max-lag)")
        else:
            p.add_argument("--lag-order", type=int, default=None,
                           help="augmentation lags (default: --ar-order, 22)")
            p.add_argument("--trend", action="store_true", help="include a linear trend")
    return parser


_SYNTH_KEYS = {f.name for f in fields(SynthParams)}


def resolve_config(args):
    """PipelineConfig from defaults, then the config file, then flags."""
    data = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            data = json.load(fh)
    synth = dict(data.pop("synth", {}) or {})
    known = {f.name for f in fields(PipelineConfig)}
    for key, value in vars(args).items():
        if key in known:
            data[key] = value
        elif key in _SYNTH_KEYS:
            synth[key] = None if key == "noise_share" and value < 0 else value
    data["synth"] = synth
    return PipelineConfig.from_dict(data)


def _echo(label, payload):
    print(f"resolved {label}: {json.dumps(payload, sort_keys=True)}")


def _load_series(path, column, transform):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    idx = header.index(column) if column else len(header) - 1
    x = np.array([float(r[idx]) for r in body if r])
    return np.log(x) if transform == "log" else x


def _series_from_args(args, config):
    if args.series:
        return _load_series(args.series, args.column, args.transform)
    data = build_dataset(config)
    table, _ = analysis_table(data.errors, config.lag_mode)
    return np.log(table.volume) if args.transform == "log" else table.volume


def cmd_price(args):
    _echo("config", {k: v for k, v in vars(args).items() if k not in ("func",)})
    style = ExerciseStyle.EUROPEAN if args.style == "european" else ExerciseStyle.AMERICAN
    spec = OptionContractSpec(OptionType.parse(args.type), style, args.strike, args.tte)
    params = MarketParams(args.spot, args.rate, args.sigma, args.div_yield)
    if args.model == "bs":
        print(f"price: {bs_price(spec.european_twin(), params):.6f}")
    elif args.model == "crr":
        print(f"price: {crr_binomial_price(spec, params, args.steps):.6f}")
    else:
        if style is ExerciseStyle.EUROPEAN:
            print(f"price: {bs_price(spec, params):.6f}")
            return 0
        print(f"price: {baw_price(spec, params):.6f}")
        if spec.time_to_expiry > 0:
            inter = baw_intermediates(spec, params)
            print(f"critical price: {inter.critical_price:.6f}")
            print(f"iterations: {inter.iterations_used}")
    return 0


def cmd_analyze(args):
    config = resolve_config(args)
    _echo("config", dict(config.to_dict(), out_dir=args.out_dir))
    report = analyze(config)
    paths = emit_report(report, args.out_dir)
    print(f"ar order used: {report.ar_order}")
    if report.noise_share:
        s = report.noise_share
        print(f"noise share: {s.point:.6f} [{s.low:.6f}, {s.high:.6f}]")
    for name, path in paths.items():
        print(f"wrote {name}: {path}")
    return 0


def cmd_synth(args):
    config = resolve_config(args)
    _echo("config", dict(config.to_dict(), out_dir=args.out_dir))
    res = synthesize_market(config, args.out_dir)
    for name, path in res.paths.items():
        print(f"wrote {name}: {path}")
    print(f"planted noise share: {res.truth['noise_share']:.6f}")
    return 0


def cmd_pacf(args):
    config = resolve_config(args)
    max_lag = args.max_lag or config.pacf_max_lag
    _echo("config", dict(config.to_dict(), series=args.series, column=args.column,
                         transform=args.transform, max_lag=max_lag))
    res = pacf(_series_from_args(args, config), max_lag)
    print(f"n: {res.n}  bound: {res.significance_bound:.6f}")
    for lag, v in zip(res.lags, res.values):
        flag = " *" if abs(v) > res.significance_bound else ""
        print(f"{lag:4d} {v: .6f}{flag}")
    print(f"selected order: {select_ar_order(res)}")
    return 0


def cmd_adf(args):
    config = resolve_config(args)
    lag = args.lag_order if args.lag_order is not None else (
        config.ar_order if config.ar_order != "auto" else 22)
    _echo("config", dict(config.to_dict(), series=args.series, column=args.column,
                         transform=args.transform, lag_order=lag, trend=args.trend))
    res = adf_test(_series_from_args(args, config), lag, include_trend=args.trend)
    print(f"statistic: {res.statistic:.4f}")
    print(f"lag order: {res.lag_order}  observations: {res.n_obs}")
    print("critical values: " + ", ".join(f"{k} {v:.3f}" for k, v in res.critical_values.items()))
    print(f"p-value: {res.p_value:.4f} ({res.p_bound})")
    print(f"reject unit root at 5%: {'yes' if res.reject_unit_root_at_5pct else 'no'}")
    return 0


COMMANDS = {"price": cmd_price, "analyze": cmd_analyze, "synth": cmd_synth,
            "pacf": cmd_pacf, "adf": cmd_adf}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.INFO),
                        format="optnoise: %(message)s", stream=sys.stderr)
    try:
        return COMMANDS[args.command](args)
    except (OptnoiseError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
