"""Command line entry point: ``bwcast run | automal | predict``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys

import numpy as np

from .automal import AutomalConfig, automal
from .exceptions import ConfigError, DataError, ModelFileError, StageError
from .modelio import load_model
from .runner import parse_config, run_pipeline
from .timeseries import assemble_parallel, load_csv

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_RUNTIME = 0, 2, 3, 4

log = logging.getLogger("bwcast")


def _overrides(pairs):
    out = {}
    for item in pairs or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"override {item!r} is not key=value")
        out[key.strip()] = value.strip()
    return out


def cmd_run(args) -> int:
    overrides = _overrides(args.set)
    if args.inputs:
        overrides["inputs"] = list(args.inputs)
    if args.output:
        overrides["output"] = args.output
    cfg = parse_config(args.config, overrides)
    result = run_pipeline(cfg)
    m = result.report.metrics()
    for split, vals in m.items():
        base = result.report.splits[split]
        print(f"{split:<10} MAE={vals['mae']:.6g} RMSE={vals['rmse']:.6g} "
              f"(persistence MAE={base.baseline_mae:.6g})")
    for name, path in result.files.items():
        print(f"wrote {name}: {path}")
    return EXIT_OK


def cmd_automal(args) -> int:
    datasets = [load_csv(p, not args.no_header).interpolated() for p in args.inputs]
    parallel = assemble_parallel(datasets)
    cfg = AutomalConfig(alpha=args.alpha, peak_sensitivity=args.peak_sensitivity,
                        default_lags=args.default_lags, max_acf_lag=args.max_acf_lag)
    rec = automal(parallel.targets, cfg)
    out = {
        "lags": rec.lags,
        "used_default": rec.used_default,
        "note": rec.note,
        "per_sequence": [
            {"name": e.name, "stationary": e.stationary, "first_peak": e.first_peak, "lags": e.lags,
             "p_value": None if e.adf is None else e.adf.p_value, "reason": e.reason}
            for e in rec.per_sequence
        ],
    }
    print(rec.note)
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_predict(args) -> int:
    model, normalizer, config = load_model(args.model)
    spec = model.spec
    m = int(config.get("m", spec.input_dim))
    datasets = [load_csv(p, not args.no_header).select(m).interpolated() for p in args.inputs]
    parallel = assemble_parallel(datasets)
    if parallel.m * parallel.z != spec.input_dim:
        raise DataError(f"model expects {spec.input_dim} input columns, got {parallel.m * parallel.z}")
    panel = parallel.to_panel()
    if len(panel) < spec.nlags:
        raise DataError(f"need at least nlags={spec.nlags} rows, got {len(panel)}")
    scaled = normalizer.transform(panel) if normalizer is not None else panel
    starts = np.arange(len(panel) - spec.nlags + 1)
    windows = scaled[starts[:, None] + np.arange(spec.nlags)[None, :]]
    pred = model.predict(windows)
    cols = parallel.target_columns
    if normalizer is not None:
        pred = normalizer.inverse_transform(pred, columns=cols)

    fh = open(args.out, "w", newline="", encoding="utf-8") if args.out else sys.stdout
    try:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["time_index", "member", "step", "prediction"])
        for r, s in enumerate(starts):
            for step in range(spec.msteps):
                for j in range(parallel.z):
                    w.writerow([int(s + spec.nlags + step), j, step + 1, repr(float(pred[r, step, j]))])
    finally:
        if args.out:
            fh.close()
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bwcast", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="full pipeline: lag selection, search, training, walk-forward evaluation")
    p.add_argument("config", nargs="?", help="JSON config file with flat keys")
    p.add_argument("-i", "--inputs", nargs="+", help="input CSV file(s); overrides the config")
    p.add_argument("-o", "--output", help="output directory (default: $BWCAST_OUTPUT_DIR or ./bwcast-output)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("automal", help="recommend a lag count only")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--peak-sensitivity", type=int, default=1)
    p.add_argument("--default-lags", type=int, default=5)
    p.add_argument("--max-acf-lag", type=int, default=None)
    p.set_defaults(func=cmd_automal)

    p = sub.add_parser("predict", help="one-window-ahead predictions from a saved model")
    p.add_argument("model")
    p.add_argument("inputs", nargs="+")
    p.add_argument("--no-header", action="store_true")
    p.add_argument("-o", "--out", help="write CSV here instead of stdout")
    p.set_defaults(func=cmd_predict)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        cause = exc.cause
        if isinstance(cause, ConfigError):
            return EXIT_CONFIG
        if isinstance(cause, (DataError, ValueError)) and exc.stage == "preprocess":
            return EXIT_DATA
        return EXIT_RUNTIME
    except (DataError, ModelFileError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
