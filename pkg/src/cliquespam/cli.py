"""Command line entry point: ingest, synth, features, run, fig3, report."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from dataclasses import replace
from pathlib import Path

from .data import DatasetFormatError, dataset_stats, load_dataset, load_yelp_raw, write_dataset
from .features import feature_matrix
from .pipeline import (
    SETTINGS,
    ConfigError,
    Prepared,
    RunConfig,
    apply_overrides,
    dumps,
    load_config_data,
    read_config_file,
    run_setting,
    write_result,
)
from .report import ReportError, write_report
from .synth import SynthParams, fig3_experiment, generate

log = logging.getLogger("cliquespam")


def _config_values(args) -> dict:
    return read_config_file(args.config) if getattr(args, "config", None) else {}


def _synth_params(values: dict, **defaults) -> SynthParams:
    kv = dict(defaults)
    kv.update({k.split(".", 1)[1]: v for k, v in values.items() if k.startswith("synth.")})
    try:
        return SynthParams(**kv)
    except TypeError as exc:
        raise ConfigError(f"bad synth parameters: {exc}") from None


def _dataset(args, values: dict, **synth_defaults):
    data = values.get("data", args.data)
    if data is not None:
        return load_dataset(data)
    return generate(_synth_params(values, **synth_defaults))


def _write_json(obj, path=None):
    text = json.dumps(obj, sort_keys=True, indent=1) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


# ---------------------------------------------------------------- subcommands

def cmd_ingest(args) -> int:
    if args.format == "yelp":
        ds = load_yelp_raw(args.data, args.content)
    else:
        ds = load_dataset(args.data)
    if args.out:
        write_dataset(ds, args.out)
    _write_json(dataset_stats(ds))
    return 0


def cmd_synth(args) -> int:
    values = _config_values(args)
    defaults = {}
    if args.seed is not None:
        defaults["seed"] = args.seed
    if args.n_users is not None:
        defaults["n_users"] = args.n_users
    if args.spam_fraction is not None:
        defaults["spam_fraction"] = args.spam_fraction
    ds = generate(_synth_params(values, **defaults))
    write_dataset(ds, args.out)
    _write_json(dataset_stats(ds))
    return 0


def cmd_features(args) -> int:
    values = _config_values(args)
    ds = _dataset(args, values)
    fm = feature_matrix(ds)
    fm.to_csv(args.out)
    log.info("wrote %d x %d features to %s", *fm.shape, args.out)
    return 0


def _run_configs(args, values: dict) -> list[RunConfig]:
    settings = args.setting or [5]
    if "setting" in values:
        settings = [int(values.pop("setting"))]
    budgets = args.budget or [0.025]
    if "budget" in values:
        budgets = [float(values.pop("budget"))]
    base = RunConfig(data=args.data, out=args.out)
    if args.seeds is not None:
        base = replace(base, seeds=tuple(args.seeds))
    elif args.seed is not None:
        base = replace(base, seeds=(args.seed,))
    base = apply_overrides(base, values)
    if base.data is None and base.synth is None:
        base = replace(base, synth=SynthParams())
    if base.data is not None:
        base = replace(base, synth=None)
    cfgs = []
    for s in settings:
        for b in budgets:
            cfg = replace(base, setting=s, budget=b, sampling=args.sampling, bursty=args.bursty)
            cfgs.append(cfg.resolved())
    return cfgs


def cmd_run(args) -> int:
    values = _config_values(args)
    cfgs = _run_configs(args, values)
    prep = Prepared.from_dataset(load_config_data(cfgs[0]))
    for cfg in cfgs:
        t0 = time.time()
        dump = None
        if args.artifacts:
            if cfg.out is None:
                raise ConfigError("--artifacts needs --out")
            dump = Path(cfg.out) / "artifacts" / f"setting{cfg.setting}_budget{cfg.budget:g}"
        record = run_setting(cfg, prep, dump)
        agg = record["aggregate"].get("auc", {})
        log.info("setting %d budget %g: AUC %.4f +- %.4f (%.1fs)", cfg.setting, cfg.budget,
                 agg.get("mean", float("nan")), agg.get("std", float("nan")), time.time() - t0)
        if cfg.out is None:
            sys.stdout.write(dumps(record))
        else:
            path = write_result(record, cfg.out, cfg)
            print(path)
    return 0


def cmd_fig3(args) -> int:
    values = _config_values(args)
    ds = _dataset(args, values, n_users=2000)
    t0 = time.time()
    res = fig3_experiment(ds, args.k1, args.k2, epsilon=args.epsilon, seed=args.seed,
                          repeats=args.repeats)
    log.info("oracle grid %dx%d done in %.1fs", len(args.k1), len(args.k2), time.time() - t0)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    res.to_csv(out / "fig3.csv")
    from . import plotting

    plotting.oracle_heatmap(res.k1_values, res.k2_values, res.auc, out / "fig3.png")
    print(out / "fig3.csv")
    return 0


def cmd_report(args) -> int:
    files = write_report(args.results, args.out, figures=not args.no_figures)
    for name in sorted(files):
        print(files[name])
    return 0


# ---------------------------------------------------------------- parser

def _int_list(text: str) -> list[int]:
    """'0:10' (inclusive range), '0:10:2' or '1,3,5'."""
    if ":" in text:
        parts = [int(x) for x in text.split(":")]
        if len(parts) == 2:
            parts.append(1)
        lo, hi, step = parts
        return list(range(lo, hi + 1, step))
    return [int(x) for x in text.split(",") if x.strip()]


def _settings(text: str) -> list[int]:
    if text == "all":
        return sorted(SETTINGS)
    return [int(x) for x in text.split(",")]


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cliquespam", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a dataset and optionally convert it to canonical TSV")
    p.add_argument("--data", required=True, help="canonical TSV, or Yelp metadata file with --format yelp")
    p.add_argument("--format", choices=("canonical_tsv", "yelp"), default="canonical_tsv")
    p.add_argument("--content", help="Yelp reviewContent file (optional)")
    p.add_argument("--out", help="write canonical TSV here")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--n-users", type=int)
    p.add_argument("--spam-fraction", type=float)
    p.add_argument("--config", help="key = value file; synth.* keys set generator parameters")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("features", help="write the user feature matrix as CSV")
    p.add_argument("--data", help="canonical TSV (default: synthetic data)")
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("run", help="run settings x budgets over seeds and write metrics JSON")
    p.add_argument("--data", help="canonical TSV (default: synthetic data)")
    p.add_argument("--setting", type=_settings, help="e.g. 5, 1,4,5 or all (default 5)")
    p.add_argument("--budget", type=float, nargs="+", help="label fractions (default 0.025)")
    p.add_argument("--sampling", choices=("random", "clique"),
                   help="checked against the setting")
    p.add_argument("--bursty", action=argparse.BooleanOptionalAction, default=None,
                   help="checked against the setting")
    p.add_argument("--seed", type=int, help="a single seed")
    p.add_argument("--seeds", type=int, nargs="+", help="default 0..9")
    p.add_argument("--out", help="results directory (default: print JSON)")
    p.add_argument("--artifacts", action="store_true",
                   help="also dump forests, potentials, trusted edges and LBP traces under OUT/artifacts")
    p.add_argument("--config", help="key = value file overriding the flags")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fig3", help="oracle k1/k2 sparsification experiment")
    p.add_argument("--data", help="canonical TSV (default: synthetic data with 2000 users)")
    p.add_argument("--k1", type=_int_list, default=list(range(0, 11)))
    p.add_argument("--k2", type=_int_list, default=list(range(0, 11)))
    p.add_argument("--epsilon", type=float, default=0.001)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--config")
    p.set_defaults(func=cmd_fig3)

    p = sub.add_parser("report", help="consolidate run JSON files into tables and figures")
    p.add_argument("results", help="directory of run JSON files")
    p.add_argument("--out", help="default RESULTS/report")
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, ReportError, DatasetFormatError, ValueError, OSError) as exc:
        print(f"cliquespam {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
