"""Consolidate run records into setting x budget tables, CSV/JSON plus figures."""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from . import plotting


class ReportError(ValueError):
    pass


def load_records(results_dir) -> list[dict]:
    d = Path(results_dir)
    if not d.is_dir():
        raise ReportError(f"{d} is not a directory")
    records = []
    for path in sorted(d.glob("*.json")):
        try:
            rec = json.loads(path.read_text())
        except json.JSONDecodeError as exc:
            raise ReportError(f"{path}: not valid JSON ({exc})") from None
        if not isinstance(rec, dict) or "config" not in rec or "runs" not in rec:
            continue   # not a run record, e.g. an earlier report
        records.append(rec)
    if not records:
        raise ReportError(f"no run records in {d}")
    return records


def _stat(runs, key):
    vals = [r[key] for r in runs if r.get(key) is not None]
    if not vals:
        return None, None
    return float(np.mean(vals)), float(np.std(vals))


def summarize(records: list[dict]) -> dict:
    """Tables keyed by (setting, budget); a later record for the same key wins."""
    by_key = {}
    for rec in records:
        c = rec["config"]
        by_key[(int(c["setting"]), float(c["budget"]))] = rec
    summary, precision, ndcg = [], [], []
    for (s, b), rec in sorted(by_key.items()):
        runs = rec["runs"]
        auc_m, auc_s = _stat(runs, "auc")
        ap_m, ap_s = _stat(runs, "ap")
        summary.append({"setting": s, "budget": b, "n_runs": len(runs),
                        "auc_mean": auc_m, "auc_std": auc_s, "ap_mean": ap_m, "ap_std": ap_s})
        ks = sorted({int(k) for r in runs for k in r["precision_at_k"]})
        for k in ks:
            vals = [r["precision_at_k"][str(k)] for r in runs if str(k) in r["precision_at_k"]]
            precision.append({"setting": s, "budget": b, "k": k, "precision": float(np.mean(vals))})
        curves = [r["ndcg_at_k"] for r in runs if r["ndcg_at_k"]]
        if curves:
            n = min(len(c) for c in curves)
            mean = np.mean([c[:n] for c in curves], axis=0)
            ndcg.extend({"setting": s, "budget": b, "k": k + 1, "ndcg": float(v)} for k, v in enumerate(mean))
    return {"summary": summary, "precision_at_k": precision, "ndcg_at_k": ndcg}


def _write_csv(path, rows, columns):
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=columns, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({c: ("" if r[c] is None else r[c]) for c in columns})


def _read_oracle_csv(path):
    rows = list(csv.DictReader(open(path)))
    k1 = sorted({int(r["k1"]) for r in rows})
    k2 = sorted({int(r["k2"]) for r in rows})
    grid = np.full((len(k1), len(k2)), np.nan)
    for r in rows:
        grid[k1.index(int(r["k1"])), k2.index(int(r["k2"]))] = float(r["auc"])
    return k1, k2, grid


def write_report(results_dir, out_dir=None, figures: bool = True) -> dict[str, Path]:
    """Write summary/precision/NDCG tables (CSV and one JSON) and PNG figures.

    A ``fig3.csv`` from the oracle experiment in the results dir is drawn as a heatmap.
    """
    tables = summarize(load_records(results_dir))
    out = Path(out_dir) if out_dir is not None else Path(results_dir) / "report"
    out.mkdir(parents=True, exist_ok=True)
    files = {
        "summary_csv": out / "summary.csv",
        "precision_csv": out / "precision_at_k.csv",
        "ndcg_csv": out / "ndcg_at_k.csv",
        "json": out / "report.json",
    }
    _write_csv(files["summary_csv"], tables["summary"],
               ["setting", "budget", "n_runs", "auc_mean", "auc_std", "ap_mean", "ap_std"])
    _write_csv(files["precision_csv"], tables["precision_at_k"], ["setting", "budget", "k", "precision"])
    _write_csv(files["ndcg_csv"], tables["ndcg_at_k"], ["setting", "budget", "k", "ndcg"])
    files["json"].write_text(json.dumps(tables, sort_keys=True, indent=1) + "\n")
    if not figures:
        return files

    for metric in ("auc", "ap"):
        files[f"{metric}_png"] = out / f"{metric}_by_budget.png"
        plotting.metric_by_budget(tables["summary"], metric, files[f"{metric}_png"])
    top = max(r["budget"] for r in tables["summary"])
    prec, nd = {}, {}
    for r in tables["summary"]:
        if r["budget"] != top:
            continue
        s = r["setting"]
        pk = [x for x in tables["precision_at_k"] if x["setting"] == s and x["budget"] == top]
        nk = [x for x in tables["ndcg_at_k"] if x["setting"] == s and x["budget"] == top]
        if pk:
            prec[f"setting {s}"] = ([x["k"] for x in pk], [x["precision"] for x in pk])
        if nk:
            nd[f"setting {s}"] = ([x["k"] for x in nk], [x["ndcg"] for x in nk])
    files["precision_png"] = out / "precision_at_k.png"
    plotting.curves(prec, "k", f"precision@k (budget {top:g})", files["precision_png"])
    files["ndcg_png"] = out / "ndcg_at_k.png"
    plotting.curves(nd, "k", f"NDCG@k (budget {top:g})", files["ndcg_png"])
    oracle = Path(results_dir) / "fig3.csv"
    if oracle.exists():
        files["fig3_png"] = out / "fig3.png"
        plotting.oracle_heatmap(*_read_oracle_csv(oracle), files["fig3_png"])
    return files
