"""End-to-end runs of the seven potential/sampling/bursty configurations."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import active, metrics
from .data import Dataset, load_dataset
from .features import FeatureMatrix, feature_matrix
from .forest import Forest, ForestParams, train
from .graph import SparsifyParams, UserGraph, build_clique_graph, bursty_filter, trusted_sparsify
from .lbp import PMRF, LBPParams, classify, run_lbp
from .potentials import (
    EPS,
    edge_probs_to_tsv,
    ml_edge_probs,
    ml_node_potentials,
    threshold_edge_probs,
    threshold_node_potentials,
    threshold_spam_scores,
    train_edge_forest,
)
from .synth import SynthParams, generate

log = logging.getLogger(__name__)

BUDGETS = (0.0025, 0.005, 0.01, 0.025)
PRECISION_KS = tuple(range(100, 1001, 100))
NDCG_K_MAX = 1000


@dataclass(frozen=True)
class Setting:
    nodes: str      # "ml" | "threshold"
    edges: str      # "ml" | "threshold" | "none"
    sampling: str   # "random" | "clique"
    bursty: bool


SETTINGS = {
    1: Setting("ml", "none", "random", False),
    2: Setting("ml", "threshold", "random", False),
    3: Setting("threshold", "ml", "random", False),
    4: Setting("ml", "ml", "random", False),
    5: Setting("ml", "ml", "clique", False),
    6: Setting("ml", "ml", "random", True),
    7: Setting("ml", "ml", "clique", True),
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    setting: int = 5
    budget: float = 0.025
    sampling: str | None = None
    bursty: bool | None = None
    seeds: tuple[int, ...] = tuple(range(10))
    data: str | None = None
    synth: SynthParams | None = None
    forest: ForestParams = ForestParams()
    lbp: LBPParams = LBPParams()
    sparsify: SparsifyParams = SparsifyParams()
    tau: float = 0.5
    eps: float = EPS
    out: str | None = None

    def resolved(self) -> "RunConfig":
        """Fill sampling/bursty from the setting and check they agree with it."""
        if self.setting not in SETTINGS:
            raise ConfigError(f"setting must be one of 1..7, got {self.setting}")
        s = SETTINGS[self.setting]
        if self.sampling is not None and self.sampling != s.sampling:
            raise ConfigError(f"setting {self.setting} uses {s.sampling} sampling, not {self.sampling}")
        if self.bursty is not None and bool(self.bursty) != s.bursty:
            raise ConfigError(f"setting {self.setting} has bursty={s.bursty}")
        if self.data is None and self.synth is None:
            raise ConfigError("need a dataset path or synthetic parameters")
        if not (0 < self.budget < 1):
            raise ConfigError("budget must be a fraction in (0, 1)")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        return replace(self, sampling=s.sampling, bursty=s.bursty, seeds=tuple(int(x) for x in self.seeds))

    @property
    def mode(self) -> Setting:
        return SETTINGS[self.setting]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["seeds"] = list(self.seeds)
        d.pop("out")
        return d


@dataclass
class Prepared:
    """Per-dataset artifacts shared by every run on that dataset."""

    ds: Dataset
    fm: FeatureMatrix
    labels: np.ndarray
    _graph: UserGraph | None = field(default=None, repr=False)
    _scores: np.ndarray | None = field(default=None, repr=False)
    _bursty: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_dataset(cls, ds: Dataset) -> "Prepared":
        return cls(ds=ds, fm=feature_matrix(ds), labels=ds.label_vector())

    @property
    def graph(self) -> UserGraph:
        if self._graph is None:
            self._graph = build_clique_graph(self.ds)
        return self._graph

    def bursty_graph(self, T_days) -> UserGraph:
        if T_days not in self._bursty:
            self._bursty[T_days] = bursty_filter(self.graph, T_days)
        return self._bursty[T_days]

    @property
    def spam_scores(self) -> np.ndarray:
        if self._scores is None:
            self._scores = threshold_spam_scores(self.fm)
        return self._scores


def load_config_data(cfg: RunConfig) -> Dataset:
    if cfg.data is not None:
        return load_dataset(cfg.data)
    return generate(cfg.synth)


def _sub_seed(seed: int, stream: int) -> int:
    return int(np.random.SeedSequence([seed, stream]).generate_state(1)[0])


def _select_users(prep: Prepared, cfg: RunConfig, seed: int) -> list[str]:
    users = prep.fm.user_ids
    k = active.budget_size(cfg.budget, len(users))
    if cfg.sampling == "clique":
        return active.sample_largest_clique(prep.ds, k, seed)
    return active.sample_random(users, k, seed)


def _ranking_metrics(scores, labels, users) -> dict:
    out = {}
    pos = labels > 0
    if pos.all() or not pos.any():
        out["auc"] = None
        out["ap"] = None if not pos.any() else 1.0
    else:
        out["auc"] = metrics.auc(scores, labels)
        out["ap"] = metrics.average_precision(scores, labels, users)
    ranked = metrics.RankedResult.from_scores(scores, labels, users)
    out["precision_at_k"] = {str(k): v for k, v in metrics.precision_curve(ranked, PRECISION_KS).items()}
    out["ndcg_at_k"] = metrics.ndcg_curve(ranked, NDCG_K_MAX).tolist() if pos.any() else []
    return out


def run_once(prep: Prepared, cfg: RunConfig, seed: int, dump=None) -> dict:
    """One seeded run of a resolved config; returns a metrics record.

    With ``dump`` set to a directory, the forests, potentials, trusted edges
    and LBP trace of this run are written there.
    """
    mode = cfg.mode
    if dump is not None:
        dump = Path(dump)
        dump.mkdir(parents=True, exist_ok=True)
    selected = _select_users(prep, cfg, seed)
    index = {u: i for i, u in enumerate(prep.fm.user_ids)}
    labeled = {index[u]: int(prep.labels[index[u]]) for u in selected}
    lab_idx = np.array(sorted(labeled), dtype=np.int64)
    info: dict = {"seed": seed, "n_labeled": len(labeled),
                  "n_labeled_spammers": int(sum(v > 0 for v in labeled.values()))}

    node_params = replace(cfg.forest, seed=_sub_seed(seed, 1))
    if mode.nodes == "ml":
        node_forest = train(prep.fm.values[lab_idx], prep.labels[lab_idx], node_params)
        phi = ml_node_potentials(node_forest, prep.fm, labeled, cfg.eps)
        if dump is not None:
            node_forest.save(dump / "node_forest.json")
    else:
        phi = threshold_node_potentials(prep.spam_scores, labeled, cfg.eps)

    if mode.edges == "none":
        spam = score = phi.a
        info.update(n_edges=0, n_edges_before=0, lbp_iterations=0, lbp_converged=True)
    else:
        g = prep.bursty_graph(cfg.sparsify.T_days) if mode.bursty else prep.graph
        if mode.edges == "ml":
            edge_params = replace(cfg.forest, seed=_sub_seed(seed, 2))
            edge_forest = train_edge_forest(prep.fm, labeled, g, edge_params)
            p = ml_edge_probs(edge_forest, prep.fm, g, labeled, cfg.eps)
            if dump is not None:
                edge_forest.save(dump / "edge_forest.json")
        else:
            p = threshold_edge_probs(prep.spam_scores, g, labeled, cfg.eps)
        trusted = trusted_sparsify(g.with_edge_prob(p), cfg.sparsify.lo, cfg.sparsify.hi)
        res = run_lbp(PMRF.from_graph(trusted, phi.a), cfg.lbp)
        spam, score = res.spam, res.score
        info.update(n_edges=trusted.n_edges, n_edges_before=g.n_edges,
                    lbp_iterations=res.iterations, lbp_converged=res.converged)
        if dump is not None:
            edge_probs_to_tsv(dump / "trusted_edges.tsv", trusted, trusted.edge_prob)
            res.trace_to_csv(dump / "lbp_trace.csv")
    if dump is not None:
        phi.to_tsv(dump / "node_potentials.tsv", prep.fm.user_ids)
        (dump / "selected_users.txt").write_text("".join(f"{u}\n" for u in sorted(selected)))

    test = np.ones(len(spam), dtype=bool)
    test[lab_idx] = False
    users = [u for u, t in zip(prep.fm.user_ids, test) if t]
    pred, _ = classify(spam[test], cfg.tau, users)
    info["n_test"] = int(test.sum())
    info["accuracy_at_tau"] = float(np.mean(pred == prep.labels[test])) if test.any() else None
    info.update(_ranking_metrics(score[test], prep.labels[test], users))
    info["selected_users"] = sorted(selected)
    return info


def _aggregate(runs: list[dict]) -> dict:
    agg = {}
    for key in ("auc", "ap", "accuracy_at_tau"):
        vals = [r[key] for r in runs if r.get(key) is not None]
        if vals:
            agg[key] = {"mean": float(np.mean(vals)), "std": float(np.std(vals)), "n": len(vals)}
    ks = sorted({k for r in runs for k in r["precision_at_k"]}, key=int)
    agg["precision_at_k"] = {
        k: float(np.mean([r["precision_at_k"][k] for r in runs if k in r["precision_at_k"]])) for k in ks
    }
    curves = [r["ndcg_at_k"] for r in runs if r["ndcg_at_k"]]
    if curves:
        n = min(len(c) for c in curves)
        agg["ndcg_at_k"] = np.mean([c[:n] for c in curves], axis=0).tolist()
    else:
        agg["ndcg_at_k"] = []
    return agg


def run_setting(cfg: RunConfig, prep: Prepared | None = None, dump=None) -> dict:
    """Run every seed of a config; the record embeds the fully resolved config.

    ``dump`` (a directory) collects per-seed artifacts under seed<N>/.
    """
    cfg = cfg.resolved()
    if prep is None:
        prep = Prepared.from_dataset(load_config_data(cfg))
    runs = []
    for seed in cfg.seeds:
        log.info("setting %d budget %g seed %d", cfg.setting, cfg.budget, seed)
        sub = None if dump is None else Path(dump) / f"seed{seed}"
        runs.append(run_once(prep, cfg, seed, sub))
    return {"config": cfg.to_dict(), "runs": runs, "aggregate": _aggregate(runs)}


def result_filename(cfg: RunConfig) -> str:
    return f"setting{cfg.setting}_budget{cfg.budget:g}.json"


def dumps(record: dict) -> str:
    return json.dumps(record, sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_result(record: dict, out_dir, cfg: RunConfig) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / result_filename(cfg)
    path.write_text(dumps(record))
    return path


# ---------------------------------------------------------------- key-value config files

_SECTIONS = {"forest": ForestParams, "lbp": LBPParams, "sparsify": SparsifyParams, "synth": SynthParams}


def _parse_value(text: str):
    text = text.strip()
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    if low in ("none", "null"):
        return None
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text.strip("\"'")


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines; dotted keys address nested parameter groups."""
    out: dict = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key] = _parse_value(value)
    return out


def apply_overrides(cfg: RunConfig, values: dict) -> RunConfig:
    top = {f.name for f in fields(RunConfig)}
    groups: dict[str, dict] = {}
    flat = {}
    for key, v in values.items():
        if "." in key:
            group, name = key.split(".", 1)
            if group not in _SECTIONS:
                raise ConfigError(f"unknown config group {group!r}")
            groups.setdefault(group, {})[name] = v
        elif key in top and key not in _SECTIONS:
            flat[key] = v
        else:
            raise ConfigError(f"unknown config key {key!r}")
    if "seeds" in flat:
        s = flat["seeds"]
        flat["seeds"] = tuple(s) if isinstance(s, (list, tuple)) else (int(s),)
    cfg = replace(cfg, **flat)
    for group, kv in groups.items():
        base = getattr(cfg, group) or _SECTIONS[group]()
        known = {f.name for f in fields(_SECTIONS[group])}
        bad = set(kv) - known
        if bad:
            raise ConfigError(f"unknown keys in {group}: {sorted(bad)}")
        if group == "sparsify" and kv.get("T_days") in ("inf", "none"):
            kv["T_days"] = math.inf
        try:
            cfg = replace(cfg, **{group: replace(base, **kv)})
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"bad {group} parameters: {exc}") from None
    return cfg


