import json
import math
from dataclasses import replace

import numpy as np
import pytest

from cliquespam import metrics
from cliquespam.forest import ForestParams, train
from cliquespam.pipeline import (
    SETTINGS, ConfigError, Prepared, RunConfig, _select_users, _sub_seed, apply_overrides, dumps,
    read_config_file, run_once, run_setting, write_result,
)
from cliquespam.synth import SynthParams, generate

# tiny label budgets can draw a single class; the constant-forest fallback is intended
pytestmark = pytest.mark.filterwarnings("ignore:single-class training set")

FAST = ForestParams(n_trees=15, max_depth=6)
SYN = SynthParams(n_users=300, seed=4)


@pytest.fixture(scope="module")
def prep():
    return Prepared.from_dataset(generate(SYN))


def cfg_for(setting, **kw):
    return RunConfig(setting=setting, synth=SYN, forest=FAST, seeds=(0, 1), **kw).resolved()


def test_settings_table():
    assert SETTINGS[1].edges == "none"
    assert (SETTINGS[5].nodes, SETTINGS[5].edges, SETTINGS[5].sampling, SETTINGS[5].bursty) == \
        ("ml", "ml", "clique", False)
    assert SETTINGS[6].bursty and SETTINGS[7].bursty and SETTINGS[7].sampling == "clique"
    assert SETTINGS[2].edges == "threshold" and SETTINGS[3].nodes == "threshold"


def test_setting1_is_raw_forest_scores(prep):
    cfg = cfg_for(1)
    rec = run_once(prep, cfg, 0)
    sel = _select_users(prep, cfg, 0)
    idx = np.array(sorted(prep.fm.user_ids.index(u) for u in sel))
    f = train(prep.fm.values[idx], prep.labels[idx], replace(cfg.forest, seed=_sub_seed(0, 1)))
    test = np.ones(len(prep.labels), bool)
    test[idx] = False
    assert rec["auc"] == metrics.auc(f.predict_proba(prep.fm.values[test]), prep.labels[test])
    assert rec["n_edges"] == 0


@pytest.mark.parametrize("setting", sorted(SETTINGS))
def test_every_setting_runs(prep, setting):
    rec = run_setting(cfg_for(setting), prep)
    assert len(rec["runs"]) == 2
    for r in rec["runs"]:
        assert 0 <= r["auc"] <= 1
        assert r["n_labeled"] == 8
        assert len(r["ndcg_at_k"]) == min(r["n_test"], 1000)
    assert rec["config"]["setting"] == setting


def test_labeled_users_excluded_from_evaluation(prep):
    r = run_once(prep, cfg_for(4), 3)
    assert r["n_test"] == len(prep.labels) - r["n_labeled"]


def test_settings_4_and_5_differ_only_in_sampler():
    a, b = cfg_for(4).to_dict(), cfg_for(5).to_dict()
    diff = {k for k in a if a[k] != b[k]}
    assert diff == {"setting", "sampling"}


def test_config_validation():
    with pytest.raises(ConfigError):
        RunConfig(setting=8, synth=SYN).resolved()
    with pytest.raises(ConfigError):
        RunConfig(setting=5, sampling="random", synth=SYN).resolved()
    with pytest.raises(ConfigError):
        RunConfig(setting=5, bursty=True, synth=SYN).resolved()
    with pytest.raises(ConfigError):
        RunConfig(setting=1).resolved()
    with pytest.raises(ConfigError):
        RunConfig(setting=1, synth=SYN, budget=1.5).resolved()
    assert RunConfig(setting=7, synth=SYN).resolved().bursty is True


def test_resolved_config_is_embedded(prep):
    rec = run_setting(cfg_for(2), prep)
    c = rec["config"]
    for key in ("forest", "lbp", "sparsify", "synth", "seeds", "budget", "tau", "eps"):
        assert key in c
    assert c["forest"]["n_trees"] == 15 and c["synth"]["n_users"] == 300
    assert c["sampling"] == "random" and c["bursty"] is False


def test_determinism(prep, tmp_path):
    cfg = cfg_for(5)
    a = dumps(run_setting(cfg, prep))
    b = dumps(run_setting(cfg, Prepared.from_dataset(generate(SYN))))
    assert a == b
    p = write_result(json.loads(a), tmp_path, cfg)
    assert p.name == "setting5_budget0.025.json"


def test_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# comment\nsetting = 4\nbudget = 0.01\nseeds = [3, 4]\n"
                    "forest.n_trees = 7\nlbp.damping = 0.2\nsparsify.T_days = inf\n"
                    "synth.n_users = 120\nsynth.camouflage = 0\n")
    values = read_config_file(path)
    assert values["setting"] == 4 and values["seeds"] == [3, 4]
    cfg = apply_overrides(RunConfig(synth=SynthParams()), values)
    assert cfg.forest.n_trees == 7 and cfg.lbp.damping == 0.2
    assert math.isinf(cfg.sparsify.T_days)
    assert cfg.synth.n_users == 120 and cfg.seeds == (3, 4) and cfg.budget == 0.01


@pytest.mark.parametrize("text", ["nonsense line\n", "bogus = 1\n", "forest.nope = 1\n",
                                  "cake.n_trees = 3\n", "forest.n_trees = 0\n"])
def test_bad_config_file(tmp_path, text):
    path = tmp_path / "bad.cfg"
    path.write_text(text)
    with pytest.raises(ConfigError):
        apply_overrides(RunConfig(synth=SYN), read_config_file(path))


def test_artifact_dump(prep, tmp_path):
    run_setting(replace(cfg_for(5), seeds=(0,)), prep, dump=tmp_path)
    d = tmp_path / "seed0"
    for name in ("node_forest.json", "edge_forest.json", "trusted_edges.tsv", "lbp_trace.csv",
                 "node_potentials.tsv", "selected_users.txt"):
        assert (d / name).exists(), name
    assert len((d / "selected_users.txt").read_text().split()) == 8
