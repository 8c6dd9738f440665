import numpy as np
import pytest

from cliquespam.active import cliques_by_size
from cliquespam.data import write_dataset
from cliquespam.features import feature_matrix
from cliquespam.forest import ForestParams
from cliquespam.pipeline import RunConfig, run_setting
from cliquespam.synth import SynthParams, fig3_experiment, generate


def test_exact_spammer_count():
    ds = generate(SynthParams(n_users=1000, spam_fraction=0.2, seed=3))
    assert int((ds.label_vector() > 0).sum()) == 200


@pytest.mark.parametrize("kw", [dict(spam_fraction=0.0), dict(spam_fraction=1.0), dict(n_users=0),
                                dict(mean_reviews=0.5), dict(targeting=1.5), dict(filter_rate=0.0)])
def test_bad_params(kw):
    with pytest.raises(ValueError):
        SynthParams(**kw)


def test_empty_class_rejected():
    with pytest.raises(ValueError):
        generate(SynthParams(n_users=3, spam_fraction=0.1))


def test_reproducible_bytes(tmp_path):
    p = SynthParams(n_users=150, seed=11)
    write_dataset(generate(p), tmp_path / "a.tsv")
    write_dataset(generate(p), tmp_path / "b.tsv")
    assert (tmp_path / "a.tsv").read_bytes() == (tmp_path / "b.tsv").read_bytes()
    write_dataset(generate(SynthParams(n_users=150, seed=12)), tmp_path / "c.tsv")
    assert (tmp_path / "a.tsv").read_bytes() != (tmp_path / "c.tsv").read_bytes()


def test_spammer_features_are_elevated():
    ds = generate(SynthParams(n_users=600, seed=1))
    fm = feature_matrix(ds)
    y = ds.label_vector() > 0
    for col in ("BST", "EXT"):
        k = fm.columns.index(col)
        assert fm.values[y, k].mean() > fm.values[~y, k].mean()


def test_campaign_cliques_are_largest_and_mixed():
    p = SynthParams(n_users=1000, seed=0)
    ds = generate(p)
    lab = ds.user_labels
    top = cliques_by_size(ds)[:p.n_campaigns]
    for _, reviewers in top:
        n_spam = sum(lab[u] > 0 for u in reviewers)
        assert 0 < n_spam < len(reviewers)


def test_fig3_no_edges_is_chance():
    ds = generate(SynthParams(n_users=300, seed=0))
    res = fig3_experiment(ds, [0], [0])
    assert res.auc[0, 0] == 0.5


def test_fig3_enough_neighbors(tmp_path):
    ds = generate(SynthParams(n_users=400, seed=0))
    res = fig3_experiment(ds, [0, 6], [0, 6])
    assert res.auc[1, 1] >= 0.95
    res.to_csv(tmp_path / "g.csv")
    assert (tmp_path / "g.csv").read_text().splitlines()[0] == "k1,k2,auc"


def _mean_auc(p, setting=1):
    cfg = RunConfig(setting=setting, synth=p, seeds=(0, 1, 2),
                    forest=ForestParams(n_trees=40, max_depth=8))
    return run_setting(cfg)["aggregate"]["auc"]["mean"]


def test_planted_labels_are_recoverable():
    assert _mean_auc(SynthParams(n_users=800, seed=2)) > 0.6


def test_indistinguishable_spammers_give_chance():
    p = SynthParams(n_users=800, seed=2).indistinguishable()
    assert abs(_mean_auc(p) - 0.5) < 0.08
