import datetime as dt

import pytest
from hypothesis import given, settings, strategies as st

from cliquespam.data import (
    BENIGN, SPAMMER, Dataset, DatasetFormatError, Review, dataset_stats, escape_text,
    load_dataset, load_yelp_raw, unescape_text, write_dataset,
)
from cliquespam.synth import SynthParams, generate

from conftest import make_ds

HEADER = "review_id\tuser_id\tproduct_id\trating\tdate\tfiltered\ttext\n"


def write(tmp_path, body, header=HEADER):
    p = tmp_path / "d.tsv"
    p.write_text(header + body, encoding="utf-8")
    return p


def test_three_reviews_two_users_one_product(tmp_path):
    p = write(tmp_path, "r1\tu1\tA\t5\t2020-01-01\t0\thi\n"
                        "r2\tu1\tA\t4\t2020-01-02\t0\t\n"
                        "r3\tu2\tA\t1\t2020-01-03\t1\tbad\n")
    ds = load_dataset(p)
    assert len(ds.users) == 2 and len(ds.products) == 1 and len(ds) == 3
    assert ds.user_labels == {"u1": BENIGN, "u2": SPAMMER}


def test_one_filtered_review_makes_spammer():
    ds = make_ds([("u", "A", 5, 0, True), ("u", "B", 4, 1, False)])
    assert ds.user_labels["u"] == SPAMMER


def test_header_only_is_empty(tmp_path):
    ds = load_dataset(write(tmp_path, ""))
    assert len(ds) == 0 and ds.users == {} and ds.user_labels == {}
    assert dataset_stats(ds)["spammer_pct"] == 0.0


@pytest.mark.parametrize("body, line", [
    ("r1\tu1\tA\t5\t2020-01-01\t0\n", 2),                        # 6 fields
    ("r1\tu1\tA\t5\t2020-01-01\t0\tx\nr2\tu1\tA\t9\t2020-01-01\t0\tx\n", 3),
    ("r1\tu1\tA\t5\t2020-13-01\t0\tx\n", 2),
    ("r1\tu1\tA\t5\t2020-01-01\t2\tx\n", 2),
    ("r1\tu1\tA\t5\t1980-01-01\t0\tx\n", 2),
    ("r1\tu1\tA\t5\t2020-01-01\t0\tx\nr1\tu2\tB\t5\t2020-01-01\t0\tx\n", 3),   # duplicate id
])
def test_malformed_rows_report_line(tmp_path, body, line):
    with pytest.raises(DatasetFormatError) as exc:
        load_dataset(write(tmp_path, body))
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_missing_header(tmp_path):
    with pytest.raises(DatasetFormatError):
        load_dataset(write(tmp_path, "r1\tu1\tA\t5\t2020-01-01\t0\tx\n", header=""))


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        load_dataset(write(tmp_path, ""), format="json")


def test_review_invariants():
    with pytest.raises(ValueError):
        Review("r", "u", "p", 0, dt.date(2020, 1, 1), False)
    with pytest.raises(ValueError):
        Review("r", "u", "p", 3, dt.date(2101, 1, 1), False)


def test_duplicate_id_in_memory():
    r = Review("r", "u", "p", 3, dt.date(2020, 1, 1), False)
    with pytest.raises(ValueError):
        Dataset.from_reviews([r, r])


def test_stats_all_filtered():
    ds = make_ds([("u1", "A", 5, 0, True), ("u2", "A", 5, 0, True)])
    s = dataset_stats(ds)
    assert s["spammer_pct"] == 100.0 and s["fake_review_pct"] == 100.0


def test_stats_synthetic_spam_share():
    s = dataset_stats(generate(SynthParams(n_users=1000, spam_fraction=0.2)))
    assert 15 <= s["spammer_pct"] <= 25
    assert s["users"] == 1000


_text = st.text(st.characters(blacklist_categories=("Cs",)), max_size=40)


@given(_text)
def test_escape_roundtrip(s):
    e = escape_text(s)
    assert "\t" not in e and "\n" not in e and "\r" not in e
    assert unescape_text(e) == s


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abc"), st.sampled_from("PQ"), st.integers(1, 5),
                          st.integers(0, 400), st.booleans(), _text), min_size=1, max_size=12))
def test_tsv_roundtrip(tmp_path_factory, rows):
    ds = make_ds(rows)
    p = tmp_path_factory.mktemp("rt") / "ds.tsv"
    write_dataset(ds, p)
    back = load_dataset(p)
    assert back == ds
    assert back.user_labels == ds.user_labels


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abcd"), st.sampled_from("PQ"), st.integers(1, 5),
                          st.integers(0, 40), st.booleans()), min_size=2, max_size=10),
       st.data())
def test_flipping_filtered_touches_one_user(rows, data):
    k = data.draw(st.integers(0, len(rows) - 1))
    flipped = list(rows)
    flipped[k] = rows[k][:4] + (True,)
    a, b = make_ds(rows).user_labels, make_ds(flipped).user_labels
    changed = {u for u in a if a[u] != b[u]}
    assert changed <= {rows[k][0]}
    assert b[rows[k][0]] == SPAMMER


def test_label_vector_aligned(toy_ds):
    v = toy_ds.label_vector()
    assert [toy_ds.user_labels[u] for u in toy_ds.arrays.user_ids] == list(v)


def test_yelp_raw(tmp_path):
    meta = tmp_path / "metadata"
    meta.write_text("201 0 5.0 -1 2014-10-11\n202 0 4.0 1 2014-10-12\n202 1 3.0 1 2014-11-01\n")
    content = tmp_path / "reviewContent"
    content.write_text("201\t0\t2014-10-11\tBest place ever!\n")
    ds = load_yelp_raw(meta, content)
    assert len(ds) == 3
    assert ds.user_labels == {"201": SPAMMER, "202": BENIGN}
    assert ds.reviews[0].text == "Best place ever!" and ds.reviews[1].text == ""
    meta.write_text("201 0 5.0 -1\n")
    with pytest.raises(DatasetFormatError):
        load_yelp_raw(meta)
