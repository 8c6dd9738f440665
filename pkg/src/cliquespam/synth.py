"""Synthetic review ecosystems with planted spammers, and the k1/k2 oracle experiment."""

from __future__ import annotations

import datetime as dt
from dataclasses import asdict, dataclass, replace

import numpy as np

from .data import SPAMMER, Dataset, Review
from .graph import UserGraph, build_clique_graph, oracle_sparsify
from .lbp import PMRF, LBPParams, run_lbp
from .metrics import auc

START_DATE = dt.date(2015, 1, 1)
BENIGN_RATINGS = np.array([0.08, 0.10, 0.20, 0.35, 0.27])

_SYLLABLES = ("ka", "lo", "mi", "ne", "ru", "ta", "ve", "so", "di", "pa", "zu", "re")
VOCAB = tuple(a + b + c for a in _SYLLABLES for b in _SYLLABLES[::3] for c in ("", "n", "t"))
PRONOUNS = ("I", "my", "me", "we", "our")


@dataclass(frozen=True)
class SynthParams:
    n_users: int = 1000
    n_products: int = 100
    spam_fraction: float = 0.2
    mean_reviews: float = 2.3          # geometric, support >= 1
    popularity_exponent: float = 0.5   # Zipf exponent of benign product choice
    horizon_days: int = 730
    # spammer behavior, each a probability in [0, 1]
    extremity_bias: float = 0.4
    burst_bias: float = 0.7
    duplication: float = 0.3
    early_bias: float = 0.5
    text_bias: float = 0.3
    # collusion: chance a spammer's first review targets its campaign product
    n_campaigns: int = 3
    collusion: float = 0.3
    # chance each other spam review goes to the pool of least popular products
    targeting: float = 0.95
    target_pool: float = 0.3
    pool_appeal: float = 0.05          # popularity multiplier of pool products
    # colluders scale their other biases by (1 - camouflage)
    camouflage: float = 0.5
    filter_rate: float = 0.6
    seed: int = 0

    def __post_init__(self):
        if not (0 < self.spam_fraction < 1):
            raise ValueError("spam_fraction must be in (0, 1)")
        if self.n_users < 1 or self.n_products < 1:
            raise ValueError("n_users and n_products must be >= 1")
        if self.mean_reviews < 1:
            raise ValueError("mean_reviews must be >= 1 (every user writes a review)")
        if self.n_campaigns < 0 or self.n_campaigns > self.n_products:
            raise ValueError("n_campaigns must be in 0..n_products")
        for name in ("extremity_bias", "burst_bias", "duplication", "early_bias",
                     "text_bias", "collusion", "filter_rate", "targeting", "camouflage"):
            v = getattr(self, name)
            if not (0 <= v <= 1):
                raise ValueError(f"{name} must be in [0, 1]")
        if self.filter_rate == 0:
            raise ValueError("filter_rate must be positive so spammers carry a filtered review")
        if not (0 <= self.pool_appeal <= 1):
            raise ValueError("pool_appeal must be in [0, 1]")
        if not (0 < self.target_pool <= 1):
            raise ValueError("target_pool must be in (0, 1]")
        if self.horizon_days < 30:
            raise ValueError("horizon_days must be >= 30")

    def indistinguishable(self) -> "SynthParams":
        """Same sizes, with every spammer bias switched off."""
        return replace(self, extremity_bias=0.0, burst_bias=0.0, duplication=0.0,
                       early_bias=0.0, text_bias=0.0, collusion=0.0, targeting=0.0)

    def to_dict(self) -> dict:
        return asdict(self)


def _sentence(rng, n_words, spammy: bool):
    ws = list(rng.choice(VOCAB, size=n_words))
    if spammy:
        if rng.random() < 0.5:
            ws.insert(0, PRONOUNS[rng.integers(len(PRONOUNS))])
        ws = [w.upper() if rng.random() < 0.2 else w for w in ws]
    ws[0] = ws[0][:1].upper() + ws[0][1:]
    end = "!" if rng.random() < (0.6 if spammy else 0.08) else "."
    return " ".join(ws) + end


def _text(rng, spammy: bool) -> str:
    if spammy:
        n_sent = int(rng.integers(1, 4))
    else:
        n_sent = int(rng.integers(2, 7))
    return " ".join(_sentence(rng, int(rng.integers(5, 13)), spammy) for _ in range(n_sent))


def _rating(rng, extreme: bool) -> int:
    if extreme:
        return 5 if rng.random() < 0.8 else 1
    return int(rng.choice(5, p=BENIGN_RATINGS)) + 1


def generate(p: SynthParams = SynthParams()) -> Dataset:
    """Draw a labeled dataset; spammers are exactly round(spam_fraction * n_users) users."""
    rng = np.random.default_rng(p.seed)
    n_spam = int(round(p.spam_fraction * p.n_users))
    if n_spam == 0 or n_spam == p.n_users:
        raise ValueError("spam_fraction leaves one class empty for this n_users")
    is_spam = np.zeros(p.n_users, dtype=bool)
    is_spam[rng.permutation(p.n_users)[:n_spam]] = True

    ranks = np.arange(1, p.n_products + 1, dtype=float)
    popularity = ranks ** -p.popularity_exponent
    perm = rng.permutation(p.n_products)
    popularity[perm] = popularity.copy()
    # campaigns target the most popular products, the pool is the tail
    campaigns = perm[: p.n_campaigns]
    pool = perm[p.n_products - max(1, int(round(p.target_pool * p.n_products))):]
    if len(pool) < p.n_products:
        popularity[pool] *= p.pool_appeal
    popularity /= popularity.sum()
    # campaigns launch in the first tenth of the horizon
    campaign_day = rng.integers(0, max(1, p.horizon_days // 10), size=p.n_campaigns)

    reviews = []
    rid = 0
    for u in range(p.n_users):
        n_rev = min(int(rng.geometric(1.0 / p.mean_reviews)), p.n_products)
        spammy = bool(is_spam[u])
        products = list(rng.choice(p.n_products, size=n_rev, replace=False, p=popularity))
        if spammy:
            for k in range(n_rev):
                if rng.random() < p.targeting:
                    prod = int(rng.choice(pool))
                    if prod not in products:
                        products[k] = prod
        colluding = False
        bias = 1.0
        if spammy and p.n_campaigns and rng.random() < p.collusion:
            colluding = True
            bias = 1.0 - p.camouflage
            c = int(rng.integers(p.n_campaigns))
            target = int(campaigns[c])
            if target in products:
                products.remove(target)
            products = [target] + products[: n_rev - 1]
        if spammy and rng.random() < p.burst_bias * bias:
            start = int(rng.integers(0, p.horizon_days - 7))
            if colluding and rng.random() < p.early_bias:
                start = int(campaign_day[c])
            days = start + rng.integers(0, 4, size=n_rev)
        else:
            start = int(rng.integers(0, p.horizon_days))
            life = int(rng.integers(30, p.horizon_days))
            days = np.minimum(start + rng.integers(0, life, size=n_rev), p.horizon_days - 1)
            if colluding and rng.random() < p.early_bias:
                days[0] = int(campaign_day[c]) + int(rng.integers(0, 7))
        texts: list[str] = []
        flags = []
        for k, prod in enumerate(products):
            stylish = spammy and rng.random() < p.text_bias * bias
            if spammy and texts and rng.random() < p.duplication * bias:
                text = texts[0]
            else:
                text = _text(rng, stylish)
            texts.append(text)
            extreme = spammy and rng.random() < p.extremity_bias * bias
            # an extreme campaign review always promotes
            rating = 5 if (extreme and colluding and k == 0) else _rating(rng, extreme)
            flags.append(spammy and rng.random() < p.filter_rate)
            reviews.append([f"r{rid:07d}", f"u{u:05d}", f"p{int(prod):04d}", rating,
                            START_DATE + dt.timedelta(days=int(days[k])), None, text])
            rid += 1
        if spammy and not any(flags):
            flags[int(rng.integers(len(flags)))] = True
        for k, f in enumerate(flags):
            reviews[len(reviews) - len(flags) + k][5] = bool(f)
    return Dataset.from_reviews(Review(*r) for r in reviews)


@dataclass
class Fig3Result:
    k1_values: list[int]
    k2_values: list[int]
    auc: np.ndarray        # (len(k1), len(k2)), mean over repeats
    auc_runs: np.ndarray   # (repeats, len(k1), len(k2))

    def to_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("k1,k2,auc\n")
            for a, k1 in enumerate(self.k1_values):
                for b, k2 in enumerate(self.k2_values):
                    fh.write(f"{k1},{k2},{float(self.auc[a, b])!r}\n")


def fig3_experiment(ds: Dataset, k1_range, k2_range, epsilon: float = 0.001,
                    lbp_params: LBPParams = LBPParams(), seed: int = 0,
                    n_anchors: int = 1, repeats: int = 1,
                    graph: UserGraph | None = None) -> Fig3Result:
    """AUC of LBP on ground-truth edge potentials after k1/k2 oracle sparsification.

    Every node prior is (0.5, 0.5). Under uniform priors the model is symmetric
    under a global class swap, so ``n_anchors`` randomly chosen users get their
    true label as a clamped prior; they are left out of the AUC.
    """
    g = graph if graph is not None else build_clique_graph(ds)
    labels = ds.label_vector()
    k1_values, k2_values = list(k1_range), list(k2_range)
    runs = np.zeros((repeats, len(k1_values), len(k2_values)))
    for r in range(repeats):
        rng = np.random.default_rng([seed, r])
        anchors = rng.choice(g.n_nodes, size=min(n_anchors, g.n_nodes), replace=False)
        a = np.full(g.n_nodes, 0.5)
        a[anchors] = np.where(labels[anchors] == SPAMMER, 1.0 - epsilon, epsilon)
        test = np.ones(g.n_nodes, dtype=bool)
        test[anchors] = False
        for x, k1 in enumerate(k1_values):
            for y, k2 in enumerate(k2_values):
                sub = oracle_sparsify(g, labels, k1, k2, rng_seed=[seed, r, k1, k2])
                same = labels[sub.edges[:, 0]] == labels[sub.edges[:, 1]]
                p = np.where(same, 1.0 - epsilon, epsilon)
                res = run_lbp(PMRF(sub.edges, a, p), lbp_params)
                runs[r, x, y] = auc(res.spam[test], labels[test])
    return Fig3Result(k1_values, k2_values, runs.mean(axis=0), runs)
