from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_graph
from echograph import polarity as pol
from echograph.graph_metrics import FollowGraph
from echograph.ingest import Corpus, SourceLeaningTable, TweetRecord
from echograph.polarity import PolaritySummary, UserContentProfile

leanings = st.floats(0.0, 1.0, allow_nan=False)
deltas = st.floats(0.001, 0.5, allow_nan=False)


def prof(produced=(), consumed=()) -> UserContentProfile:
    return UserContentProfile("u", tuple(produced), tuple(consumed))


def corpus_from(produced: dict[str, list[float]]) -> Corpus:
    """One link tweet per leaning, each to its own single-entry domain."""
    entries, tweets = {}, []
    for u, xs in produced.items():
        for k, x in enumerate(xs):
            dom = f"d{len(entries)}.com"
            entries[dom] = x
            tweets.append(TweetRecord(f"{u}-{k}", u, 0.0, (f"http://{dom}/",)))
    return Corpus.from_tweets(tweets, SourceLeaningTable(entries))


# ---------------------------------------------------------------- polarity values


def test_production_examples():
    assert pol.production_polarity(prof([0.9, 0.9, 0.9])) == 0.9
    assert pol.production_polarity(prof([])) is None
    assert pol.production_polarity(prof([0.2, 0.4, 0.9])) == pytest.approx(0.5, abs=1e-15)


def test_production_variance_examples():
    assert pol.production_variance(prof([0.5, 0.5])) == 0.0
    assert pol.production_variance(prof([0.0, 1.0])) == 0.25
    # mean 0.5; squared deviations 0.09, 0.01, 0.16
    assert pol.production_variance(prof([0.2, 0.4, 0.9])) == pytest.approx(0.26 / 3, abs=1e-15)


def test_min_observations():
    assert pol.production_polarity(prof([0.1, 0.2]), min_observations=3) is None
    assert pol.production_polarity(prof([0.1, 0.2, 0.3]), min_observations=3) == pytest.approx(0.2)


def test_consumption_pooling():
    g = FollowGraph.from_edges([("u", "v"), ("u", "w"), ("x", "y")])
    c = corpus_from({"v": [0.2], "w": [0.4, 0.6], "u": [0.9]})
    assert sorted(pol.consumption_observations("u", g, c)) == [0.2, 0.4, 0.6]
    assert pol.consumption_observations("v", g, c) == []
    assert pol.consumption_observations("x", g, c) == []


def test_consumption_examples():
    assert pol.consumption_polarity(prof(consumed=[0.2, 0.4, 0.6])) == pytest.approx(0.4)
    assert pol.consumption_polarity(prof(consumed=[])) is None
    assert pol.consumption_polarity(prof(consumed=[0.1, 0.9])) == pytest.approx(0.5)
    assert pol.consumption_variance(prof(consumed=[0.1, 0.9])) == pytest.approx(0.16)


# ---------------------------------------------------------------- labels


@pytest.mark.parametrize(
    "p,d,expected",
    [(0.1, 0.2, pol.LEFT_PARTISAN), (0.8, 0.2, pol.RIGHT_PARTISAN), (0.5, 0.45, pol.BIPARTISAN)],
)
def test_classify_partisan(p, d, expected):
    assert pol.classify_partisan(p, d) == expected


@pytest.mark.parametrize(
    "c,d,expected",
    [(0.15, 0.2, pol.LEFT_CONSUMER), (0.3, 0.2, pol.NON_CONSUMER), (0.5, 0.5, pol.LEFT_CONSUMER)],
)
def test_classify_consumer(c, d, expected):
    assert pol.classify_consumer(c, d) == expected


@pytest.mark.parametrize("p,c,d,expected", [(0.1, 0.3, 0.1, True), (0.1, 0.15, 0.2, False), (0.5, 0.5, 0.2, False)])
def test_classify_gatekeeper(p, c, d, expected):
    assert pol.classify_gatekeeper(p, c, d) is expected


def test_gatekeeper_undefined_without_c():
    assert pol.classify_gatekeeper(0.1, None, 0.3) is None
    lab = pol.label(PolaritySummary("u", 0.1, None, 0.0, None, 1, 0), 0.3)
    assert lab.partisan == pol.LEFT_PARTISAN and lab.consumer is None and lab.gatekeeper is None


def test_label_undefined_without_p():
    assert pol.label(PolaritySummary("u", None, 0.5, None, 0.0, 0, 2), 0.3) is None


@pytest.mark.parametrize("bad", [0.0, -0.1, 0.51])
def test_delta_range(bad):
    with pytest.raises(ValueError):
        pol.classify_partisan(0.1, bad)


# ---------------------------------------------------------------- interactions


@pytest.mark.parametrize("counts,rate,volume", [([0, 0, 3, 5], 0.5, 1.5), ([1, 1, 1], 1.0, 1.0), ([0], 0.0, 0.0)])
def test_interaction_metrics(counts, rate, volume):
    ts = [TweetRecord(str(i), "u", 0.0, retweet_count=n, favorite_count=n) for i, n in enumerate(counts)]
    s = pol.interaction_metrics(ts)
    assert (s.retweet_rate, s.retweet_volume) == (rate, volume)
    assert (s.favorite_rate, s.favorite_volume) == (rate, volume)


def test_interaction_metrics_empty():
    assert pol.interaction_metrics([]) is None


# ---------------------------------------------------------------- summarize


@pytest.mark.parametrize("seed", range(5))
def test_summarize_matches_direct_pooling(seed):
    g = random_graph(seed, 60, 0.1)
    rng = np.random.default_rng(seed)
    produced = {u: list(rng.random(int(rng.integers(0, 4)))) for u in g.ids}
    c = corpus_from(produced)
    summ = pol.summarize(g, c)
    for u in g.ids:
        p = pol.content_profile(u, g, c)
        s = summ[u]
        for got, want in [
            (s.p, pol.production_polarity(p)),
            (s.var_p, pol.production_variance(p)),
            (s.c, pol.consumption_polarity(p)),
            (s.var_c, pol.consumption_variance(p)),
        ]:
            if want is None:
                assert got is None
            else:
                assert got == pytest.approx(want, abs=1e-12)


def test_summary_rows_format():
    g = FollowGraph.from_edges([("a", "b")])
    summ = pol.summarize(g, corpus_from({"a": [0.1], "b": [0.6]}), user_polarity={"a": -1.0})
    rows = list(pol.summary_rows(summ, 0.3))
    assert rows[0][:3] == ["a", "0.1", "0.6"]
    assert rows[0][-3:] == [pol.LEFT_PARTISAN, pol.NON_CONSUMER, "true"]
    assert rows[1][2] == "" and rows[1][-1] == ""
    assert summ["a"].user_polarity == -1.0


# ---------------------------------------------------------------- properties


@settings(max_examples=300, deadline=None)
@given(leanings, deltas, deltas)
def test_partisan_monotone_in_delta(p, d1, d2):
    lo, hi = sorted((d1, d2))
    if pol.classify_partisan(p, lo) != pol.BIPARTISAN:
        assert pol.classify_partisan(p, hi) != pol.BIPARTISAN


@settings(max_examples=300, deadline=None)
@given(leanings, leanings, deltas)
def test_gatekeeper_is_partisan_minus_consumer(p, c, d):
    partisan = pol.classify_partisan(p, d) != pol.BIPARTISAN
    consumer = pol.classify_consumer(c, d) != pol.NON_CONSUMER
    assert pol.classify_gatekeeper(p, c, d) == (partisan and not consumer)


@settings(max_examples=300, deadline=None)
@given(st.lists(leanings, min_size=1, max_size=20), st.lists(leanings, min_size=1, max_size=20), deltas)
def test_mirror_symmetry(prod, cons, d):
    a = prof(prod, cons)
    b = prof([1.0 - x for x in prod], [1.0 - x for x in cons])
    pa, pb = pol.production_polarity(a), pol.production_polarity(b)
    ca, cb = pol.consumption_polarity(a), pol.consumption_polarity(b)
    assert pa + pb == pytest.approx(1.0, abs=1e-12)
    assert pol.production_variance(a) == pytest.approx(pol.production_variance(b), abs=1e-12)
    assert pol.consumption_variance(a) == pytest.approx(pol.consumption_variance(b), abs=1e-12)
    # labels compared away from the threshold, where rounding could flip them
    if abs(min(pa, 1 - pa) - d) > 1e-9 and abs(min(ca, 1 - ca) - d) > 1e-9:
        swap = {pol.LEFT_PARTISAN: pol.RIGHT_PARTISAN, pol.RIGHT_PARTISAN: pol.LEFT_PARTISAN, pol.BIPARTISAN: pol.BIPARTISAN}
        assert pol.classify_partisan(pb, d) == swap[pol.classify_partisan(pa, d)]
        assert pol.classify_gatekeeper(pa, ca, d) == pol.classify_gatekeeper(pb, cb, d)


@settings(max_examples=200, deadline=None)
@given(st.lists(leanings, min_size=1, max_size=30), st.randoms(use_true_random=False))
def test_polarity_order_invariant_and_bounded(xs, rnd):
    ys = list(xs)
    rnd.shuffle(ys)
    assert pol.production_polarity(prof(xs)) == pol.production_polarity(prof(ys))
    v = pol.production_variance(prof(xs))
    assert v == pytest.approx(pol.production_variance(prof(ys)), abs=1e-15)
    assert 0.0 <= v <= 0.25 + 1e-15
    assert not math.isnan(v)
