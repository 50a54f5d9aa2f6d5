"""Production/consumption polarity, role labels and interaction metrics.

A user's production polarity is the mean leaning of the news-linking tweets
they post; consumption polarity is the mean leaning over the pooled
news-linking tweets of everyone they follow. Roles at threshold ``delta``:

* partisan:   min(p, 1 - p) <= delta
* consumer:   min(c, 1 - c) <= delta
* gatekeeper: partisan and not consumer
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from echograph.graph_metrics import FollowGraph
from echograph.ingest import Corpus, TweetRecord

LEFT_PARTISAN = "left-partisan"
RIGHT_PARTISAN = "right-partisan"
BIPARTISAN = "bipartisan"
LEFT_CONSUMER = "left-consumer"
RIGHT_CONSUMER = "right-consumer"
NON_CONSUMER = "non-consumer"


@dataclass(frozen=True)
class UserContentProfile:
    user_id: str
    produced: tuple[float, ...]
    consumed: tuple[float, ...] = ()
    total_tweets: int = 0
    retweet_counts: tuple[int, ...] = ()
    favorite_counts: tuple[int, ...] = ()


@dataclass(frozen=True)
class PolaritySummary:
    user_id: str
    p: float | None
    c: float | None
    var_p: float | None
    var_c: float | None
    n_produced: int
    n_consumed: int
    user_polarity: float | None = None


@dataclass(frozen=True)
class RoleLabel:
    delta: float
    partisan: str
    consumer: str | None
    gatekeeper: bool | None

    @property
    def is_partisan(self) -> bool:
        return self.partisan != BIPARTISAN

    @property
    def is_consumer(self) -> bool | None:
        return None if self.consumer is None else self.consumer != NON_CONSUMER


@dataclass(frozen=True)
class InteractionSummary:
    retweet_rate: float
    favorite_rate: float
    retweet_volume: float
    favorite_volume: float


def _mean(xs: Sequence[float], min_observations: int) -> float | None:
    if len(xs) < max(min_observations, 1):
        return None
    return math.fsum(xs) / len(xs)


def _pvariance(xs: Sequence[float], min_observations: int) -> float | None:
    if len(xs) < max(min_observations, 1):
        return None
    m = math.fsum(xs) / len(xs)
    return math.fsum((x - m) ** 2 for x in xs) / len(xs)


def production_polarity(profile: UserContentProfile, min_observations: int = 1) -> float | None:
    return _mean(profile.produced, min_observations)


def production_variance(profile: UserContentProfile, min_observations: int = 1) -> float | None:
    """Population variance (divide by n) of the produced leanings."""
    return _pvariance(profile.produced, min_observations)


def consumption_polarity(profile: UserContentProfile, min_observations: int = 1) -> float | None:
    return _mean(profile.consumed, min_observations)


def consumption_variance(profile: UserContentProfile, min_observations: int = 1) -> float | None:
    return _pvariance(profile.consumed, min_observations)


def consumption_observations(user_id: str, g: FollowGraph, corpus: Corpus) -> list[float]:
    """Pooled leanings of every followee's link tweets; the user's own are excluded."""
    i = g.index_of(user_id)
    out: list[float] = []
    for j in g.followees(i):
        out.extend(corpus.leanings(g.ids[j]))
    return out


def content_profile(user_id: str, g: FollowGraph, corpus: Corpus) -> UserContentProfile:
    tweets = corpus.tweets.get(user_id, ())
    return UserContentProfile(
        user_id=user_id,
        produced=tuple(corpus.leanings(user_id)),
        consumed=tuple(consumption_observations(user_id, g, corpus)) if user_id in g else (),
        total_tweets=len(tweets),
        retweet_counts=tuple(t.retweet_count for t in tweets),
        favorite_counts=tuple(t.favorite_count for t in tweets),
    )


def _check_delta(delta: float) -> None:
    if not (0.0 < delta <= 0.5):
        raise ValueError(f"delta must lie in (0, 0.5], got {delta}")


def classify_partisan(p: float, delta: float) -> str:
    _check_delta(delta)
    if p <= delta:
        return LEFT_PARTISAN
    if 1.0 - p <= delta:
        return RIGHT_PARTISAN
    return BIPARTISAN


def classify_consumer(c: float, delta: float) -> str:
    _check_delta(delta)
    if c <= delta:
        return LEFT_CONSUMER
    if 1.0 - c <= delta:
        return RIGHT_CONSUMER
    return NON_CONSUMER


def classify_gatekeeper(p: float | None, c: float | None, delta: float) -> bool | None:
    """True iff partisan and not consumer; None when either polarity is undefined."""
    _check_delta(delta)
    if p is None or c is None:
        return None
    return min(p, 1.0 - p) <= delta and min(c, 1.0 - c) > delta


def label(summary: PolaritySummary, delta: float) -> RoleLabel | None:
    """Role label, or None if production polarity is undefined."""
    if summary.p is None:
        return None
    partisan = classify_partisan(summary.p, delta)
    consumer = None if summary.c is None else classify_consumer(summary.c, delta)
    return RoleLabel(delta, partisan, consumer, classify_gatekeeper(summary.p, summary.c, delta))


def label_all(summaries: Mapping[str, PolaritySummary], delta: float) -> dict[str, RoleLabel]:
    out = {}
    for u, s in summaries.items():
        lab = label(s, delta)
        if lab is not None:
            out[u] = lab
    return out


def _median(xs: Sequence[int]) -> float:
    return float(statistics.median(xs))


def interaction_metrics(tweets: Sequence[TweetRecord]) -> InteractionSummary | None:
    if not tweets:
        return None
    rts = [t.retweet_count for t in tweets]
    favs = [t.favorite_count for t in tweets]
    n = len(tweets)
    return InteractionSummary(
        retweet_rate=sum(1 for x in rts if x >= 1) / n,
        favorite_rate=sum(1 for x in favs if x >= 1) / n,
        retweet_volume=_median(rts),
        favorite_volume=_median(favs),
    )


def _moments(g: FollowGraph, corpus: Corpus) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    n = g.node_count
    cnt = np.zeros(n)
    s1 = np.zeros(n)
    s2 = np.zeros(n)
    for i, u in enumerate(g.ids):
        xs = corpus.leanings(u)
        if xs:
            arr = np.asarray(xs)
            cnt[i] = arr.size
            s1[i] = math.fsum(xs)
            s2[i] = math.fsum(arr * arr)
    return cnt, s1, s2


def summarize(
    g: FollowGraph,
    corpus: Corpus,
    min_observations: int = 1,
    user_polarity: Mapping[str, float] | None = None,
    users: Iterable[str] | None = None,
) -> dict[str, PolaritySummary]:
    """Polarity summaries for every graph node (or the given subset).

    Consumption moments are pooled over followees with one sparse product,
    which is equivalent to concatenating their observation lists.
    """
    user_polarity = user_polarity or {}
    cnt, s1, s2 = _moments(g, corpus)
    a = g.adjacency()
    c_cnt = a @ cnt
    c_s1 = a @ s1
    c_s2 = a @ s2
    k = max(min_observations, 1)

    out: dict[str, PolaritySummary] = {}
    wanted = g.ids if users is None else [u for u in users if u in g]
    for u in wanted:
        i = g.index_of(u)
        produced = corpus.leanings(u)
        p = _mean(produced, k)
        var_p = _pvariance(produced, k)
        n_c = int(c_cnt[i])
        if n_c >= k:
            c = float(c_s1[i] / n_c)
            var_c = float(max(c_s2[i] / n_c - c * c, 0.0))
            c = min(max(c, 0.0), 1.0)
        else:
            c = var_c = None
        out[u] = PolaritySummary(
            user_id=u,
            p=p,
            c=c,
            var_p=var_p,
            var_c=var_c,
            n_produced=len(produced),
            n_consumed=n_c,
            user_polarity=user_polarity.get(u),
        )
    return out


def summary_rows(summaries: Mapping[str, PolaritySummary], delta: float) -> Iterable[list[str]]:
    """Rows for ``user_id,p,c,var_p,var_c,n_produced,n_consumed,partisan,consumer,gatekeeper``."""

    def fmt(x: float | None) -> str:
        return "" if x is None else repr(float(x))

    for u in sorted(summaries):
        s = summaries[u]
        lab = label(s, delta)
        yield [
            u,
            fmt(s.p),
            fmt(s.c),
            fmt(s.var_p),
            fmt(s.var_c),
            str(s.n_produced),
            str(s.n_consumed),
            "" if lab is None else lab.partisan,
            "" if lab is None or lab.consumer is None else lab.consumer,
            "" if lab is None or lab.gatekeeper is None else str(lab.gatekeeper).lower(),
        ]


SUMMARY_HEADER = ["user_id", "p", "c", "var_p", "var_c", "n_produced", "n_consumed", "partisan", "consumer", "gatekeeper"]


def interaction_table(corpus: Corpus, users: Iterable[str]) -> dict[str, InteractionSummary]:
    out = {}
    for u in users:
        summ = interaction_metrics(corpus.tweets.get(u, ()))
        if summ is not None:
            out[u] = summ
    return out

