"""Loading and validation of edge lists, tweets, profiles and the leaning table.

File formats
------------
edges
    ``follower<TAB>followee`` per line, UTF-8; lines starting with ``#`` are
    comments.
tweets, profiles
    JSON Lines, one object per line.
leaning table
    ``domain,score`` rows with score in [0, 1]; alias rows ``alias,=,canonical``.
user polarity
    ``user_id,score`` rows (signed score, externally estimated).
"""

from __future__ import annotations

import json
import logging
import math
import re
from collections import defaultdict
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Iterator, Mapping
from urllib.parse import urlsplit

import numpy as np

from echograph.graph_metrics import FollowGraph

log = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0

_SPACE_RE = re.compile(r"\s")
_HOST_RE = re.compile(r"^[a-z0-9](?:[a-z0-9-]*[a-z0-9])?(?:\.[a-z0-9](?:[a-z0-9-]*[a-z0-9])?)+$")


class EchographError(ValueError):
    """Base class for input validation failures."""


class ParseError(EchographError):
    def __init__(self, source: str, line: int, msg: str) -> None:
        super().__init__(f"{source}:{line}: {msg}")
        self.source = source
        self.line = line


class ValidationError(EchographError):
    pass


@dataclass(frozen=True)
class TweetRecord:
    tweet_id: str
    user_id: str
    timestamp: float
    urls: tuple[str, ...] = ()
    text: str = ""
    retweet_count: int = 0
    favorite_count: int = 0

    def __post_init__(self) -> None:
        if not self.user_id:
            raise ValidationError(f"tweet {self.tweet_id!r}: empty user_id")
        if self.retweet_count < 0 or self.favorite_count < 0:
            raise ValidationError(f"tweet {self.tweet_id!r}: negative interaction count")

    def to_json(self) -> dict:
        return {
            "tweet_id": self.tweet_id,
            "user_id": self.user_id,
            "timestamp": self.timestamp,
            "urls": list(self.urls),
            "text": self.text,
            "retweet_count": self.retweet_count,
            "favorite_count": self.favorite_count,
        }


@dataclass(frozen=True)
class UserProfileRecord:
    user_id: str
    followers_count: int
    friends_count: int
    statuses_count: int
    account_created: float

    def __post_init__(self) -> None:
        if not self.user_id:
            raise ValidationError("profile with empty user_id")
        if min(self.followers_count, self.friends_count, self.statuses_count) < 0:
            raise ValidationError(f"profile {self.user_id!r}: negative count")

    def to_json(self) -> dict:
        return {
            "user_id": self.user_id,
            "followers_count": self.followers_count,
            "friends_count": self.friends_count,
            "statuses_count": self.statuses_count,
            "account_created": self.account_created,
        }


@dataclass(frozen=True)
class SourceLeaningTable:
    entries: Mapping[str, float]
    aliases: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for dom, score in self.entries.items():
            if not (0.0 <= score <= 1.0) or math.isnan(score):
                raise ValidationError(f"leaning for {dom!r} outside [0, 1]: {score}")
        for alias, target in self.aliases.items():
            if target not in self.entries:
                raise ValidationError(f"alias {alias!r} points to unknown domain {target!r}")
            if alias in self.entries:
                raise ValidationError(f"alias {alias!r} duplicates a canonical domain")

    def __len__(self) -> int:
        return len(self.entries)

    def lookup(self, domain: str) -> float | None:
        """Leaning of ``domain`` or of its closest listed parent domain."""
        labels = domain.split(".")
        for k in range(len(labels) - 1):
            cand = ".".join(labels[k:])
            cand = self.aliases.get(cand, cand)
            if cand in self.entries:
                return self.entries[cand]
        return None


@dataclass(frozen=True)
class LinkObservation:
    tweet_id: str
    leaning: float


@dataclass(frozen=True)
class Corpus:
    """Tweets grouped by author plus the resolved per-tweet leanings."""

    tweets: Mapping[str, tuple[TweetRecord, ...]]
    observations: Mapping[str, tuple[LinkObservation, ...]]

    @classmethod
    def from_tweets(cls, tweets: Iterable[TweetRecord], table: SourceLeaningTable) -> "Corpus":
        by_user: dict[str, list[TweetRecord]] = defaultdict(list)
        obs: dict[str, list[LinkObservation]] = defaultdict(list)
        for t in tweets:
            by_user[t.user_id].append(t)
            lean = resolve_leaning(t, table)
            if lean is not None:
                obs[t.user_id].append(LinkObservation(t.tweet_id, lean))
        return cls(
            tweets={u: tuple(ts) for u, ts in by_user.items()},
            observations={u: tuple(os_) for u, os_ in obs.items()},
        )

    @property
    def users(self) -> list[str]:
        return sorted(self.tweets)

    def leanings(self, user_id: str) -> list[float]:
        return [o.leaning for o in self.observations.get(user_id, ())]

    def restrict(self, users: Iterable[str]) -> "Corpus":
        keep = set(users)
        return Corpus(
            tweets={u: ts for u, ts in self.tweets.items() if u in keep},
            observations={u: os_ for u, os_ in self.observations.items() if u in keep},
        )

    def latest_timestamp(self) -> float | None:
        stamps = [t.timestamp for ts in self.tweets.values() for t in ts]
        return max(stamps) if stamps else None


@dataclass(frozen=True)
class BotThresholds:
    max_tweets_per_day: float = 100.0
    min_tweets_per_day: float = 0.0
    min_followers: int = 10
    max_followers: int | None = None
    min_friends: int = 10
    max_friends: int | None = None
    min_account_age_days: float = 365.0


@dataclass(frozen=True)
class BotFilterReport:
    retained: frozenset[str]
    removed: Mapping[str, tuple[str, ...]]


# ---------------------------------------------------------------- URLs


def extract_domain(url: str) -> str | None:
    """Lowercased host of ``url`` without a leading ``www.``; None if unparsable."""
    if not isinstance(url, str):
        return None
    raw = url.strip()
    if not raw or _SPACE_RE.search(raw):
        return None
    if "://" not in raw:
        raw = "http://" + raw
    try:
        host = urlsplit(raw).hostname
    except ValueError:
        return None
    if not host:
        return None
    host = host.rstrip(".")
    if host.startswith("www."):
        host = host[4:]
    if not _HOST_RE.match(host):
        return None
    return host


def resolve_leaning(tweet: TweetRecord, table: SourceLeaningTable) -> float | None:
    """Mean leaning over the tweet's URLs that resolve in ``table``."""
    hits = []
    for url in tweet.urls:
        dom = extract_domain(url)
        if dom is None:
            continue
        lean = table.lookup(dom)
        if lean is not None:
            hits.append(lean)
    if not hits:
        return None
    return math.fsum(hits) / len(hits)


# ---------------------------------------------------------------- loaders


def _lines(path: str | Path) -> Iterator[tuple[int, str]]:
    with open(path, encoding="utf-8") as fh:
        for no, line in enumerate(fh, start=1):
            yield no, line.rstrip("\n").rstrip("\r")


def parse_leaning_table(lines: Iterable[str], source: str = "<leaning>") -> SourceLeaningTable:
    entries: dict[str, float] = {}
    aliases: dict[str, str] = {}
    first = True
    for no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        if len(parts) == 3 and parts[1] == "=":
            alias, target = parts[0].lower(), parts[2].lower()
            if not alias or not target:
                raise ParseError(source, no, "empty alias or target")
            if alias in aliases:
                raise ValidationError(f"{source}:{no}: duplicate alias {alias!r}")
            aliases[alias] = target
            continue
        if len(parts) != 2 or not parts[0]:
            raise ParseError(source, no, f"expected 'domain,score', got {line!r}")
        if first and parts[1].lower() == "score":
            first = False
            continue
        first = False
        try:
            score = float(parts[1])
        except ValueError:
            raise ParseError(source, no, f"score is not a number: {parts[1]!r}") from None
        dom = parts[0].lower()
        if not (0.0 <= score <= 1.0):
            raise ValidationError(f"{source}:{no}: leaning for {dom!r} outside [0, 1]: {score}")
        if dom in entries:
            raise ValidationError(f"{source}:{no}: duplicate domain {dom!r}")
        entries[dom] = score
    return SourceLeaningTable(entries, aliases)


def load_leaning_table(path: str | Path) -> SourceLeaningTable:
    with open(path, encoding="utf-8") as fh:
        return parse_leaning_table(fh, source=str(path))


def _json_records(path: str | Path) -> Iterator[tuple[int, dict]]:
    for no, line in _lines(path):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(str(path), no, f"invalid JSON: {exc.msg}") from None
        if not isinstance(rec, dict):
            raise ParseError(str(path), no, "record is not an object")
        yield no, rec


def _count(rec: dict, key: str, source: str, no: int) -> int:
    val = rec.get(key, 0)
    if isinstance(val, bool) or not isinstance(val, (int, float)) or val != int(val):
        raise ParseError(source, no, f"{key} must be an integer")
    return int(val)


def load_tweets(path: str | Path) -> list[TweetRecord]:
    out = []
    src = str(path)
    for no, rec in _json_records(path):
        try:
            urls = rec.get("urls") or []
            if not isinstance(urls, list) or not all(isinstance(x, str) for x in urls):
                raise ParseError(src, no, "urls must be a list of strings")
            out.append(
                TweetRecord(
                    tweet_id=str(rec["tweet_id"]),
                    user_id=str(rec["user_id"]),
                    timestamp=float(rec["timestamp"]),
                    urls=tuple(urls),
                    text=str(rec.get("text", "")),
                    retweet_count=_count(rec, "retweet_count", src, no),
                    favorite_count=_count(rec, "favorite_count", src, no),
                )
            )
        except KeyError as exc:
            raise ParseError(src, no, f"missing field {exc.args[0]!r}") from None
        except ParseError:
            raise
        except (TypeError, ValueError) as exc:
            raise ParseError(src, no, str(exc)) from None
    return out


def load_profiles(path: str | Path) -> list[UserProfileRecord]:
    out = []
    src = str(path)
    for no, rec in _json_records(path):
        try:
            out.append(
                UserProfileRecord(
                    user_id=str(rec["user_id"]),
                    followers_count=_count(rec, "followers_count", src, no),
                    friends_count=_count(rec, "friends_count", src, no),
                    statuses_count=_count(rec, "statuses_count", src, no),
                    account_created=float(rec["account_created"]),
                )
            )
        except KeyError as exc:
            raise ParseError(src, no, f"missing field {exc.args[0]!r}") from None
        except ParseError:
            raise
        except (TypeError, ValueError) as exc:
            raise ParseError(src, no, str(exc)) from None
    return out


def load_user_polarity(path: str | Path) -> dict[str, float]:
    scores: dict[str, float] = {}
    first = True
    for no, line in _lines(path):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ParseError(str(path), no, "expected 'user_id,score'")
        if first and parts[1].strip().lower() == "score":
            first = False
            continue
        first = False
        try:
            scores[parts[0].strip()] = float(parts[1])
        except ValueError:
            raise ParseError(str(path), no, f"score is not a number: {parts[1]!r}") from None
    return scores


def parse_edges(lines: Iterable[str], source: str = "<edges>") -> Iterator[tuple[str, str]]:
    for no, line in enumerate(lines, start=1):
        line = line.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].strip():
            raise ParseError(source, no, f"expected 'follower<TAB>followee', got {line!r}")
        yield parts[0].strip(), parts[1].strip()


def build_graph(edges: Iterable[tuple[str, str]] | Iterable[str], nodes: Iterable[str] = ()) -> FollowGraph:
    """Follow graph from (follower, followee) pairs or raw edge-list lines.

    Node ids are indexed in sorted order so that rebuilding from the emitted
    canonical edge list reproduces the same graph.
    """
    edges = list(edges)
    if edges and isinstance(edges[0], str):
        edges = list(parse_edges(edges))
    # a self-loop is discarded whole, endpoint included: a node seen only in a
    # loop would not survive a rebuild from the emitted edge list
    n_loops = sum(1 for u, v in edges if u == v)
    edges = [(u, v) for u, v in edges if u != v]
    ids = sorted(set(nodes).union(*(set(e) for e in edges)))
    index = {u: i for i, u in enumerate(ids)}
    src = np.fromiter((index[u] for u, _ in edges), dtype=np.int64, count=len(edges))
    dst = np.fromiter((index[v] for _, v in edges), dtype=np.int64, count=len(edges))
    g = replace(FollowGraph.from_index_pairs(ids, src, dst), self_loops_dropped=n_loops)
    if g.self_loops_dropped:
        log.warning("dropped %d self-loop edge(s)", g.self_loops_dropped)
    return g


def load_graph(path: str | Path, nodes: Iterable[str] = ()) -> FollowGraph:
    with open(path, encoding="utf-8") as fh:
        return build_graph(list(parse_edges(fh, source=str(path))), nodes)


# ---------------------------------------------------------------- filters


def filter_bots(
    profiles: Iterable[UserProfileRecord],
    corpus: Corpus | None,
    thresholds: BotThresholds = BotThresholds(),
    reference_time: float | None = None,
) -> BotFilterReport:
    """Drop accounts outside the activity/popularity/age thresholds.

    Account age and tweets-per-day are measured at ``reference_time``, which
    defaults to the newest tweet in ``corpus`` (the collection time).
    """
    profiles = list(profiles)
    if reference_time is None and corpus is not None:
        reference_time = corpus.latest_timestamp()
    if reference_time is None:
        reference_time = max((p.account_created for p in profiles), default=0.0)
    th = thresholds
    retained = set()
    removed: dict[str, tuple[str, ...]] = {}
    for p in profiles:
        age_days = (reference_time - p.account_created) / SECONDS_PER_DAY
        per_day = p.statuses_count / max(age_days, 1.0)
        reasons = []
        if age_days < th.min_account_age_days:
            reasons.append("account_age")
        if per_day > th.max_tweets_per_day:
            reasons.append("tweets_per_day_high")
        if per_day < th.min_tweets_per_day:
            reasons.append("tweets_per_day_low")
        if p.followers_count < th.min_followers:
            reasons.append("followers_low")
        if th.max_followers is not None and p.followers_count > th.max_followers:
            reasons.append("followers_high")
        if p.friends_count < th.min_friends:
            reasons.append("friends_low")
        if th.max_friends is not None and p.friends_count > th.max_friends:
            reasons.append("friends_high")
        if reasons:
            removed[p.user_id] = tuple(reasons)
        else:
            retained.add(p.user_id)
    return BotFilterReport(frozenset(retained - removed.keys()), dict(sorted(removed.items())))


def active_users(corpus: Corpus, min_tweets: int) -> set[str]:
    return {u for u, ts in corpus.tweets.items() if len(ts) >= min_tweets}


# ---------------------------------------------------------------- writers


def write_edges(g: FollowGraph, path: str | Path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(header)
        for u, v in g.edges():
            fh.write(f"{u}\t{v}\n")


def write_jsonl(records: Iterable[dict], path: str | Path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(header)
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True))
            fh.write("\n")


def write_leaning_table(table: SourceLeaningTable, path: str | Path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(header)
        for dom in sorted(table.entries):
            fh.write(f"{dom},{table.entries[dom]!r}\n")
        for alias in sorted(table.aliases):
            fh.write(f"{alias},=,{table.aliases[alias]}\n")
