"""Seeded generator of polarized follow graphs with news-linking content.

Randomness
----------
All draws use numpy's PCG64 generator. Streams are derived from the run seed
with :class:`numpy.random.SeedSequence` spawn keys, so every user's draws are
independent of how many other users exist and of evaluation order:

* ``(0,)``    global stream: gatekeeper selection
* ``(1, i)``  user ``i``: leaning, follow row, tweets, profile, then text
* ``(2, i)``  user ``i``: external user-polarity score

Within a user stream the draw order is fixed as listed, and text is drawn
last so that generating without text leaves every other output unchanged.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Mapping, NamedTuple

import numpy as np
from scipy.stats import beta as beta_dist

from echograph.graph_metrics import FollowGraph
from echograph.ingest import (
    SECONDS_PER_DAY,
    Corpus,
    SourceLeaningTable,
    TweetRecord,
    UserProfileRecord,
    write_edges,
    write_jsonl,
    write_leaning_table,
)
from echograph.polarity import RoleLabel

LEFT, RIGHT = "left", "right"
LEFT_BETA = (2.0, 8.0)
START_TIME = 1_467_331_200.0  # 2016-07-01T00:00:00Z
WINDOW_DAYS = 7.0


@dataclass(frozen=True)
class SynthConfig:
    n_left: int = 500
    n_right: int = 500
    p_in: float = 0.02
    p_out: float = 0.002
    tweets_per_user: float = 20.0
    link_fraction: float = 0.5
    leaning_noise: float = 0.05
    gatekeeper_fraction: float = 0.0
    gatekeeper_leaning: float = 0.1
    n_domains: int = 25
    alias_fraction: float = 0.2
    tokens_per_tweet: int = 8
    token_pool: int = 40
    text_overlap: float = 0.25
    text: bool = True
    seed: int = 0

    def validate(self) -> None:
        for name in ("p_in", "p_out", "link_fraction", "gatekeeper_fraction", "alias_fraction", "text_overlap"):
            val = getattr(self, name)
            if not (0.0 <= val <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {val}")
        if not (0.0 <= self.gatekeeper_leaning <= 0.5):
            raise ValueError("gatekeeper_leaning must lie in [0, 0.5]")
        for name in ("n_left", "n_right", "tokens_per_tweet", "token_pool"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")
        if self.n_domains < 1:
            raise ValueError("n_domains must be at least 1")
        if self.tweets_per_user < 0 or self.leaning_noise < 0:
            raise ValueError("tweets_per_user and leaning_noise must be non-negative")
        if not (0 <= self.seed < 2**64):
            raise ValueError("seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class GroundTruth:
    leaning: Mapping[str, float]
    side: Mapping[str, str]
    planted_gatekeeper: Mapping[str, bool]
    table: SourceLeaningTable
    user_polarity: Mapping[str, float]

    @property
    def gatekeepers(self) -> set[str]:
        return {u for u, g in self.planted_gatekeeper.items() if g}


class SynthData(NamedTuple):
    graph: FollowGraph
    corpus: Corpus
    profiles: list[UserProfileRecord]
    truth: GroundTruth


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def synthetic_domains(n_per_side: int) -> tuple[list[str], np.ndarray, dict[str, str]]:
    """Domain names, their leanings, and short aliases.

    Left outlets sit at evenly spaced quantiles of the left audience
    distribution Beta(2, 8); right outlets mirror them. Outlets are therefore
    dense where audiences are and sparse near the centre.
    """
    q = (np.arange(n_per_side) + 0.5) / n_per_side
    left = beta_dist.ppf(q, *LEFT_BETA)
    names = [f"left-news{i:02d}.com" for i in range(n_per_side)]
    names += [f"right-news{i:02d}.com" for i in range(n_per_side)]
    leanings = np.concatenate([left, 1.0 - left])
    aliases = {f"ln{i:02d}.ws": f"left-news{i:02d}.com" for i in range(n_per_side)}
    aliases.update({f"rn{i:02d}.ws": f"right-news{i:02d}.com" for i in range(n_per_side)})
    return names, leanings, aliases


def _vocabulary(cfg: SynthConfig) -> tuple[list[str], list[str], list[str]]:
    n_shared = int(round(cfg.token_pool * cfg.text_overlap))
    n_own = cfg.token_pool - n_shared
    shared = [f"both{i:03d}" for i in range(n_shared)]
    left = [f"lefty{i:03d}" for i in range(n_own)] + shared
    right = [f"righty{i:03d}" for i in range(n_own)] + shared
    neutral = [f"word{i:03d}" for i in range(cfg.token_pool)]
    return left, right, neutral


def _nearest_index(sorted_values: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Index of the nearest sorted value; ties go to the lower one."""
    pos = np.searchsorted(sorted_values, x)
    hi = np.minimum(pos, sorted_values.size - 1)
    lo = np.maximum(pos - 1, 0)
    take_lo = (pos == sorted_values.size) | ((pos > 0) & (x - sorted_values[lo] <= sorted_values[hi] - x))
    return np.where(take_lo, lo, hi)


def generate(cfg: SynthConfig) -> SynthData:
    cfg.validate()
    n = cfg.n_left + cfg.n_right
    width = max(5, len(str(max(n - 1, 0))))
    ids = [f"u{i:0{width}d}" for i in range(n)]
    side_right = np.zeros(n, dtype=bool)
    side_right[cfg.n_left :] = True

    names, dom_lean, aliases = synthetic_domains(cfg.n_domains)
    order = np.argsort(dom_lean, kind="stable")
    sorted_lean = dom_lean[order]
    table = SourceLeaningTable(dict(zip(names, (float(x) for x in dom_lean))), aliases)
    alias_of = {v: k for k, v in aliases.items()}

    g_rng = _stream(cfg.seed, 0)
    planted = np.zeros(n, dtype=bool)
    for lo, size in ((0, cfg.n_left), (cfg.n_left, cfg.n_right)):
        k = int(round(cfg.gatekeeper_fraction * size))
        if k:
            planted[lo + g_rng.choice(size, size=k, replace=False)] = True

    left_vocab, right_vocab, neutral_vocab = _vocabulary(cfg)
    p_same = np.where(side_right, cfg.p_in, cfg.p_out)  # row template for a right user
    p_left_row = np.where(side_right, cfg.p_out, cfg.p_in)

    lam = np.zeros(n)
    src_parts: list[np.ndarray] = []
    dst_parts: list[np.ndarray] = []
    tweets: list[TweetRecord] = []
    n_tweets = np.zeros(n, dtype=np.int64)
    profile_draws = []
    polarity: dict[str, float] = {}

    for i in range(n):
        rng = _stream(cfg.seed, 1, i)
        right = bool(side_right[i])
        a, b = LEFT_BETA[::-1] if right else LEFT_BETA
        lam_i = float(rng.beta(a, b))
        if planted[i]:
            lam_i = 1.0 - cfg.gatekeeper_leaning if right else cfg.gatekeeper_leaning
        lam[i] = lam_i

        probs = np.full(n, cfg.p_in) if planted[i] else (p_same if right else p_left_row)
        row = rng.random(n) < probs
        row[i] = False
        dst = np.flatnonzero(row)
        src_parts.append(np.full(dst.size, i, dtype=np.int64))
        dst_parts.append(dst)

        k = int(rng.poisson(cfg.tweets_per_user))
        n_tweets[i] = k
        stamps = np.sort(START_TIME + rng.random(k) * WINDOW_DAYS * SECONDS_PER_DAY)
        has_link = rng.random(k) < cfg.link_fraction
        target = np.clip(lam_i + cfg.leaning_noise * rng.standard_normal(k), 0.0, 1.0)
        use_alias = rng.random(k) < cfg.alias_fraction
        extremity = abs(2.0 * lam_i - 1.0)
        rt = rng.poisson(0.5 + extremity, size=k)
        fav = rng.poisson(1.0 + extremity, size=k)
        age_days = int(rng.integers(400, 3000))
        profile_draws.append((age_days, int(rng.poisson(30)), int(rng.poisson(30)), int(rng.poisson(3.0 * age_days))))

        texts = [""] * k
        if cfg.text and cfg.tokens_per_tweet and cfg.token_pool:
            own = right_vocab if right else left_vocab
            m = cfg.tokens_per_tweet
            from_side = rng.random((k, m)) < extremity
            side_pick = rng.integers(0, len(own), size=(k, m)) if own else np.zeros((k, m), dtype=int)
            neutral_pick = rng.integers(0, len(neutral_vocab), size=(k, m))
            texts = [
                " ".join(own[side_pick[t, j]] if from_side[t, j] else neutral_vocab[neutral_pick[t, j]] for j in range(m))
                for t in range(k)
            ]

        nearest = order[_nearest_index(sorted_lean, target)]
        uid = ids[i]
        for t in range(k):
            tid = f"{uid}-{t:04d}"
            urls: tuple[str, ...] = ()
            if has_link[t]:
                dom = names[nearest[t]]
                if use_alias[t]:
                    urls = (f"http://{alias_of[dom]}/{tid}",)
                else:
                    urls = (f"https://www.{dom}/story/{tid}",)
            tweets.append(
                TweetRecord(
                    tweet_id=tid,
                    user_id=uid,
                    timestamp=float(stamps[t]),
                    urls=urls,
                    text=texts[t],
                    retweet_count=int(rt[t]),
                    favorite_count=int(fav[t]),
                )
            )

        p_rng = _stream(cfg.seed, 2, i)
        polarity[uid] = float(2.0 * (2.0 * lam_i - 1.0) + 0.25 * p_rng.standard_normal())

    src = np.concatenate(src_parts) if src_parts else np.zeros(0, dtype=np.int64)
    dst = np.concatenate(dst_parts) if dst_parts else np.zeros(0, dtype=np.int64)
    graph = FollowGraph.from_index_pairs(ids, src, dst)
    corpus = Corpus.from_tweets(tweets, table)

    end = START_TIME + WINDOW_DAYS * SECONDS_PER_DAY
    in_deg = np.diff(graph.in_offsets)
    out_deg = np.diff(graph.out_offsets)
    profiles = []
    for i, uid in enumerate(ids):
        age_days, extra_fol, extra_fri, statuses = profile_draws[i]
        profiles.append(
            UserProfileRecord(
                user_id=uid,
                followers_count=int(in_deg[i] + extra_fol),
                friends_count=int(out_deg[i] + extra_fri),
                statuses_count=int(n_tweets[i]) + statuses,
                account_created=float(end - age_days * SECONDS_PER_DAY),
            )
        )

    truth = GroundTruth(
        leaning=dict(zip(ids, lam.tolist())),
        side={u: (RIGHT if side_right[i] else LEFT) for i, u in enumerate(ids)},
        planted_gatekeeper={u: bool(planted[i]) for i, u in enumerate(ids)},
        table=table,
        user_polarity=polarity,
    )
    return SynthData(graph, corpus, profiles, truth)


# ---------------------------------------------------------------- evaluation


@dataclass(frozen=True)
class PlantReport:
    delta: float
    precision: float
    recall: float
    n_planted: int
    n_detected: int
    n_true_positive: int
    empty_convention: bool


def plant_report(truth: GroundTruth, labels: Mapping[str, RoleLabel], delta: float) -> PlantReport:
    """Precision/recall of detected gatekeepers against the planted ones.

    An empty planted set and an empty detected set give precision = recall = 1
    with ``empty_convention`` set. Users without a label count as undetected.
    """
    for u, lab in labels.items():
        if not math.isclose(lab.delta, delta, abs_tol=1e-12):
            raise ValueError(f"label for {u!r} was computed at delta={lab.delta}, expected {delta}")
    planted = truth.gatekeepers
    detected = {u for u, lab in labels.items() if lab.gatekeeper}
    tp = len(planted & detected)
    empty = False
    if detected:
        precision = tp / len(detected)
    else:
        precision, empty = 1.0, True
    if planted:
        recall = tp / len(planted)
    else:
        recall, empty = 1.0, True
    return PlantReport(delta, precision, recall, len(planted), len(detected), tp, empty)


# ---------------------------------------------------------------- files

EDGES_FILE = "edges.tsv"
TWEETS_FILE = "tweets.jsonl"
PROFILES_FILE = "profiles.jsonl"
LEANING_FILE = "leaning.csv"
TRUTH_FILE = "truth.csv"
POLARITY_FILE = "user_polarity.csv"
CONFIG_FILE = "synth.cfg"


def write_dataset(data: SynthData, cfg: SynthConfig, out_dir: str | Path, header: str = "") -> dict[str, Path]:
    """Write the dataset in the formats :mod:`echograph.ingest` reads."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {
        "edges": out / EDGES_FILE,
        "tweets": out / TWEETS_FILE,
        "profiles": out / PROFILES_FILE,
        "leaning_table": out / LEANING_FILE,
        "truth": out / TRUTH_FILE,
        "user_polarity": out / POLARITY_FILE,
        "config": out / CONFIG_FILE,
    }
    write_edges(data.graph, paths["edges"], header)
    all_tweets = (t.to_json() for u in sorted(data.corpus.tweets) for t in data.corpus.tweets[u])
    write_jsonl(all_tweets, paths["tweets"], header)
    write_jsonl((p.to_json() for p in data.profiles), paths["profiles"], header)
    write_leaning_table(data.truth.table, paths["leaning_table"], header)
    truth = data.truth
    with open(paths["truth"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header)
        fh.write("user_id,lambda,side,planted_gatekeeper\n")
        for u in data.graph.ids:
            fh.write(f"{u},{truth.leaning[u]!r},{truth.side[u]},{str(truth.planted_gatekeeper[u]).lower()}\n")
    with open(paths["user_polarity"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header)
        fh.write("user_id,score\n")
        for u in data.graph.ids:
            fh.write(f"{u},{truth.user_polarity[u]!r}\n")
    with open(paths["config"], "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header)
        for key, val in asdict(cfg).items():
            fh.write(f"{key}={val}\n")
    return paths


def load_truth(path: str | Path) -> dict[str, tuple[float, str, bool]]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#") or line.startswith("user_id,"):
                continue
            u, lam, side, gk = line.split(",")
            out[u] = (float(lam), side, gk == "true")
    return out
