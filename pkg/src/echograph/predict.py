"""Role prediction from network, profile and n-gram features.

The forest itself is fit with scikit-learn; the fitted trees are copied into
plain arrays (:class:`TreeArrays`) which are what gets evaluated, serialized
and reloaded.

Model file format (text, UTF-8, tab separated)::

    echograph-forest<TAB>1
    classes<TAB><c0><TAB><c1>...
    config<TAB><key><TAB><value>          (0 or more)
    feature<TAB><index><TAB><name>        (one per feature column)
    tree<TAB><index><TAB><node count>
    <node><TAB><feature><TAB><threshold><TAB><left><TAB><right><TAB><freq c0>...

Leaves have feature -1 and children -1. A row goes left when
``x[feature] <= threshold``. Floats are written with ``repr`` so a reloaded
model predicts bit-identically.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp
from sklearn.ensemble import RandomForestClassifier

from echograph.graph_metrics import FollowGraph, NodeMetricVector, clustering_coefficient, degrees, pagerank
from echograph.ingest import SECONDS_PER_DAY, UserProfileRecord
from echograph.polarity import RoleLabel

MODEL_MAGIC = "echograph-forest"
MODEL_VERSION = 1

DEFAULT_NGRAM_RANGE = (1, 2)
DEFAULT_VOCAB_CAP = 20000
DEFAULT_TREES = 200
PREDICT_DELTA = 0.3

NETWORK_FEATURES = ("pagerank", "degree", "clustering", "in_graph")
PROFILE_FEATURES = ("n_tweets", "n_followers", "n_friends", "age_weeks", "has_profile")
BLOCKS = ("net", "ngram", "all")

_TOKEN_RE = re.compile(r"\w+")


# ---------------------------------------------------------------- text


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def ngrams(tokens: Sequence[str], n_range: tuple[int, int]) -> Iterable[str]:
    lo, hi = n_range
    for n in range(lo, hi + 1):
        for i in range(len(tokens) - n + 1):
            yield " ".join(tokens[i : i + n])


def _doc_counts(doc: str | Sequence[str], n_range: tuple[int, int]) -> Counter:
    # n-grams never span two tweets
    texts = [doc] if isinstance(doc, str) else doc
    counts: Counter = Counter()
    for text in texts:
        counts.update(ngrams(tokenize(text), n_range))
    return counts


@dataclass(frozen=True)
class TfidfModel:
    vocabulary: tuple[str, ...]
    idf: np.ndarray
    n_range: tuple[int, int]

    def transform(self, docs: Sequence[str | Sequence[str]]) -> sp.csr_matrix:
        index = {t: j for j, t in enumerate(self.vocabulary)}
        rows, cols, vals = [], [], []
        for i, doc in enumerate(docs):
            for term, tf in _doc_counts(doc, self.n_range).items():
                j = index.get(term)
                if j is not None:
                    rows.append(i)
                    cols.append(j)
                    vals.append(tf * self.idf[j])
        m = sp.csr_matrix((vals, (rows, cols)), shape=(len(docs), len(self.vocabulary)), dtype=np.float64)
        m.sort_indices()
        norms = np.sqrt(np.asarray(m.multiply(m).sum(axis=1)).ravel())
        norms[norms == 0] = 1.0
        return sp.csr_matrix(sp.diags(1.0 / norms) @ m)


def tfidf_features(
    docs: Sequence[str | Sequence[str]],
    n_range: tuple[int, int] = DEFAULT_NGRAM_RANGE,
    vocab_cap: int = DEFAULT_VOCAB_CAP,
) -> tuple[TfidfModel, sp.csr_matrix]:
    """Fit tf-idf on per-user documents and return the L2-normalized rows.

    Weight = raw count x (ln((1 + N) / (1 + df)) + 1). The vocabulary keeps
    the ``vocab_cap`` n-grams with the highest document frequency, ties
    broken alphabetically.
    """
    if not docs:
        raise ValueError("tf-idf needs at least one document")
    if n_range[0] < 1 or n_range[1] < n_range[0]:
        raise ValueError(f"bad n-gram range {n_range}")
    df: Counter = Counter()
    for doc in docs:
        df.update(_doc_counts(doc, n_range).keys())
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))[:vocab_cap]
    vocab = tuple(sorted(t for t, _ in ranked))
    n = len(docs)
    idf = np.array([math.log((1 + n) / (1 + df[t])) + 1.0 for t in vocab])
    model = TfidfModel(vocab, idf, tuple(n_range))
    return model, model.transform(docs)


# ---------------------------------------------------------------- features


@dataclass(frozen=True)
class FeatureMatrix:
    """Per-user feature blocks; row ``i`` belongs to ``user_ids[i]``."""

    user_ids: tuple[str, ...]
    network: np.ndarray
    profile: np.ndarray
    text: sp.csr_matrix
    vocabulary: tuple[str, ...] = ()

    def select(self, block: str, rows: Sequence[int] | None = None) -> tuple[sp.csr_matrix, list[str]]:
        if block not in BLOCKS:
            raise ValueError(f"unknown feature block {block!r}; expected one of {BLOCKS}")
        parts, names = [], []
        if block in ("net", "all"):
            parts += [sp.csr_matrix(self.network), sp.csr_matrix(self.profile)]
            names += list(NETWORK_FEATURES) + list(PROFILE_FEATURES)
        if block in ("ngram", "all"):
            parts.append(self.text)
            names += [f"ngram:{t}" for t in self.vocabulary]
        x = sp.hstack(parts, format="csr")
        if rows is not None:
            x = x[np.asarray(rows, dtype=np.int64)]
        return x, names

    def rows_for(self, users: Sequence[str]) -> list[int]:
        index = {u: i for i, u in enumerate(self.user_ids)}
        return [index[u] for u in users]


def build_features(
    user_ids: Sequence[str],
    graph: FollowGraph | None = None,
    profiles: Mapping[str, UserProfileRecord] | None = None,
    texts: Mapping[str, Sequence[str]] | None = None,
    reference_time: float | None = None,
    metrics: Mapping[str, NodeMetricVector] | None = None,
    n_range: tuple[int, int] = DEFAULT_NGRAM_RANGE,
    vocab_cap: int = DEFAULT_VOCAB_CAP,
) -> FeatureMatrix:
    """Assemble feature blocks; missing metrics/profiles become zeros with a flag."""
    users = tuple(user_ids)
    net = np.zeros((len(users), len(NETWORK_FEATURES)))
    if graph is not None and graph.node_count:
        if metrics is None:
            metrics = {"pagerank": pagerank(graph), "clustering": clustering_coefficient(graph)}
            metrics["degree"] = degrees(graph)[2]
        for r, u in enumerate(users):
            if u in graph:
                i = graph.index_of(u)
                net[r] = [metrics["pagerank"].values[i], metrics["degree"].values[i], metrics["clustering"].values[i], 1.0]

    prof = np.zeros((len(users), len(PROFILE_FEATURES)))
    profiles = profiles or {}
    for r, u in enumerate(users):
        p = profiles.get(u)
        if p is None:
            continue
        age_weeks = 0.0 if reference_time is None else max(reference_time - p.account_created, 0.0) / (7 * SECONDS_PER_DAY)
        prof[r] = [p.statuses_count, p.followers_count, p.friends_count, age_weeks, 1.0]

    if texts is not None:
        model, text = tfidf_features([list(texts.get(u, ())) for u in users], n_range, vocab_cap)
        vocab = model.vocabulary
    else:
        text, vocab = sp.csr_matrix((len(users), 0)), ()
    return FeatureMatrix(users, net, prof, text, vocab)


# ---------------------------------------------------------------- tasks


@dataclass(frozen=True)
class LabeledDataset:
    user_ids: tuple[str, ...]
    y: np.ndarray
    target: str
    seed: int
    balanced: bool = True

    def __len__(self) -> int:
        return len(self.user_ids)


def build_task(
    labels: Mapping[str, RoleLabel],
    target: str = "partisan",
    seed: int = 0,
    downsample_positives: bool = False,
) -> LabeledDataset:
    """Balanced dataset: every target-role user plus an equal seeded sample of the rest.

    With ``downsample_positives`` a majority positive class is sampled down
    to the negative count instead of raising.
    """
    if target == "partisan":
        pos = sorted(u for u, lab in labels.items() if lab.is_partisan)
        neg = sorted(u for u, lab in labels.items() if not lab.is_partisan)
    elif target == "gatekeeper":
        defined = {u: lab for u, lab in labels.items() if lab.gatekeeper is not None}
        pos = sorted(u for u, lab in defined.items() if lab.gatekeeper)
        neg = sorted(u for u, lab in defined.items() if not lab.gatekeeper)
    else:
        raise ValueError(f"unknown target {target!r}")
    if not pos:
        raise ValueError(f"no {target} users to build a task from")
    rng = np.random.default_rng(seed)
    if len(neg) < len(pos):
        if not downsample_positives:
            raise ValueError(f"only {len(neg)} non-{target} users for {len(pos)} {target} users")
        pos = [pos[i] for i in sorted(rng.choice(len(pos), size=len(neg), replace=False))]
    else:
        neg = [neg[i] for i in sorted(rng.choice(len(neg), size=len(pos), replace=False))]
    users = tuple(pos + neg)
    y = np.concatenate([np.ones(len(pos), dtype=np.int64), np.zeros(len(neg), dtype=np.int64)])
    return LabeledDataset(users, y, target, seed)


# ---------------------------------------------------------------- forest


@dataclass(frozen=True)
class TreeArrays:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (nodes, classes) leaf class frequencies

    def leaves(self, x: np.ndarray) -> np.ndarray:
        node = np.zeros(x.shape[0], dtype=np.int64)
        active = self.left[node] >= 0
        while active.any():
            idx = np.flatnonzero(active)
            cur = node[idx]
            go_left = x[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active = self.left[node] >= 0
        return node


@dataclass(frozen=True)
class TrainedModel:
    trees: tuple[TreeArrays, ...]
    classes: np.ndarray
    feature_names: tuple[str, ...]
    config: Mapping[str, str] = field(default_factory=dict)

    def predict_proba(self, x: sp.spmatrix | np.ndarray) -> np.ndarray:
        used = np.unique(np.concatenate([t.feature[t.feature >= 0] for t in self.trees] or [np.zeros(0, int)]))
        remap = np.zeros(len(self.feature_names), dtype=np.int64)
        remap[used] = np.arange(used.size)
        cols = x[:, used]
        dense = cols.toarray() if sp.issparse(cols) else np.asarray(cols, dtype=float)
        dense = dense.astype(np.float32).astype(np.float64)  # sklearn splits on float32 inputs
        proba = np.zeros((dense.shape[0], self.classes.size))
        for t in self.trees:
            local = TreeArrays(np.where(t.feature >= 0, remap[np.maximum(t.feature, 0)], -1), t.threshold, t.left, t.right, t.value)
            proba += t.value[local.leaves(dense)]
        return proba / len(self.trees)

    def predict(self, x: sp.spmatrix | np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.predict_proba(x), axis=1)]


def train(
    x: sp.spmatrix | np.ndarray,
    y: np.ndarray,
    n_trees: int = DEFAULT_TREES,
    max_depth: int | None = None,
    features_per_split: int | None = None,
    seed: int = 0,
    threads: int = 1,
    feature_names: Sequence[str] | None = None,
) -> TrainedModel:
    """Bootstrap-resampled Gini trees with per-split random feature subsets."""
    y = np.asarray(y)
    if x.shape[0] == 0:
        raise ValueError("cannot train on an empty dataset")
    n_features = x.shape[1]
    if features_per_split is None:
        features_per_split = max(1, int(math.sqrt(n_features)))
    forest = RandomForestClassifier(
        n_estimators=n_trees,
        criterion="gini",
        max_depth=max_depth,
        max_features=min(features_per_split, n_features),
        bootstrap=True,
        random_state=seed,
        n_jobs=threads,
    )
    forest.fit(x, y)
    trees = []
    for est in forest.estimators_:
        tr = est.tree_
        value = tr.value[:, 0, :].astype(np.float64)
        sums = value.sum(axis=1, keepdims=True)
        sums[sums == 0] = 1.0
        trees.append(
            TreeArrays(
                feature=np.where(tr.children_left >= 0, tr.feature, -1).astype(np.int64),
                threshold=tr.threshold.astype(np.float64),
                left=tr.children_left.astype(np.int64),
                right=tr.children_right.astype(np.int64),
                value=value / sums,
            )
        )
    names = tuple(feature_names) if feature_names is not None else tuple(f"f{j}" for j in range(n_features))
    config = {
        "n_trees": str(n_trees),
        "max_depth": str(max_depth),
        "features_per_split": str(features_per_split),
        "seed": str(seed),
    }
    return TrainedModel(tuple(trees), forest.classes_.copy(), names, config)


# ---------------------------------------------------------------- cross-validation


@dataclass(frozen=True)
class CVReport:
    fold_accuracy: tuple[float, ...]
    folds: np.ndarray
    seed: int

    @property
    def mean_accuracy(self) -> float:
        return float(np.mean(self.fold_accuracy))


def stratified_folds(y: np.ndarray, k: int, seed: int) -> np.ndarray:
    """Fold id per row; each class is shuffled then dealt round-robin."""
    y = np.asarray(y)
    if k < 2:
        raise ValueError("need at least 2 folds")
    if k > y.size:
        raise ValueError(f"{k} folds requested for {y.size} rows")
    rng = np.random.default_rng(seed)
    folds = np.empty(y.size, dtype=np.int64)
    start = 0
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        idx = idx[rng.permutation(idx.size)]
        folds[idx] = (start + np.arange(idx.size)) % k
        start += idx.size
    return folds


def _fold_seed(seed: int, fold: int) -> int:
    return int(np.random.SeedSequence([seed, fold]).generate_state(1)[0])


def cross_validate(
    x: sp.spmatrix | np.ndarray,
    y: np.ndarray,
    k: int = 10,
    seed: int = 0,
    **train_kw,
) -> CVReport:
    y = np.asarray(y)
    folds = stratified_folds(y, k, seed)
    acc = []
    for f in range(k):
        test = folds == f
        model = train(x[~test], y[~test], seed=_fold_seed(seed, f), **train_kw)
        pred = model.predict(x[test])
        acc.append(float(np.mean(pred == y[test])))
    return CVReport(tuple(acc), folds, seed)


def evaluate_blocks(
    features: FeatureMatrix,
    dataset: LabeledDataset,
    blocks: Sequence[str] = BLOCKS,
    k: int = 10,
    seed: int = 0,
    **train_kw,
) -> dict[str, CVReport]:
    """Cross-validated accuracy for each feature-block configuration."""
    rows = features.rows_for(dataset.user_ids)
    out = {}
    for block in blocks:
        x, _ = features.select(block, rows)
        out[block] = cross_validate(x, dataset.y, k=k, seed=seed, **train_kw)
    return out


def permuted_labels(y: np.ndarray, seed: int) -> np.ndarray:
    return np.asarray(y)[np.random.default_rng(seed).permutation(len(y))]


# ---------------------------------------------------------------- serialization


def save_model(model: TrainedModel, path: str | Path, header: str | None = None) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        if header:
            fh.write(header if header.endswith("\n") else header + "\n")
        fh.write(f"{MODEL_MAGIC}\t{MODEL_VERSION}\n")
        fh.write("classes\t" + "\t".join(str(c) for c in model.classes.tolist()) + "\n")
        for key in sorted(model.config):
            fh.write(f"config\t{key}\t{model.config[key]}\n")
        for j, name in enumerate(model.feature_names):
            fh.write(f"feature\t{j}\t{name}\n")
        for ti, t in enumerate(model.trees):
            fh.write(f"tree\t{ti}\t{t.feature.size}\n")
            for node in range(t.feature.size):
                freqs = "\t".join(repr(float(v)) for v in t.value[node])
                fh.write(
                    f"{node}\t{int(t.feature[node])}\t{float(t.threshold[node])!r}\t"
                    f"{int(t.left[node])}\t{int(t.right[node])}\t{freqs}\n"
                )


def load_model(path: str | Path) -> TrainedModel:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    while lines and lines[0].startswith("#"):
        lines.pop(0)
    if not lines or lines[0].split("\t") != [MODEL_MAGIC, str(MODEL_VERSION)]:
        raise ValueError(f"{path}: not an {MODEL_MAGIC} v{MODEL_VERSION} file")
    classes = np.array([int(c) for c in lines[1].split("\t")[1:]])
    config: dict[str, str] = {}
    names: list[str] = []
    trees = []
    i = 2
    while i < len(lines):
        parts = lines[i].split("\t")
        if parts[0] == "config":
            config[parts[1]] = parts[2]
            i += 1
        elif parts[0] == "feature":
            names.append(parts[2])
            i += 1
        elif parts[0] == "tree":
            n_nodes = int(parts[2])
            rows = [lines[i + 1 + r].split("\t") for r in range(n_nodes)]
            trees.append(
                TreeArrays(
                    feature=np.array([int(r[1]) for r in rows], dtype=np.int64),
                    threshold=np.array([float(r[2]) for r in rows]),
                    left=np.array([int(r[3]) for r in rows], dtype=np.int64),
                    right=np.array([int(r[4]) for r in rows], dtype=np.int64),
                    value=np.array([[float(v) for v in r[5:]] for r in rows]),
                )
            )
            i += 1 + n_nodes
        else:
            raise ValueError(f"{path}:{i + 1}: unexpected record {parts[0]!r}")
    return TrainedModel(tuple(trees), classes, tuple(names), config)


def cv_rows(reports: Mapping[str, CVReport], task: str) -> Iterable[list[str]]:
    for block, rep in reports.items():
        for f, acc in enumerate(rep.fold_accuracy):
            yield [task, block, str(f), repr(acc)]
        yield [task, block, "mean", repr(rep.mean_accuracy)]
