"""Command-line entry point: ``echograph <subcommand> [flags]``.

Settings come from built-in defaults, then an optional ``--config`` file of
``key=value`` lines, then command-line flags (flags win). Every output file
starts with a ``# echograph ... config=<hash>`` line; the hash covers the
resolved settings and the contents of the input files, not paths or thread
count, so identical inputs give identical outputs.

Exit status: 0 success, 1 validation/usage error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import io
import json
import logging
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from echograph import __version__
from echograph import graph_metrics as gm
from echograph import ingest, polarity, predict, stats, synth
from echograph.ingest import EchographError, ValidationError

log = logging.getLogger("echograph")

SUBCOMMANDS = ("ingest", "metrics", "polarity", "compare", "scatter", "beanplot", "predict", "synth", "pipeline")
INPUT_KEYS = ("edges", "tweets", "profiles", "leaning_table", "user_polarity")
DEFAULT_FILES = {
    "edges": synth.EDGES_FILE,
    "tweets": synth.TWEETS_FILE,
    "profiles": synth.PROFILES_FILE,
    "leaning_table": synth.LEANING_FILE,
    "user_polarity": synth.POLARITY_FILE,
}
COMPARE_FEATURES = (
    "pagerank",
    "clustering",
    "user_polarity",
    "degree",
    "in_degree",
    "retweet_rate",
    "retweet_volume",
    "favorite_rate",
    "favorite_volume",
    "n_followers",
    "n_friends",
    "n_tweets",
    "age_weeks",
)
BEANPLOT_FEATURES = ("user_polarity", "pagerank", "clustering")


class UsageError(EchographError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse exits 2 by default
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}".replace("echograph: ", "", 1))


def parse_grid(spec: str) -> tuple[float, ...]:
    """``lo:hi:step`` (inclusive) or a comma-separated list."""
    try:
        if ":" in spec:
            lo, hi, step = (float(x) for x in spec.split(":"))
            if step <= 0:
                raise ValueError
            n = int(math.floor((hi - lo) / step + 1e-9)) + 1
            return tuple(round(lo + i * step, 10) for i in range(n))
        return tuple(float(x) for x in spec.split(","))
    except ValueError:
        raise ValidationError(f"bad delta grid {spec!r}; expected lo:hi:step or a,b,c") from None


def _bool(text: str | bool) -> bool:
    if isinstance(text, bool):
        return text
    val = text.strip().lower()
    if val in ("1", "true", "yes", "on"):
        return True
    if val in ("0", "false", "no", "off"):
        return False
    raise ValidationError(f"not a boolean: {text!r}")


def _opt_int(text: str) -> int | None:
    return None if str(text).lower() in ("", "none") else int(text)


# name -> (type, default, help)
OPTIONS: dict[str, tuple[Callable[[str], Any], Any, str]] = {
    "edges": (str, None, "follow edge list (follower<TAB>followee)"),
    "tweets": (str, None, "tweets, JSON lines"),
    "profiles": (str, None, "user profiles, JSON lines"),
    "leaning_table": (str, None, "domain,score leaning table"),
    "user_polarity": (str, None, "user_id,score external user polarity"),
    "in_dir": (str, None, "input directory with the standard file names"),
    "out": (str, "out", "output directory"),
    "delta": (float, 0.3, "single threshold for beanplot/predict"),
    "delta_grid": (parse_grid, stats.DEFAULT_DELTA_GRID, "thresholds lo:hi:step"),
    "min_obs": (int, 1, "minimum link tweets for a defined polarity"),
    "seed": (int, 0, "random seed"),
    "threads": (int, None, "worker threads (env ECHOGRAPH_THREADS)"),
    "alpha": (float, stats.DEFAULT_ALPHA, "significance level"),
    "k": (int, stats.DEFAULT_K, "thresholds needed for a verdict"),
    "bot_filter": (_bool, True, "apply bot checks when profiles are given"),
    "max_tweets_per_day": (float, 100.0, "bot check"),
    "min_tweets_per_day": (float, 0.0, "bot check"),
    "min_followers": (int, 10, "bot check"),
    "min_friends": (int, 10, "bot check"),
    "min_account_age_days": (float, 365.0, "bot check"),
    "min_tweets": (int, 5, "activity filter: minimum tweets per user"),
    "filter_order": (str, "bots-first", "bots-first or activity-first"),
    "damping": (float, gm.DEFAULT_DAMPING, "PageRank damping"),
    "n_trees": (int, predict.DEFAULT_TREES, "forest size"),
    "max_depth": (_opt_int, None, "tree depth limit"),
    "vocab_cap": (int, predict.DEFAULT_VOCAB_CAP, "n-gram vocabulary size"),
    "ngram_max": (int, 2, "longest n-gram"),
    "folds": (int, 10, "cross-validation folds"),
    "downsample_positives": (_bool, True, "shrink a majority positive class in predict tasks"),
    "feature": (str, None, "beanplot feature (default: user_polarity, pagerank, clustering)"),
    # synth
    "n_left": (int, 500, "synth: left users"),
    "n_right": (int, 500, "synth: right users"),
    "p_in": (float, 0.02, "synth: same-side follow probability"),
    "p_out": (float, 0.002, "synth: cross-side follow probability"),
    "tweets_per_user": (float, 20.0, "synth: mean tweets per user"),
    "link_fraction": (float, 0.5, "synth: share of tweets with a news link"),
    "leaning_noise": (float, 0.05, "synth: per-tweet leaning noise"),
    "gatekeeper_fraction": (float, 0.0, "synth: planted gatekeeper share per side"),
    "n_domains": (int, 25, "synth: outlets per side"),
}

COMMON = (
    "out",
    "seed",
    "threads",
)
INPUT_OPTS = INPUT_KEYS + ("in_dir", "min_obs", "bot_filter", "max_tweets_per_day", "min_tweets_per_day",
                           "min_followers", "min_friends", "min_account_age_days", "min_tweets", "filter_order")
SYNTH_OPTS = ("n_left", "n_right", "p_in", "p_out", "tweets_per_user", "link_fraction", "leaning_noise",
              "gatekeeper_fraction", "n_domains")
PREDICT_OPTS = ("delta", "n_trees", "max_depth", "vocab_cap", "ngram_max", "folds", "downsample_positives")

SUBCOMMAND_OPTS: dict[str, tuple[str, ...]] = {
    "ingest": INPUT_OPTS,
    "metrics": INPUT_OPTS + ("damping",),
    "polarity": INPUT_OPTS + ("delta", "delta_grid"),
    "compare": INPUT_OPTS + ("delta", "delta_grid", "alpha", "k", "damping"),
    "scatter": INPUT_OPTS,
    "beanplot": INPUT_OPTS + ("delta", "feature", "damping"),
    "predict": INPUT_OPTS + PREDICT_OPTS + ("damping",),
    "synth": SYNTH_OPTS,
    "pipeline": INPUT_OPTS + PREDICT_OPTS + ("delta_grid", "alpha", "k", "damping", "feature"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="echograph", description="Echo-chamber measurement on follow graphs.")
    parser.add_argument("--version", action="version", version=f"echograph {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="SUBCOMMAND", parser_class=_Parser)
    for name in SUBCOMMANDS:
        sp_ = sub.add_parser(name)
        sp_.add_argument("--config", default=None, help="key=value settings file")
        for opt in COMMON + SUBCOMMAND_OPTS[name]:
            flag = "--in" if opt == "in_dir" else "--" + opt.replace("_", "-")
            _, _, help_ = OPTIONS[opt]
            sp_.add_argument(flag, dest=opt, default=None, help=help_)
    return parser


# ---------------------------------------------------------------- settings


@dataclass(frozen=True)
class RunConfig:
    command: str
    values: dict[str, Any]
    inputs: dict[str, Path] = field(default_factory=dict)
    threads: int = 1

    def __getattr__(self, name: str) -> Any:
        try:
            return self.values[name]
        except KeyError:
            raise AttributeError(name) from None

    def digest(self) -> str:
        h = hashlib.sha256()
        settings = {k: v for k, v in self.values.items() if k not in ("out", "threads", "in_dir") + INPUT_KEYS}
        h.update(json.dumps({"command": self.command, "settings": settings}, sort_keys=True, default=str).encode())
        for key in sorted(self.inputs):
            h.update(key.encode())
            with open(self.inputs[key], "rb") as fh:
                h.update(hashlib.sha256(fh.read()).digest())
        return h.hexdigest()[:16]

    @property
    def header(self) -> str:
        return f"# echograph {__version__} command={self.command} config={self.digest()}\n"


def read_config_file(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ingest.ParseError(path, no, "expected key=value")
            key, val = (s.strip() for s in line.split("=", 1))
            key = key.replace("-", "_")
            out["in_dir" if key == "in" else key] = val
    return out


def resolve(args: argparse.Namespace) -> RunConfig:
    cmd = args.command
    allowed = COMMON + SUBCOMMAND_OPTS[cmd]
    file_vals: dict[str, str] = {}
    if args.config:
        if not Path(args.config).is_file():
            raise ValidationError(f"config file not found: {args.config}")
        file_vals = read_config_file(args.config)
        unknown = sorted(set(file_vals) - set(OPTIONS))
        if unknown:
            raise ValidationError(f"unknown config key(s): {', '.join(unknown)}")
    values: dict[str, Any] = {}
    explicit = set()
    for opt in allowed:
        conv, default, _ = OPTIONS[opt]
        raw = getattr(args, opt, None)
        if raw is None:
            raw = file_vals.get(opt)
        if raw is None:
            values[opt] = default
            continue
        explicit.add(opt)
        try:
            values[opt] = conv(raw) if isinstance(raw, str) else raw
        except (TypeError, ValueError) as exc:
            raise ValidationError(f"bad value for {opt}: {raw!r} ({exc})") from None

    threads = values.pop("threads")
    if threads is None:
        env = os.environ.get("ECHOGRAPH_THREADS")
        try:
            threads = int(env) if env else 1
        except ValueError:
            raise ValidationError(f"ECHOGRAPH_THREADS is not an integer: {env!r}") from None
    if threads < 1:
        raise ValidationError("threads must be at least 1")

    if cmd in ("polarity", "compare") and "delta" in explicit and "delta_grid" not in explicit:
        values["delta_grid"] = (values["delta"],)
    if "delta_grid" in values:
        grid = values["delta_grid"]
        if not grid:
            raise ValidationError("empty delta grid")
        if any(not (0.0 < d <= 0.5) for d in grid):
            raise ValidationError(f"delta values must lie in (0, 0.5]: {grid}")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError(f"delta grid must be strictly increasing: {grid}")
    if "delta" in values and not (0.0 < values["delta"] <= 0.5):
        raise ValidationError(f"delta must lie in (0, 0.5]: {values['delta']}")
    if "filter_order" in values and values["filter_order"] not in ("bots-first", "activity-first"):
        raise ValidationError("filter_order must be bots-first or activity-first")

    inputs: dict[str, Path] = {}
    if "edges" in values:
        base = values.get("in_dir")
        if base is not None and not Path(base).is_dir():
            raise ValidationError(f"input directory not found: {base}")
        for key in INPUT_KEYS:
            path = values.get(key)
            if path is None and base is not None:
                cand = Path(base) / DEFAULT_FILES[key]
                if cand.is_file() or key in ("edges", "tweets", "leaning_table"):
                    path = str(cand)
            if path is not None:
                inputs[key] = Path(path)
        required = ("edges",) if cmd == "metrics" else ("edges", "tweets", "leaning_table")
        for key in required:
            if key not in inputs:
                raise ValidationError(f"missing required input --{key.replace('_', '-')}")
        for key, path in inputs.items():
            if not path.is_file():
                raise ValidationError(f"input file for --{key.replace('_', '-')} not found: {path}")
    return RunConfig(cmd, values, inputs, threads)


# ---------------------------------------------------------------- loading


@dataclass
class Dataset:
    graph: gm.FollowGraph
    corpus: ingest.Corpus | None
    profiles: dict[str, ingest.UserProfileRecord]
    user_polarity: dict[str, float]
    removed: dict[str, tuple[str, ...]]


def load_dataset(cfg: RunConfig) -> Dataset:
    graph = ingest.load_graph(cfg.inputs["edges"])
    if "tweets" not in cfg.inputs:
        return Dataset(graph, None, {}, {}, {})
    table = ingest.load_leaning_table(cfg.inputs["leaning_table"])
    corpus = ingest.Corpus.from_tweets(ingest.load_tweets(cfg.inputs["tweets"]), table)
    profiles_list = ingest.load_profiles(cfg.inputs["profiles"]) if "profiles" in cfg.inputs else []
    profiles = {p.user_id: p for p in profiles_list}
    user_pol = ingest.load_user_polarity(cfg.inputs["user_polarity"]) if "user_polarity" in cfg.inputs else {}

    users = set(graph.ids) | set(corpus.tweets)
    removed: dict[str, tuple[str, ...]] = {}

    def activity(pool: set[str]) -> set[str]:
        keep = ingest.active_users(corpus, cfg.min_tweets) if cfg.min_tweets > 0 else set(pool)
        for u in sorted(pool - keep):
            removed[u] = ("too_few_tweets",)
        return pool & keep

    def bots(pool: set[str]) -> set[str]:
        if not (cfg.bot_filter and profiles_list):
            return pool
        th = ingest.BotThresholds(
            max_tweets_per_day=cfg.max_tweets_per_day,
            min_tweets_per_day=cfg.min_tweets_per_day,
            min_followers=cfg.min_followers,
            min_friends=cfg.min_friends,
            min_account_age_days=cfg.min_account_age_days,
        )
        rep = ingest.filter_bots([profiles[u] for u in sorted(pool) if u in profiles], corpus.restrict(pool), th,
                                 reference_time=corpus.latest_timestamp())
        removed.update(rep.removed)
        return pool - set(rep.removed)

    stages = (bots, activity) if cfg.filter_order == "bots-first" else (activity, bots)
    for stage in stages:
        users = stage(users)

    full = ingest.build_graph(list(graph.edges()), nodes=users)
    graph = full.subgraph(users)
    return Dataset(graph, corpus.restrict(users), profiles, user_pol, removed)


# ---------------------------------------------------------------- writers


def _write_csv(path: Path, header: str, columns: Sequence[str] | None, rows: Iterable[Sequence[Any]]) -> None:
    buf = io.StringIO()
    buf.write(header)
    w = csv.writer(buf, lineterminator="\n")
    if columns:
        w.writerow(columns)
    for row in rows:
        w.writerow(row)
    path.write_text(buf.getvalue(), encoding="utf-8")


def _write_jsonl(path: Path, header: str, records: Iterable[dict]) -> None:
    buf = io.StringIO()
    buf.write(header)
    for rec in records:
        buf.write(json.dumps(rec, sort_keys=True, ensure_ascii=False))
        buf.write("\n")
    path.write_text(buf.getvalue(), encoding="utf-8")


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------- stages


@dataclass
class Computed:
    data: Dataset
    metrics: dict[str, gm.NodeMetricVector] = field(default_factory=dict)
    summaries: dict[str, polarity.PolaritySummary] = field(default_factory=dict)


def compute_metrics(cfg: RunConfig, data: Dataset) -> dict[str, gm.NodeMetricVector]:
    if data.graph.node_count == 0:
        raise ValidationError("graph is empty after filtering")
    vecs = gm.all_metrics(data.graph, damping=cfg.values.get("damping", gm.DEFAULT_DAMPING), threads=cfg.threads)
    return {v.name: v for v in vecs}


def user_features(data: Dataset, metrics: dict[str, gm.NodeMetricVector]) -> dict[str, dict[str, float]]:
    g = data.graph
    feats: dict[str, dict[str, float]] = {name: {} for name in COMPARE_FEATURES}
    for name in ("pagerank", "clustering", "degree", "in_degree"):
        feats[name] = metrics[name].as_dict(g)
    feats["user_polarity"] = {u: abs(v) for u, v in data.user_polarity.items() if u in g}
    inter = polarity.interaction_table(data.corpus, g.ids)
    for u, s in inter.items():
        feats["retweet_rate"][u] = s.retweet_rate
        feats["retweet_volume"][u] = s.retweet_volume
        feats["favorite_rate"][u] = s.favorite_rate
        feats["favorite_volume"][u] = s.favorite_volume
    ref = data.corpus.latest_timestamp() or 0.0
    for u in g.ids:
        p = data.profiles.get(u)
        if p is None:
            continue
        feats["n_followers"][u] = float(p.followers_count)
        feats["n_friends"][u] = float(p.friends_count)
        feats["n_tweets"][u] = float(p.statuses_count)
        feats["age_weeks"][u] = max(ref - p.account_created, 0.0) / (7 * ingest.SECONDS_PER_DAY)
    return feats


def run_ingest(cfg: RunConfig, data: Dataset) -> list[Path]:
    out = _out_dir(cfg)
    hdr = cfg.header
    paths = [out / "edges.clean.tsv", out / "observations.csv", out / "removed_users.csv"]
    ingest.write_edges(data.graph, paths[0], hdr)
    obs_rows = ((u, o.tweet_id, repr(o.leaning)) for u in sorted(data.corpus.observations) for o in data.corpus.observations[u])
    _write_csv(paths[1], hdr, ["user_id", "tweet_id", "leaning"], obs_rows)
    _write_csv(paths[2], hdr, ["user_id", "reasons"], ((u, ";".join(r)) for u, r in sorted(data.removed.items())))
    return paths


def run_metrics(cfg: RunConfig, comp: Computed) -> list[Path]:
    path = _out_dir(cfg) / "metrics.csv"
    rows = ((u, m, repr(v)) for u, m, v in gm.metric_rows(comp.data.graph, list(comp.metrics.values())))
    _write_csv(path, cfg.header, ["user_id", "metric", "value"], rows)
    return [path]


def run_polarity(cfg: RunConfig, comp: Computed, grid: Sequence[float]) -> list[Path]:
    out = _out_dir(cfg)
    paths = []
    for d in grid:
        path = out / f"polarity_delta_{d:.2f}.csv"
        _write_csv(path, cfg.header, polarity.SUMMARY_HEADER, polarity.summary_rows(comp.summaries, d))
        paths.append(path)
    return paths


def run_compare(cfg: RunConfig, comp: Computed) -> list[Path]:
    out = _out_dir(cfg)
    feats = user_features(comp.data, comp.metrics)
    labels = {d: polarity.label_all(comp.summaries, d) for d in cfg.delta_grid}
    paths = []
    for kind in ("partisan", "gatekeeper"):
        reports = stats.compare_groups(feats, labels, comparison=kind, alpha=cfg.alpha, k=cfg.k, seed=cfg.seed)
        p1 = out / f"comparison_{kind}.csv"
        p2 = out / f"comparison_{kind}_detail.csv"
        _write_csv(p1, cfg.header, stats.COMPARISON_TABLE_HEADER, stats.comparison_table_rows(reports))
        _write_csv(p2, cfg.header, stats.COMPARISON_DETAIL_HEADER, stats.comparison_detail_rows(reports))
        paths += [p1, p2]
    return paths


def run_scatter(cfg: RunConfig, comp: Computed) -> list[Path]:
    path = _out_dir(cfg) / "scatter.jsonl"
    data = stats.scatter_export(comp.summaries)
    _write_jsonl(path, cfg.header, (r.to_json() for r in data.rows))
    return [path]


def run_beanplot(cfg: RunConfig, comp: Computed) -> list[Path]:
    path = _out_dir(cfg) / "beanplot.jsonl"
    feats = user_features(comp.data, comp.metrics)
    names = [cfg.feature] if cfg.values.get("feature") else list(BEANPLOT_FEATURES)
    for name in names:
        if name not in feats:
            raise ValidationError(f"unknown beanplot feature {name!r}; choose from {', '.join(COMPARE_FEATURES)}")
    labels = polarity.label_all(comp.summaries, cfg.delta)
    records = []
    for name in names:
        values = feats[name]
        groups = {
            "partisan": [values[u] for u in sorted(labels) if labels[u].is_partisan and u in values],
            "bipartisan": [values[u] for u in sorted(labels) if not labels[u].is_partisan and u in values],
        }
        for grp, vals in groups.items():
            if len(vals) < 2:
                records.append({"feature": name, "delta": cfg.delta, "group": grp, "skipped": "fewer than 2 values"})
                continue
            (bean,) = stats.beanplot_export({grp: vals})
            records.append({"feature": name, "delta": cfg.delta, **bean.to_json()})
    _write_jsonl(path, cfg.header, records)
    return [path]


def run_predict(cfg: RunConfig, comp: Computed) -> list[Path]:
    out = _out_dir(cfg)
    data = comp.data
    g = data.graph
    labels = polarity.label_all(comp.summaries, cfg.delta)
    texts = {u: [t.text for t in data.corpus.tweets.get(u, ())] for u in g.ids}
    feats = predict.build_features(
        g.ids, g, data.profiles, texts, data.corpus.latest_timestamp(), comp.metrics,
        n_range=(1, cfg.ngram_max), vocab_cap=cfg.vocab_cap,
    )
    train_kw = dict(n_trees=cfg.n_trees, max_depth=cfg.max_depth, threads=cfg.threads)
    rows: list[list[str]] = []
    paths = []
    for target in ("partisan", "gatekeeper"):
        try:
            ds = predict.build_task(labels, target, seed=cfg.seed, downsample_positives=cfg.downsample_positives)
            if len(ds) < cfg.folds:
                raise ValueError(f"{len(ds)} rows is fewer than {cfg.folds} folds")
        except ValueError as exc:
            rows.append([target, "", "skipped", str(exc)])
            continue
        reports = predict.evaluate_blocks(feats, ds, k=cfg.folds, seed=cfg.seed, **train_kw)
        rows.extend(predict.cv_rows(reports, target))
        x, names = feats.select("all", feats.rows_for(ds.user_ids))
        model = predict.train(x, ds.y, seed=cfg.seed, feature_names=names, **train_kw)
        mpath = out / f"model_{target}.txt"
        predict.save_model(model, mpath, cfg.header)
        paths.append(mpath)
    cv_path = out / "cv_report.csv"
    _write_csv(cv_path, cfg.header, ["task", "features", "fold", "accuracy"], rows)
    return [cv_path] + paths


def run_synth(cfg: RunConfig) -> list[Path]:
    scfg = synth.SynthConfig(
        n_left=int(cfg.n_left),
        n_right=int(cfg.n_right),
        p_in=cfg.p_in,
        p_out=cfg.p_out,
        tweets_per_user=cfg.tweets_per_user,
        link_fraction=cfg.link_fraction,
        leaning_noise=cfg.leaning_noise,
        gatekeeper_fraction=cfg.gatekeeper_fraction,
        n_domains=int(cfg.n_domains),
        seed=int(cfg.seed),
    )
    try:
        data = synth.generate(scfg)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    return list(synth.write_dataset(data, scfg, _out_dir(cfg), cfg.header).values())


def run_report(cfg: RunConfig, comp: Computed) -> list[Path]:
    """Key=value run summary; adds planted-gatekeeper recovery when truth.csv is present."""
    s = comp.summaries
    pc = [(x.p, x.c) for x in s.values() if x.p is not None and x.c is not None]
    r = stats.pearson([a for a, _ in pc], [b for _, b in pc]) if len(pc) >= 2 else None
    lines = [
        f"users={comp.data.graph.node_count}",
        f"edges={comp.data.graph.edge_count}",
        f"removed_users={len(comp.data.removed)}",
        f"users_with_p={sum(x.p is not None for x in s.values())}",
        f"users_with_c={sum(x.c is not None for x in s.values())}",
        f"pearson_p_c={'' if r is None else repr(r)}",
    ]
    for d in cfg.delta_grid:
        labs = polarity.label_all(s, d)
        lines.append(f"partisans_delta_{d:.2f}={sum(lab.is_partisan for lab in labs.values())}")
        lines.append(f"gatekeepers_delta_{d:.2f}={sum(bool(lab.gatekeeper) for lab in labs.values())}")
    base = cfg.values.get("in_dir")
    truth_path = Path(base) / synth.TRUTH_FILE if base else None
    if truth_path is not None and truth_path.is_file():
        truth = synth.load_truth(truth_path)
        labs = polarity.label_all(s, cfg.delta)
        planted = {u for u, (_, _, gk) in truth.items() if gk and u in comp.data.graph}
        detected = {u for u, lab in labs.items() if lab.gatekeeper}
        tp = len(planted & detected)
        lines.append(f"planted_gatekeepers={len(planted)}")
        lines.append(f"detected_gatekeepers={len(detected)}")
        lines.append(f"gatekeeper_precision={tp / len(detected) if detected else 1.0!r}")
        lines.append(f"gatekeeper_recall={tp / len(planted) if planted else 1.0!r}")
    path = _out_dir(cfg) / "report.txt"
    path.write_text(cfg.header + "\n".join(lines) + "\n", encoding="utf-8")
    return [path]


def execute(cfg: RunConfig) -> list[Path]:
    cmd = cfg.command
    if cmd == "synth":
        return run_synth(cfg)
    data = load_dataset(cfg)
    if cmd == "ingest":
        return run_ingest(cfg, data)
    comp = Computed(data)
    if cmd in ("metrics", "compare", "beanplot", "predict", "pipeline"):
        comp.metrics = compute_metrics(cfg, data)
    if cmd == "metrics":
        return run_metrics(cfg, comp)
    comp.summaries = polarity.summarize(data.graph, data.corpus, cfg.min_obs, data.user_polarity)
    if cmd == "polarity":
        return run_polarity(cfg, comp, cfg.delta_grid)
    if cmd == "compare":
        return run_compare(cfg, comp)
    if cmd == "scatter":
        return run_scatter(cfg, comp)
    if cmd == "beanplot":
        return run_beanplot(cfg, comp)
    if cmd == "predict":
        return run_predict(cfg, comp)
    paths = run_ingest(cfg, data)
    paths += run_metrics(cfg, comp)
    paths += run_polarity(cfg, comp, cfg.delta_grid)
    paths += run_compare(cfg, comp)
    paths += run_scatter(cfg, comp)
    paths += run_beanplot(cfg, comp)
    paths += run_predict(cfg, comp)
    paths += run_report(cfg, comp)
    return paths


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return 1
        cfg = resolve(args)
        paths = execute(cfg)
    except EchographError as exc:
        print(f"echograph: error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"echograph: I/O error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"echograph: error: {exc}", file=sys.stderr)
        return 1
    for p in paths:
        print(p)
    return 0


if __name__ == "__main__":
    sys.exit(main())
