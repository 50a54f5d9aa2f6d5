"""Group comparison statistics and plot-data exports."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from echograph.polarity import PolaritySummary, RoleLabel

DEFAULT_DELTA_GRID = (0.20, 0.25, 0.30, 0.35, 0.40, 0.45)
DEFAULT_ALPHA = 1e-3
DEFAULT_K = 4

HIGHER = "higher"
LOWER = "lower"
NOT_SIGNIFICANT = "not significant"
VERDICT_SYMBOL = {HIGHER: "✓", LOWER: "✓ (-)", NOT_SIGNIFICANT: "✗"}

_CF_MAX_ITER = 500
_CF_EPS = 1e-16
_TINY = 1e-300


# ---------------------------------------------------------------- t distribution


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the incomplete beta function (modified Lentz)."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, _CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta continued fraction did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("betainc requires a, b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """P(|T| >= |t|) for Student's t with ``df`` degrees of freedom."""
    if math.isnan(t):
        return math.nan
    if math.isinf(t):
        return 0.0
    if df <= 0:
        raise ValueError("df must be positive")
    x = df / (df + t * t)
    return min(max(betainc(0.5 * df, 0.5, x), 0.0), 1.0)


def t_cdf(t: float, df: float) -> float:
    tail = 0.5 * t_sf_two_sided(t, df)
    return 1.0 - tail if t > 0 else tail


# ---------------------------------------------------------------- tests


@dataclass(frozen=True)
class WelchResult:
    t: float
    df: float
    p_value: float


def welch_t(a: Sequence[float], b: Sequence[float]) -> WelchResult:
    """Two-sided Welch t-test for equal means.

    Degenerate case: when both samples have zero variance, t is 0 for equal
    means and +/-inf otherwise (p = 0), with df = n_a + n_b - 2.
    """
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise ValueError(f"welch_t needs at least 2 values per sample, got {na} and {nb}")
    ma = math.fsum(a) / na
    mb = math.fsum(b) / nb
    va = math.fsum((x - ma) ** 2 for x in a) / (na - 1)
    vb = math.fsum((x - mb) ** 2 for x in b) / (nb - 1)
    sa, sb = va / na, vb / nb
    se2 = sa + sb
    if se2 == 0.0:
        df = float(na + nb - 2)
        if ma == mb:
            return WelchResult(0.0, df, 1.0)
        return WelchResult(math.copysign(math.inf, ma - mb), df, 0.0)
    t = (ma - mb) / math.sqrt(se2)
    # Welch-Satterthwaite, scaled by the larger term so tiny variances cannot underflow
    s = max(sa, sb)
    ra, rb = sa / s, sb / s
    df = (ra + rb) ** 2 / (ra * ra / (na - 1) + rb * rb / (nb - 1))
    return WelchResult(t, df, t_sf_two_sided(t, df))


def pearson(x: Sequence[float], y: Sequence[float]) -> float | None:
    """Pearson correlation; None when either input has zero variance."""
    if len(x) != len(y):
        raise ValueError("pearson needs equal-length inputs")
    if len(x) < 2:
        raise ValueError("pearson needs at least 2 points")
    xa = np.asarray(x, dtype=float)
    ya = np.asarray(y, dtype=float)
    dx = xa - xa.mean()
    dy = ya - ya.mean()
    sxx = math.fsum(dx * dx)
    syy = math.fsum(dy * dy)
    if sxx == 0.0 or syy == 0.0:
        return None
    r = math.fsum(dx * dy) / math.sqrt(sxx * syy)
    return min(max(r, -1.0), 1.0)


# ---------------------------------------------------------------- group comparison


@dataclass(frozen=True)
class DeltaEntry:
    delta: float
    n_a: int
    n_b: int
    mean_a: float | None
    mean_b: float | None
    t: float | None
    df: float | None
    p_value: float | None
    evaluable: bool

    def direction(self, alpha: float) -> int:
        """+1 / -1 when significant at ``alpha``, else 0."""
        if not self.evaluable or self.p_value is None or self.p_value >= alpha:
            return 0
        return 1 if self.t > 0 else -1


@dataclass(frozen=True)
class ComparisonReport:
    feature: str
    comparison: str
    entries: tuple[DeltaEntry, ...]
    verdict: str
    alpha: float
    k: int

    @property
    def symbol(self) -> str:
        return VERDICT_SYMBOL[self.verdict]


def verdict(entries: Sequence[DeltaEntry], alpha: float, k: int) -> str:
    dirs = [e.direction(alpha) for e in entries]
    if sum(d > 0 for d in dirs) >= k:
        return HIGHER
    if sum(d < 0 for d in dirs) >= k:
        return LOWER
    return NOT_SIGNIFICANT


def _entry(delta: float, a: list[float], b: list[float]) -> DeltaEntry:
    if len(a) < 2 or len(b) < 2:
        return DeltaEntry(delta, len(a), len(b), None, None, None, None, None, False)
    res = welch_t(a, b)
    return DeltaEntry(
        delta, len(a), len(b), math.fsum(a) / len(a), math.fsum(b) / len(b), res.t, res.df, res.p_value, True
    )


def _split_partisan(labels: Mapping[str, RoleLabel]) -> tuple[list[str], list[str]]:
    a = sorted(u for u, lab in labels.items() if lab.is_partisan)
    b = sorted(u for u, lab in labels.items() if not lab.is_partisan)
    return a, b


def _split_gatekeeper(labels: Mapping[str, RoleLabel], rng: np.random.Generator) -> tuple[list[str], list[str]]:
    defined = {u: lab for u, lab in labels.items() if lab.gatekeeper is not None}
    gk = sorted(u for u, lab in defined.items() if lab.gatekeeper)
    normal = sorted(u for u, lab in defined.items() if not lab.gatekeeper)
    size = min(len(gk), len(normal))
    pick = rng.choice(len(normal), size=size, replace=False) if size else np.zeros(0, dtype=int)
    return gk, [normal[i] for i in sorted(pick)]


def compare_groups(
    features: Mapping[str, Mapping[str, float]],
    labels_by_delta: Mapping[float, Mapping[str, RoleLabel]],
    comparison: str = "partisan",
    alpha: float = DEFAULT_ALPHA,
    k: int = DEFAULT_K,
    seed: int = 0,
) -> list[ComparisonReport]:
    """Welch comparisons of each feature between two role groups per delta.

    ``comparison="partisan"`` contrasts partisans with bipartisans;
    ``"gatekeeper"`` contrasts gatekeepers with a same-size seeded random
    sample of non-gatekeepers. A feature's verdict is ``higher``/``lower``
    when group A is significantly higher/lower at ``alpha`` for at least
    ``k`` thresholds. Users lacking a feature value are dropped for that
    feature only.
    """
    if comparison not in ("partisan", "gatekeeper"):
        raise ValueError(f"unknown comparison {comparison!r}")
    deltas = sorted(labels_by_delta)
    groups: dict[float, tuple[list[str], list[str]]] = {}
    for i, d in enumerate(deltas):
        if comparison == "partisan":
            groups[d] = _split_partisan(labels_by_delta[d])
        else:
            rng = np.random.default_rng([seed, i])
            groups[d] = _split_gatekeeper(labels_by_delta[d], rng)

    reports = []
    for name, values in features.items():
        entries = []
        for d in deltas:
            ga, gb = groups[d]
            a = [values[u] for u in ga if u in values and values[u] is not None]
            b = [values[u] for u in gb if u in values and values[u] is not None]
            entries.append(_entry(d, a, b))
        reports.append(ComparisonReport(name, comparison, tuple(entries), verdict(entries, alpha, k), alpha, k))
    return reports


def comparison_table_rows(reports: Sequence[ComparisonReport]) -> Iterable[list[str]]:
    """One row per feature: name, verdict, symbol, significant-higher/lower counts."""
    for r in reports:
        dirs = [e.direction(r.alpha) for e in r.entries]
        yield [
            r.feature,
            r.verdict,
            r.symbol,
            str(sum(d > 0 for d in dirs)),
            str(sum(d < 0 for d in dirs)),
            str(sum(e.evaluable for e in r.entries)),
        ]


COMPARISON_TABLE_HEADER = ["feature", "verdict", "symbol", "n_higher", "n_lower", "n_evaluable"]
COMPARISON_DETAIL_HEADER = ["feature", "delta", "n_a", "n_b", "mean_a", "mean_b", "t", "df", "p_value", "evaluable"]


def comparison_detail_rows(reports: Sequence[ComparisonReport]) -> Iterable[list[str]]:
    def fmt(x: float | None) -> str:
        return "" if x is None else repr(float(x))

    for r in reports:
        for e in r.entries:
            yield [
                r.feature,
                f"{e.delta:.2f}",
                str(e.n_a),
                str(e.n_b),
                fmt(e.mean_a),
                fmt(e.mean_b),
                fmt(e.t),
                fmt(e.df),
                fmt(e.p_value),
                str(e.evaluable).lower(),
            ]


# ---------------------------------------------------------------- plot data

KDE_POINTS = 512

_trapezoid = getattr(np, "trapezoid", None) or np.trapz


@dataclass(frozen=True)
class BeanplotData:
    group: str
    values: tuple[float, ...]
    mean: float
    bandwidth: float | None = None
    grid: tuple[float, ...] = ()
    density: tuple[float, ...] = ()
    point_mass: float | None = None

    def to_json(self) -> dict:
        return {
            "group": self.group,
            "values": list(self.values),
            "mean": self.mean,
            "bandwidth": self.bandwidth,
            "grid": list(self.grid),
            "density": list(self.density),
            "point_mass": self.point_mass,
        }


def silverman_bandwidth(x: np.ndarray) -> float:
    n = x.size
    sd = float(np.std(x, ddof=1))
    q75, q25 = np.percentile(x, [75, 25])
    iqr = float(q75 - q25) / 1.34
    spread = min(sd, iqr) if iqr > 0 else sd
    return 0.9 * spread * n ** (-0.2)


def gaussian_kde(values: Sequence[float], points: int = KDE_POINTS) -> tuple[np.ndarray, np.ndarray, float]:
    """Gaussian KDE on a grid over the data range padded by 3 bandwidths.

    The density is rescaled so its trapezoidal integral over the grid is 1.
    """
    x = np.asarray(values, dtype=float)
    bw = silverman_bandwidth(x)
    grid = np.linspace(x.min() - 3 * bw, x.max() + 3 * bw, points)
    dens = np.zeros(points)
    norm = 1.0 / (x.size * bw * math.sqrt(2 * math.pi))
    for chunk in np.array_split(x, max(1, x.size // 2048)):
        z = (grid[:, None] - chunk[None, :]) / bw
        dens += np.exp(-0.5 * z * z).sum(axis=1)
    dens *= norm
    dens /= _trapezoid(dens, grid)
    return grid, dens, bw


def beanplot_export(groups: Mapping[str, Sequence[float]]) -> list[BeanplotData]:
    out = []
    for name in groups:
        vals = [float(v) for v in groups[name] if v is not None]
        if len(vals) < 2:
            raise ValueError(f"beanplot group {name!r} needs at least 2 values")
        mean = math.fsum(vals) / len(vals)
        if min(vals) == max(vals):
            out.append(BeanplotData(name, tuple(vals), mean, point_mass=vals[0]))
            continue
        grid, dens, bw = gaussian_kde(vals)
        out.append(BeanplotData(name, tuple(vals), mean, bw, tuple(grid.tolist()), tuple(dens.tolist())))
    return out


@dataclass(frozen=True)
class ScatterRow:
    user_id: str
    p: float
    c: float
    sign: str

    def to_json(self) -> dict:
        return {"user_id": self.user_id, "p": self.p, "c": self.c, "user_polarity_sign": self.sign}


@dataclass(frozen=True)
class ScatterData:
    rows: tuple[ScatterRow, ...] = field(default_factory=tuple)


def _sign(score: float | None) -> str:
    if score is None or math.isnan(score) or score == 0:
        return "unknown"
    return "negative" if score < 0 else "positive"


def scatter_export(summaries: Mapping[str, PolaritySummary]) -> ScatterData:
    rows = [
        ScatterRow(u, s.p, s.c, _sign(s.user_polarity))
        for u, s in sorted(summaries.items())
        if s.p is not None and s.c is not None
    ]
    return ScatterData(tuple(rows))
