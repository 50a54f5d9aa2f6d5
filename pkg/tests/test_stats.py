from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.special
import scipy.stats
from hypothesis import given, settings
from hypothesis import strategies as st

from echograph import stats
from echograph.polarity import BIPARTISAN, LEFT_PARTISAN, NON_CONSUMER, LEFT_CONSUMER, PolaritySummary, RoleLabel


def brute_welch(a, b):
    na, nb = len(a), len(b)
    ma, mb = sum(a) / na, sum(b) / nb
    va = sum((x - ma) ** 2 for x in a) / (na - 1)
    vb = sum((x - mb) ** 2 for x in b) / (nb - 1)
    t = (ma - mb) / math.sqrt(va / na + vb / nb)
    df = (va / na + vb / nb) ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    return t, df


def brute_pearson(x, y):
    n = len(x)
    sx, sy = sum(x), sum(y)
    sxy = sum(a * b for a, b in zip(x, y))
    sxx, syy = sum(a * a for a in x), sum(b * b for b in y)
    return (n * sxy - sx * sy) / math.sqrt((n * sxx - sx * sx) * (n * syy - sy * sy))


# ---------------------------------------------------------------- t distribution


@pytest.mark.parametrize("a,b,x", [(0.5, 0.5, 0.3), (2, 3, 0.7), (10, 0.5, 0.99), (0.5, 40, 0.01), (100, 100, 0.5), (3, 3, 0.0), (3, 3, 1.0)])
def test_betainc_matches_scipy(a, b, x):
    assert stats.betainc(a, b, x) == pytest.approx(scipy.special.betainc(a, b, x), abs=1e-13)


@pytest.mark.parametrize("df", [1, 2, 3.7, 10, 50, 1000])
@pytest.mark.parametrize("t", [0.0, 0.3, -1.2, 2.5, 8.0, -40.0])
def test_t_tails_match_scipy(t, df):
    assert stats.t_sf_two_sided(t, df) == pytest.approx(2 * scipy.stats.t.sf(abs(t), df), rel=1e-9, abs=1e-300)
    assert stats.t_cdf(t, df) == pytest.approx(scipy.stats.t.cdf(t, df), rel=1e-9, abs=1e-300)


def test_p_value_monotone_in_abs_t():
    ts = np.linspace(0, 20, 200)
    for df in (1, 4, 30):
        ps = [stats.t_sf_two_sided(t, df) for t in ts]
        assert all(p2 <= p1 for p1, p2 in zip(ps, ps[1:]))


# ---------------------------------------------------------------- welch / pearson


def test_welch_hand_example():
    # means 2 and 3, both variances 1: t = -1 / sqrt(2/3), df = (2/3)^2 / (2 * (1/3)^2 / 2) = 4
    r = stats.welch_t([1, 2, 3], [2, 3, 4])
    assert r.t == pytest.approx(-1.224744871391589, abs=1e-12)
    assert r.df == pytest.approx(4.0, abs=1e-12)


def test_welch_identical_samples():
    r = stats.welch_t([1.0, 2.0, 5.0], [1.0, 2.0, 5.0])
    assert r.t == 0.0 and r.p_value == pytest.approx(1.0)


def test_welch_degenerate_separation():
    r = stats.welch_t([0, 0], [1, 1])
    assert r.t == -math.inf and r.p_value == 0.0 and r.df == 2.0
    assert stats.welch_t([1, 1], [1, 1]).p_value == 1.0


def test_welch_needs_two_values():
    with pytest.raises(ValueError):
        stats.welch_t([1.0], [1.0, 2.0])


@pytest.mark.parametrize("seed", range(100))
def test_welch_and_pearson_match_brute_force(seed):
    rng = np.random.default_rng(seed)
    a = list(rng.normal(rng.uniform(-2, 2), rng.uniform(0.1, 3), int(rng.integers(2, 60))))
    b = list(rng.normal(rng.uniform(-2, 2), rng.uniform(0.1, 3), int(rng.integers(2, 60))))
    r = stats.welch_t(a, b)
    t, df = brute_welch(a, b)
    assert abs(r.t - t) < 1e-10 and abs(r.df - df) < 1e-10
    ref = scipy.stats.ttest_ind(a, b, equal_var=False)
    assert r.p_value == pytest.approx(ref.pvalue, rel=1e-8, abs=1e-300)
    n = int(rng.integers(2, 80))
    x = list(rng.normal(size=n))
    y = list(rng.normal(size=n) + rng.uniform(-2, 2) * np.array(x))
    assert abs(stats.pearson(x, y) - brute_pearson(x, y)) < 1e-10


@settings(max_examples=100, deadline=None)
@given(
    st.lists(st.floats(-100, 100), min_size=2, max_size=20),
    st.lists(st.floats(-100, 100), min_size=2, max_size=20),
)
def test_welch_antisymmetric(a, b):
    r1, r2 = stats.welch_t(a, b), stats.welch_t(b, a)
    assert r1.df == r2.df
    if math.isinf(r1.t):
        assert r2.t == -r1.t
    else:
        assert r1.t == pytest.approx(-r2.t, abs=1e-12)


def test_pearson_examples():
    x = [0.1, 0.5, 0.7, 2.0]
    assert stats.pearson(x, x) == pytest.approx(1.0)
    assert stats.pearson(x, [-v + 1 for v in x]) == pytest.approx(-1.0)
    # deviations (-1,0,1) and (-1,1,0): 1 / sqrt(2*2)
    assert stats.pearson([1, 2, 3], [1, 3, 2]) == pytest.approx(0.5, abs=1e-15)
    assert stats.pearson([1, 1, 1], [1, 2, 3]) is None


# ---------------------------------------------------------------- group comparison

GRID = stats.DEFAULT_DELTA_GRID
PART = RoleLabel(0.3, LEFT_PARTISAN, NON_CONSUMER, True)
BIP = RoleLabel(0.3, BIPARTISAN, LEFT_CONSUMER, False)


def _labels(n=40):
    return {f"u{i:02d}": (PART if i < n // 2 else BIP) for i in range(n)}


def test_identical_feature_not_significant():
    labels = _labels()
    reports = stats.compare_groups({"f": {u: 1.0 for u in labels}}, {d: labels for d in GRID})
    assert reports[0].verdict == stats.NOT_SIGNIFICANT and reports[0].symbol == "✗"


def test_indicator_feature_significant_everywhere():
    labels = _labels()
    rng = np.random.default_rng(0)
    feat = {u: float(lab.is_partisan) + 0.01 * rng.normal() for u, lab in labels.items()}
    (rep,) = stats.compare_groups({"f": feat}, {d: labels for d in GRID})
    assert rep.verdict == stats.HIGHER and rep.symbol == "✓"
    assert all(e.direction(stats.DEFAULT_ALPHA) == 1 for e in rep.entries)
    (neg,) = stats.compare_groups({"f": {u: -v for u, v in feat.items()}}, {d: labels for d in GRID})
    assert neg.verdict == stats.LOWER


def test_three_of_six_is_not_enough():
    labels = _labels()
    rng = np.random.default_rng(1)
    signal = {u: float(lab.is_partisan) + 0.01 * rng.normal() for u, lab in labels.items()}
    flat_labels = {u: BIP for u in labels}
    flat_labels.update({u: PART for u in list(labels)[::2]})  # mixes the two signal groups
    by_delta = {d: (labels if i < 3 else flat_labels) for i, d in enumerate(GRID)}
    (rep,) = stats.compare_groups({"f": signal}, by_delta)
    dirs = [e.direction(stats.DEFAULT_ALPHA) for e in rep.entries]
    assert dirs[:3] == [1, 1, 1] and dirs[3:] == [0, 0, 0]
    assert rep.verdict == stats.NOT_SIGNIFICANT
    (rep3,) = stats.compare_groups({"f": signal}, by_delta, k=3)
    assert rep3.verdict == stats.HIGHER


def test_small_groups_not_evaluable():
    labels = {"a": PART, "b": BIP, "c": BIP}
    (rep,) = stats.compare_groups({"f": {"a": 1.0, "b": 2.0, "c": 3.0}}, {0.3: labels})
    assert not rep.entries[0].evaluable and rep.verdict == stats.NOT_SIGNIFICANT


def test_gatekeeper_baseline_is_same_size_and_seeded():
    labels = {f"g{i}": PART for i in range(5)}
    labels.update({f"n{i:02d}": BIP for i in range(50)})
    feat = {u: float(i) for i, u in enumerate(sorted(labels))}
    r1 = stats.compare_groups({"f": feat}, {0.3: labels}, comparison="gatekeeper", seed=3)
    r2 = stats.compare_groups({"f": feat}, {0.3: labels}, comparison="gatekeeper", seed=3)
    assert r1 == r2
    assert (r1[0].entries[0].n_a, r1[0].entries[0].n_b) == (5, 5)


@settings(max_examples=30, deadline=None)
@given(st.randoms(use_true_random=False))
def test_verdict_invariant_to_user_order(rnd):
    labels = _labels()
    rng = np.random.default_rng(2)
    feat = {u: float(lab.is_partisan) * 0.3 + rng.normal() for u, lab in labels.items()}
    items = list(labels.items())
    rnd.shuffle(items)
    fitems = list(feat.items())
    rnd.shuffle(fitems)
    a = stats.compare_groups({"f": feat}, {d: labels for d in GRID}, comparison="gatekeeper", seed=1)
    b = stats.compare_groups({"f": dict(fitems)}, {d: dict(items) for d in GRID}, comparison="gatekeeper", seed=1)
    assert a == b


def test_table_rows():
    labels = _labels()
    feat = {u: float(lab.is_partisan) + 0.001 * i for i, (u, lab) in enumerate(labels.items())}
    reports = stats.compare_groups({"f": feat}, {d: labels for d in GRID})
    assert list(stats.comparison_table_rows(reports)) == [["f", "higher", "✓", "6", "0", "6"]]
    detail = list(stats.comparison_detail_rows(reports))
    assert [r[1] for r in detail] == ["0.20", "0.25", "0.30", "0.35", "0.40", "0.45"]


# ---------------------------------------------------------------- plot data


def test_kde_peak_near_mean():
    x = np.random.default_rng(0).normal(2.0, 1.0, 500)
    grid, dens, _ = stats.gaussian_kde(x)
    assert abs(grid[np.argmax(dens)] - x.mean()) < 0.3


def test_kde_uniform_density():
    x = np.random.default_rng(0).random(1000)
    grid, dens, _ = stats.gaussian_kde(x)
    inner = (grid >= 0.2) & (grid <= 0.8)
    assert np.all(np.abs(dens[inner] - 1.0) <= 0.15)


def test_silverman_bandwidth_formula():
    x = np.random.default_rng(4).normal(size=200)
    sd = np.std(x, ddof=1)
    iqr = np.subtract(*np.percentile(x, [75, 25])) / 1.34
    assert stats.silverman_bandwidth(x) == pytest.approx(0.9 * min(sd, iqr) * 200 ** -0.2)


def test_beanplot_disjoint_groups_and_integral():
    rng = np.random.default_rng(1)
    beans = stats.beanplot_export({"lo": rng.random(100), "hi": rng.random(100) + 10})
    assert beans[0].grid[-1] < beans[1].grid[0]
    for b in beans:
        integral = float(np.sum((np.array(b.density[1:]) + b.density[:-1]) * np.diff(b.grid)) / 2)
        assert integral == pytest.approx(1.0, abs=1e-6)
        assert len(b.grid) == stats.KDE_POINTS
        assert b.to_json()["group"] == b.group


def test_beanplot_point_mass_and_min_size():
    (b,) = stats.beanplot_export({"g": [0.3, 0.3, 0.3]})
    assert b.point_mass == 0.3 and b.density == ()
    with pytest.raises(ValueError):
        stats.beanplot_export({"g": [1.0]})


def test_scatter_export():
    summ = {
        "a": PolaritySummary("a", 0.1, 0.2, 0.0, 0.0, 1, 1, user_polarity=-0.7),
        "b": PolaritySummary("b", 0.9, None, 0.0, None, 1, 0, user_polarity=0.4),
        "c": PolaritySummary("c", 0.5, 0.5, 0.0, 0.0, 1, 1),
    }
    rows = stats.scatter_export(summ).rows
    assert [(r.user_id, r.sign) for r in rows] == [("a", "negative"), ("c", "unknown")]
    assert rows[0].to_json() == {"user_id": "a", "p": 0.1, "c": 0.2, "user_polarity_sign": "negative"}
