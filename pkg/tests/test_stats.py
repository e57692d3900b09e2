import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import special

from peerbursts.errors import ConfigError, EmptyGroupError
from peerbursts.events import build_corpus, filter_users
from peerbursts.pipeline import analyze_corpus
from peerbursts.stats import (
    category_metrics,
    compare_groups,
    conditioned_mood_change,
    cosine_distance,
    histogram_table,
    kolmogorov_q,
    ks_asymptotic_p,
    ks_statistic,
    ks_two_sample,
    parse_condition,
)
from peerbursts.synth import GeneratorConfig, generate_corpus, with_effects

from conftest import orig, reply


def brute_d(a, b):
    best = 0.0
    for x in list(a) + list(b):
        fa = sum(v <= x for v in a) / len(a)
        fb = sum(v <= x for v in b) / len(b)
        best = max(best, abs(fa - fb))
    return best


def exhaustive_p(a, b):
    pooled = list(a) + list(b)
    n1 = len(a)
    d_obs = brute_d(a, b)
    hits = total = 0
    for idx in itertools.combinations(range(len(pooled)), n1):
        s = set(idx)
        x = [pooled[i] for i in idx]
        y = [pooled[i] for i in range(len(pooled)) if i not in s]
        hits += brute_d(x, y) >= d_obs - 1e-12
        total += 1
    return hits / total


def test_d_matches_brute_force():
    rng = np.random.default_rng(0)
    for _ in range(200):
        a = rng.integers(0, 6, rng.integers(1, 12)).astype(float)
        b = rng.normal(2, 2, rng.integers(1, 12)).round(1)
        assert ks_statistic(a, b) == pytest.approx(brute_d(a, b), abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-5, 5), min_size=1, max_size=15), st.lists(st.integers(-5, 5), min_size=1, max_size=15))
def test_d_properties(a, b):
    d = ks_statistic(a, b)
    assert 0.0 <= d <= 1.0
    assert d == ks_statistic(b, a)
    assert d == pytest.approx(brute_d(a, b), abs=1e-15)


@pytest.mark.parametrize("n", [3, 5, 8])
def test_permutation_p_vs_exhaustive(n):
    rng = np.random.default_rng(n)
    a = rng.normal(0, 1, n).round(1)
    b = rng.normal(0.8, 1, n).round(1)
    exact = exhaustive_p(a, b)
    res = ks_two_sample(a, b, method="permutation", n_permutations=10000, seed=1)
    assert abs(res.p_value - exact) <= 0.02
    assert res.method == "permutation"


def test_permutation_deterministic():
    a, b = [1, 2, 3, 4], [3, 4, 5, 6, 7]
    p1 = ks_two_sample(a, b, method="permutation", seed=9).p_value
    p2 = ks_two_sample(a, b, method="permutation", seed=9).p_value
    assert p1 == p2


def test_kolmogorov_q_vs_scipy():
    for lam in np.concatenate((np.linspace(0.01, 3.5, 400), [1.18, 1.1799999, 5.0, 8.0])):
        assert kolmogorov_q(lam) == pytest.approx(float(special.kolmogorov(lam)), abs=1e-12)
    assert kolmogorov_q(0) == 1.0


def test_asymptotic_p_formula():
    d, n1, n2 = 0.3, 40, 60
    ne = n1 * n2 / (n1 + n2)
    lam = (math.sqrt(ne) + 0.12 + 0.11 / math.sqrt(ne)) * d
    assert ks_asymptotic_p(d, n1, n2) == pytest.approx(float(special.kolmogorov(lam)), abs=1e-12)


def test_identical_samples():
    r = ks_two_sample([1, 2, 3], [1, 2, 3])
    assert r.d_stat == 0.0 and r.p_value == 1.0


def test_ks_errors():
    with pytest.raises(ValueError):
        ks_two_sample([], [1])
    with pytest.raises(ConfigError):
        ks_two_sample([1], [2], method="bogus")


# ---------------------------------------------------------------- comparison


def recs(pos, neg, key="x"):
    return [{"moc": True, key: v} for v in pos] + [{"moc": False, key: v} for v in neg]


def test_compare_groups_row():
    row = compare_groups(recs([1, 2, 3, None], [4, 5]), "x")
    assert row.pos_mean == 2 and row.pos_median == 2 and row.neg_mean == 4.5
    assert row.ks.n1 == 3 and row.ks.n2 == 2 and row.ks.d_stat == 1.0
    assert row.to_csv_row()["n_pos"] == 3


def test_compare_groups_callable_feature():
    row = compare_groups(recs([1, 2], [3, 4]), lambda r: r["x"] * 2)
    assert row.pos_mean == 3.0


def test_compare_groups_empty():
    with pytest.raises(EmptyGroupError):
        compare_groups(recs([], [1, 2]), "x")
    with pytest.raises(EmptyGroupError):
        compare_groups(recs([1], [None]), "x")


def test_ces_given_fixture_shape():
    # positive bursts give complex support more often; brute-force oracle p <= 0.05
    pos = [0.2, 0.3, 0.25, 0.1, 0.4, 0.15, 0.05, 0.3]
    neg = [0.0, 0.0, 0.0, 0.05, 0.0, 0.0, 0.1, 0.0]
    row = compare_groups(recs(pos, neg, "ces_given"), "ces_given", method="permutation", seed=3)
    exact = exhaustive_p(pos, neg)
    assert row.pos_mean > row.neg_mean
    assert exact <= 0.05 and row.ks.p_value <= 0.05
    assert abs(row.ks.p_value - exact) <= 0.02


def test_histogram_table():
    rows = histogram_table(recs([1, 1.5, 3], [2, None, 2.9]), "x")
    assert rows == [
        {"bin": 1, "pos_count": 2, "neg_count": 0},
        {"bin": 2, "pos_count": 0, "neg_count": 2},
        {"bin": 3, "pos_count": 1, "neg_count": 0},
    ]
    assert histogram_table(recs([], []), "x") == []


def test_replies_given_shift_recovered():
    cfg = with_effects(GeneratorConfig(n_users=200, seed=5, posts_per_burst_mean=8, reply_fraction=0.54,
                                       moc_phrase_rate=0.1), moc_burst_reply_fraction=0.99)
    posts, _ = generate_corpus(cfg)
    records = analyze_corpus(filter_users(build_corpus(posts))).records
    row = compare_groups(records, "replies_given")
    assert row.pos_mean == pytest.approx(7.9, rel=0.10)
    assert row.neg_mean == pytest.approx(4.3, rel=0.10)
    assert row.ks.p_value < 0.01


# ---------------------------------------------------------------- categories


def test_cosine_example():
    assert cosine_distance({"A": 0.5, "B": 0.5}, {"A": 1.0}) == pytest.approx(1 - 0.5 / math.sqrt(0.5))
    assert cosine_distance({"A": 1.0}, {"B": 1.0}) == 1.0
    assert cosine_distance({"A": 0.3, "B": 0.7}, {"B": 0.7, "A": 0.3}) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(ValueError):
        cosine_distance({}, {"A": 1})


def test_category_metrics():
    posts = [orig("a", "u", 0, cat="A"), orig("b", "u", 1, cat="B"),
             reply("c", "u", 2, "x", cat="A"), reply("d", "u", 3, "y", cat="A")]
    m = category_metrics(posts)
    assert m.available and m.profile.n_categories_posts == 2 and m.profile.n_categories_replies == 1
    assert m.cosine_distance == pytest.approx(1 - 0.5 / math.sqrt(0.5))
    # originals tie between A and B; alphabetical tie-break picks A, which matches
    assert m.top_match is True and m.top_tie is True


def test_category_metrics_unavailable():
    m = category_metrics([orig("a", "u", 0, cat="A")])
    assert not m.available and m.cosine_distance is None and m.top_match is None


# ---------------------------------------------------------------- conditioning


def test_parse_condition():
    c = parse_condition("persistence")
    assert (c.feature, c.op, c.threshold) == ("n_posts", ">=", 15.0)
    assert parse_condition("affect_pos_own >= mean").threshold == "mean"
    assert parse_condition("x<2.5").threshold == 2.5
    with pytest.raises(ConfigError):
        parse_condition("x ~ 3")


def test_conditioned_mood_change():
    rs = [{"n_posts": n, "mood_change": m} for n, m in [(20, 1), (30, 0), (15, 1), (3, 0), (5, 1), (2, 0), (1, 0)]]
    r = conditioned_mood_change(rs, "persistence")
    assert r.n_conditioned == 3 and r.n_complement == 4
    assert r.mean_conditioned == pytest.approx(2 / 3) and r.mean_complement == 0.25
    assert r.ratio == pytest.approx((2 / 3) / 0.25)
    assert r.positive_rate_conditioned == pytest.approx(2 / 3)


def test_conditioned_ratio_undefined_and_mean_threshold():
    rs = [{"a": v, "mood_change": m} for v, m in [(1, 1), (2, 1), (3, -1), (10, 2)]]
    r = conditioned_mood_change(rs, "a>=mean")
    assert r.threshold == 4.0 and r.n_conditioned == 1
    assert r.mean_complement == pytest.approx(1 / 3)
    r2 = conditioned_mood_change(rs, "a<3")
    assert r2.mean_complement == 0.5
    r3 = conditioned_mood_change([{"a": 1, "mood_change": 1}, {"a": 0, "mood_change": -1}], "a>0")
    assert r3.ratio is None
    with pytest.raises(EmptyGroupError):
        conditioned_mood_change(rs, "a>100")
