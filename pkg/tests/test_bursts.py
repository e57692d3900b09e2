import math
import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from peerbursts.bursts import (
    DAY,
    MONTH,
    SegmentationConfig,
    burst_meta,
    burstiness,
    burstiness_value,
    frange,
    months_active,
    segment_bursts,
    segment_corpus,
    sweep_n,
)
from peerbursts.errors import ConfigError
from peerbursts.events import UserTimeline, build_corpus

from conftest import MIN, orig


def naive_median(xs):
    xs = sorted(xs)
    n = len(xs)
    if n == 0:
        return 0.0
    return xs[n // 2] if n % 2 else (xs[n // 2 - 1] + xs[n // 2]) / 2


def naive_segments(times, n_mult):
    """Quadratic reference: posts i < j share a burst iff no gap between them exceeds
    the threshold. Returns bursts as lists of positions."""
    times = sorted(times)
    gaps = [b - a for a, b in zip(times, times[1:])]
    thr = n_mult * naive_median(gaps)
    label = list(range(len(times)))
    for i in range(len(times)):
        for j in range(i + 1, len(times)):
            if all(g <= thr for g in gaps[i:j]):
                label[j] = label[i] if label[j] == j else min(label[j], label[i])
    groups = {}
    for pos, lab in enumerate(label):
        groups.setdefault(lab, []).append(pos)
    return sorted(groups.values())


def tl_of(times, uid="u"):
    return UserTimeline.from_posts(uid, [orig(f"p{i:04d}", uid, t) for i, t in enumerate(times)])


def positions(bursts):
    return [list(range(b.first_position, b.last_position + 1)) for b in bursts]


def random_times(rng, n):
    t, out = 0, []
    for _ in range(n):
        out.append(t)
        t += int(rng.choice([rng.randint(0, 300), rng.randint(0, 5 * 10**5), rng.randint(0, 50)]))
    return out


def test_oracle_agreement_random():
    rng = random.Random(1)
    for _ in range(300):
        times = random_times(rng, rng.randint(1, 40))
        n = rng.choice([1, 2, 5, 75, 0.5])
        assert positions(segment_bursts(tl_of(times), SegmentationConfig(n))) == naive_segments(times, n)


def test_example_split():
    # gaps 1,1,1,1000 min: median 1 min, threshold 75 min
    times = [0, MIN, 2 * MIN, 3 * MIN, 1003 * MIN]
    bursts = segment_bursts(tl_of(times))
    assert [len(b) for b in bursts] == [4, 1]
    assert bursts[1].index == 1 and bursts[1].first_position == 4


def test_gap_equal_to_threshold_does_not_break():
    times = [0, 60, 120, 120 + 60 * 75]
    assert len(segment_bursts(tl_of(times))) == 1
    assert len(segment_bursts(tl_of(times[:3] + [120 + 60 * 75 + 1]))) == 2


def test_even_median_is_midpoint():
    # gaps 10, 20, 30, 4000: median 25, threshold 2*25 = 50
    tl = tl_of([0, 10, 30, 60, 4060])
    assert tl.median_gap == 25.0
    assert [len(b) for b in segment_bursts(tl, SegmentationConfig(2.0))] == [4, 1]


def test_single_and_empty():
    assert [len(b) for b in segment_bursts(tl_of([7]))] == [1]
    assert segment_bursts(UserTimeline.from_posts("u", [])) == []


def test_zero_median_splits_every_positive_gap():
    tl = tl_of([0, 0, 0, 5, 5])
    assert [len(b) for b in segment_bursts(tl)] == [3, 2]


def test_bad_multiplier():
    with pytest.raises(ConfigError):
        SegmentationConfig(0)
    with pytest.raises(ConfigError):
        SegmentationConfig(75, boundary_rule="gap_lt_threshold")


@settings(max_examples=150, deadline=None)
@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=40), st.sampled_from([1.0, 3.0, 75.0]))
def test_partition_property(times, n):
    bursts = segment_bursts(tl_of(times), SegmentationConfig(n))
    flat = [p for b in bursts for p in b.posts]
    assert [p.post_id for p in flat] == [p.post_id for p in tl_of(times).posts]
    assert [b.index for b in bursts] == list(range(len(bursts)))
    thr = n * tl_of(times).median_gap
    for b in bursts:
        assert np.all(b.intra_gaps <= thr)
    for cur, nxt in zip(bursts, bursts[1:]):
        assert nxt.start - cur.end > thr


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(0, 10**6), min_size=2, max_size=40), st.floats(0.1, 50), st.floats(0, 100))
def test_coarsening(times, n1, extra):
    tl = tl_of(times)
    fine = segment_bursts(tl, SegmentationConfig(n1))
    coarse = segment_bursts(tl, SegmentationConfig(n1 + extra))
    assert len(coarse) <= len(fine)
    spans = [(b.first_position, b.last_position) for b in coarse]
    for b in fine:
        assert any(s <= b.first_position and b.last_position <= e for s, e in spans)


# ---------------------------------------------------------------- burstiness


def test_burstiness_values():
    assert burstiness_value(60, 600) == pytest.approx(0.9, abs=1e-12)
    assert burstiness_value(2.69, 9.6 * 24 * 60) == pytest.approx(1 - 2.69 / 13824, abs=1e-12)
    assert 1 - 2.69 / 13824 >= 0.99
    assert burstiness_value(5, 10, n_bursts=1) == 0.0
    assert burstiness_value(10, 5) == 0.0
    assert burstiness_value(0, 0) == 0.0


def test_burstiness_report():
    # two bursts of three posts, 1 min apart inside, 10 days between
    t = [0, 60, 120, 120 + 10 * 86400, 180 + 10 * 86400, 240 + 10 * 86400]
    tl = tl_of(t)
    bs = segment_bursts(tl)
    r = burstiness(tl, bs)
    assert r.n_bursts == 2 and r.mean_intra == 60 and r.mean_inter == 10 * 86400
    assert r.burstiness == pytest.approx(1 - 60 / 864000)
    assert r.bursts_per_month == pytest.approx(2 / ((240 + 10 * 86400) / MONTH))


def test_months_active_floor():
    assert months_active(tl_of([0, 10])) == pytest.approx(DAY / MONTH)


def test_burst_meta_pooled_means():
    posts = [orig(f"a{i}", "a", t) for i, t in enumerate([0, 10, 30, 10**6, 10**6 + 5])]
    posts += [orig(f"b{i}", "b", t) for i, t in enumerate([0, 100])]
    c = build_corpus(posts)
    m = burst_meta(segment_corpus(c, SegmentationConfig(2.0)))
    # user a: gaps 10,20,999970,5 -> median 15, thr 30 -> bursts [3, 2]; user b: one burst of 2
    assert m.n == 3 and m.n_users == 2
    assert m.mean_posts == pytest.approx(7 / 3) and m.median_posts == 2
    assert m.mean_intra == pytest.approx((10 + 20 + 5 + 100) / 4)
    assert m.mean_inter == pytest.approx(10**6 - 30)
    assert m.ratio_inter_intra == pytest.approx((10**6 - 30) / 33.75)
    assert m.mean_bursts_per_user == 1.5


def test_burst_meta_empty():
    m = burst_meta({})
    assert m.empty and m.n == 0


# ---------------------------------------------------------------- sweep


def naive_rate(times, n):
    bursts = naive_segments(times, n)
    age = max(max(times) - min(times), DAY)
    return len(bursts) / (age / MONTH)


def test_sweep_matches_segmentation():
    rng = random.Random(3)
    posts = []
    users = {}
    for u in range(12):
        times = random_times(rng, rng.randint(1, 30))
        users[f"u{u}"] = times
        posts += [orig(f"u{u}-{i}", f"u{u}", t) for i, t in enumerate(times)]
    c = build_corpus(posts)
    ns = [0.5, 1, 2, 10, 75, 75.5, 150]
    pts = sweep_n(c, ns)
    for pt, n in zip(pts, ns):
        rates = [naive_rate(users[u], n) for u in sorted(users)]
        assert pt.mean_bursts_per_month == pytest.approx(np.mean(rates), rel=1e-12)
        assert pt.std_bursts_per_month == pytest.approx(np.std(rates), rel=1e-9, abs=1e-12)
    means = [p.mean_bursts_per_month for p in pts]
    assert all(a >= b for a, b in zip(means, means[1:]))


def test_sweep_validation():
    c = build_corpus([orig("a", "u", 0), orig("b", "u", 5)])
    with pytest.raises(ConfigError):
        sweep_n(c, [5, 2])
    with pytest.raises(ConfigError):
        sweep_n(c, [0, 2])
    assert len(sweep_n(c, [75])) == 1


def test_frange_inclusive():
    assert frange(1, 150, 1)[-1] == 150 and len(frange(1, 150, 1)) == 150
    assert frange(0.1, 0.3, 0.1) == pytest.approx([0.1, 0.2, 0.3])
    assert math.isclose(frange(75, 100, 0.5)[-1], 100)
