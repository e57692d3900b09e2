"""Personalised burst/break segmentation, burstiness and the N sweep."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .events import Corpus, UserTimeline

DAY = 86400.0
MONTH = 30 * DAY


@dataclass(frozen=True)
class SegmentationConfig:
    n_multiplier: float = 75.0
    boundary_rule: str = "gap_leq_threshold"

    def __post_init__(self):
        if not self.n_multiplier > 0:
            raise ConfigError(f"n_multiplier must be > 0, got {self.n_multiplier}")
        if self.boundary_rule != "gap_leq_threshold":
            raise ConfigError(f"unsupported boundary rule {self.boundary_rule!r}")


@dataclass(frozen=True, eq=False)
class Burst:
    user_id: str
    index: int
    posts: tuple
    first_position: int  # index of posts[0] within the user's timeline
    intra_gaps: np.ndarray = field(repr=False)

    @property
    def start(self) -> int:
        return self.posts[0].timestamp

    @property
    def end(self) -> int:
        return self.posts[-1].timestamp

    @property
    def span(self) -> float:
        return float(self.end - self.start)

    @property
    def last_position(self) -> int:
        return self.first_position + len(self.posts) - 1

    def __len__(self) -> int:
        return len(self.posts)

    @property
    def key(self):
        return (self.user_id, self.index)


def threshold(timeline: UserTimeline, n_multiplier: float) -> float:
    return n_multiplier * timeline.median_gap


def segment_bursts(timeline: UserTimeline, cfg: SegmentationConfig | None = None) -> list:
    """Split a timeline wherever a gap exceeds N times the user's median gap.

    A gap equal to the threshold keeps both posts in the same burst.
    """
    cfg = cfg or SegmentationConfig()
    if not timeline.posts:
        return []
    gaps = timeline.inter_post_gaps
    breaks = np.flatnonzero(gaps > threshold(timeline, cfg.n_multiplier))
    starts = np.concatenate(([0], breaks + 1)).tolist()
    ends = np.concatenate((breaks + 1, [len(timeline.posts)])).tolist()
    return [
        Burst(timeline.user_id, i, timeline.posts[s:e], s, gaps[s : e - 1])
        for i, (s, e) in enumerate(zip(starts, ends))
    ]


def segment_corpus(corpus: Corpus, cfg: SegmentationConfig | None = None) -> dict:
    cfg = cfg or SegmentationConfig()
    return {uid: segment_bursts(tl, cfg) for uid, tl in corpus.timelines.items()}


def boundaries(bursts) -> list:
    """Timeline positions of the last post of every burst except the final one."""
    return [b.last_position for b in bursts[:-1]]


# ---------------------------------------------------------------- burstiness


@dataclass(frozen=True)
class BurstinessReport:
    user_id: str
    mean_intra: float
    mean_inter: float
    burstiness: float
    n_bursts: int
    bursts_per_month: float


def burstiness_value(mean_intra: float, mean_inter: float, n_bursts: int = 2) -> float:
    """1 - intra/inter, clamped to [0, 1]; zero for a single burst."""
    if n_bursts < 2 or mean_inter <= 0 or mean_inter <= mean_intra:
        return 0.0
    return 1.0 - mean_intra / mean_inter


def inter_burst_gaps(bursts) -> np.ndarray:
    """End-of-burst to start-of-next idle periods, in seconds."""
    return np.array(
        [nxt.start - cur.end for cur, nxt in zip(bursts, bursts[1:])], dtype=np.float64
    )


def months_active(timeline: UserTimeline) -> float:
    return max(timeline.active_age, DAY) / MONTH


def burstiness(timeline: UserTimeline, bursts) -> BurstinessReport:
    intra = np.concatenate([b.intra_gaps for b in bursts]) if bursts else np.empty(0)
    inter = inter_burst_gaps(bursts)
    mean_intra = float(intra.mean()) if intra.size else 0.0
    mean_inter = float(inter.mean()) if inter.size else 0.0
    n = len(bursts)
    return BurstinessReport(
        user_id=timeline.user_id,
        mean_intra=mean_intra,
        mean_inter=mean_inter,
        burstiness=burstiness_value(mean_intra, mean_inter, n),
        n_bursts=n,
        bursts_per_month=n / months_active(timeline),
    )


# ---------------------------------------------------------------- meta statistics


@dataclass(frozen=True)
class BurstMeta:
    n: int
    n_users: int
    mean_posts: float
    median_posts: float
    mean_span_days: float
    mean_bursts_per_user: float
    mean_intra: float
    mean_inter: float
    ratio_inter_intra: float

    @property
    def empty(self) -> bool:
        return self.n == 0


def burst_meta(bursts_by_user: dict) -> BurstMeta:
    """Aggregate burst sizes and pooled gap means over every user's bursts."""
    all_bursts = [b for bs in bursts_by_user.values() for b in bs]
    users_with_bursts = sum(1 for bs in bursts_by_user.values() if bs)
    if not all_bursts:
        return BurstMeta(0, users_with_bursts, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    sizes = np.array([len(b) for b in all_bursts], dtype=np.float64)
    spans = np.array([b.span for b in all_bursts]) / DAY
    intra = np.concatenate([b.intra_gaps for b in all_bursts])
    inter = np.concatenate([inter_burst_gaps(bs) for bs in bursts_by_user.values()] or [np.empty(0)])
    mean_intra = float(intra.mean()) if intra.size else 0.0
    mean_inter = float(inter.mean()) if inter.size else 0.0
    return BurstMeta(
        n=len(all_bursts),
        n_users=users_with_bursts,
        mean_posts=float(sizes.mean()),
        median_posts=float(np.median(sizes)),
        mean_span_days=float(spans.mean()),
        mean_bursts_per_user=len(all_bursts) / users_with_bursts,
        mean_intra=mean_intra,
        mean_inter=mean_inter,
        ratio_inter_intra=mean_inter / mean_intra if mean_intra > 0 else 0.0,
    )


# ---------------------------------------------------------------- N sweep


@dataclass(frozen=True)
class SweepPoint:
    n: float
    mean_bursts_per_month: float
    std_bursts_per_month: float


def sweep_n(corpus: Corpus, n_values) -> list:
    """Bursts per month per user for each N; std is across users (population)."""
    n_values = np.asarray(list(n_values), dtype=np.float64)
    if n_values.size and (np.any(n_values <= 0) or np.any(np.diff(n_values) < 0)):
        raise ConfigError("n_values must be positive and ascending")
    timelines = list(corpus.timelines.values())
    if not timelines:
        return [SweepPoint(float(n), 0.0, 0.0) for n in n_values]
    rates = np.empty((len(timelines), n_values.size))
    for i, tl in enumerate(timelines):
        sorted_gaps = np.sort(tl.inter_post_gaps)
        # same comparison as segment_bursts: a gap breaks iff gap > n * median
        kept = np.searchsorted(sorted_gaps, n_values * tl.median_gap, side="right")
        n_bursts = 1 + (sorted_gaps.size - kept)
        rates[i] = n_bursts / months_active(tl)
    means = rates.mean(axis=0)
    stds = rates.std(axis=0)
    return [SweepPoint(float(n), float(m), float(s)) for n, m, s in zip(n_values, means, stds)]


def frange(start: float, stop: float, step: float) -> list:
    """Inclusive float range without accumulated drift."""
    if step <= 0:
        raise ConfigError("step must be > 0")
    count = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [start + i * step for i in range(max(count, 0))]
