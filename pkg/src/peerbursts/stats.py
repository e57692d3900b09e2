"""Two-sample KS test, positive/negative comparison rows, category similarity and
feature-conditioned mood change."""

from __future__ import annotations

import math
import operator
import re
from dataclasses import dataclass, asdict
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import ConfigError, EmptyGroupError

ASYMPTOTIC = "asymptotic"
PERMUTATION = "permutation"


@dataclass(frozen=True)
class KsResult:
    d_stat: float
    p_value: float
    n1: int
    n2: int
    method: str = ASYMPTOTIC

    def to_dict(self) -> dict:
        return asdict(self)


def ks_statistic(a, b) -> float:
    """sup_x |F_a(x) - F_b(x)|, evaluated at every pooled sample point."""
    a = np.sort(np.asarray(a, dtype=np.float64))
    b = np.sort(np.asarray(b, dtype=np.float64))
    if a.size == 0 or b.size == 0:
        raise ValueError("KS needs two non-empty samples")
    z = np.concatenate((a, b))
    fa = np.searchsorted(a, z, side="right") / a.size
    fb = np.searchsorted(b, z, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def kolmogorov_q(lam: float) -> float:
    """Survival function of the Kolmogorov distribution,
    Q(lam) = 2 * sum_{k>=1} (-1)^(k-1) exp(-2 k^2 lam^2).

    Below lam = 1.18 the alternating series converges slowly, so the equivalent
    theta-function form 1 - sqrt(2 pi)/lam * sum exp(-(2k-1)^2 pi^2 / (8 lam^2)) is used.
    """
    if lam <= 0:
        return 1.0
    if lam < 1.18:
        s = 0.0
        for k in range(1, 50):
            term = math.exp(-((2 * k - 1) ** 2) * math.pi**2 / (8 * lam * lam))
            s += term
            if term < 1e-17 * s:
                break
        q = 1.0 - math.sqrt(2 * math.pi) / lam * s
    else:
        q = 0.0
        for k in range(1, 101):
            term = math.exp(-2.0 * k * k * lam * lam)
            q += term if k % 2 else -term
            if term < 1e-17:
                break
        q *= 2.0
    return min(1.0, max(0.0, q))


def ks_asymptotic_p(d: float, n1: int, n2: int) -> float:
    ne = n1 * n2 / (n1 + n2)
    sq = math.sqrt(ne)
    return kolmogorov_q((sq + 0.12 + 0.11 / sq) * d)


def _permutation_p(a, b, d_obs, n_permutations, seed, chunk=1024) -> float:
    pooled = np.concatenate((a, b))
    order = np.argsort(pooled, kind="stable")
    z = pooled[order]
    n1, n = a.size, pooled.size
    # evaluate the ECDF gap only at the last element of each run of ties
    ends = np.flatnonzero(np.append(z[1:] != z[:-1], True))
    base = np.zeros(n, dtype=bool)
    base[:n1] = True
    rng = np.random.default_rng(seed)
    hits = 0
    done = 0
    while done < n_permutations:
        m = min(chunk, n_permutations - done)
        labels = rng.permuted(np.tile(base, (m, 1)), axis=1)
        c1 = np.cumsum(labels, axis=1)[:, ends]
        c2 = (ends + 1)[None, :] - c1
        d = np.max(np.abs(c1 / n1 - c2 / (n - n1)), axis=1)
        hits += int(np.count_nonzero(d >= d_obs - 1e-12))
        done += m
    return (hits + 1) / (n_permutations + 1)


def ks_two_sample(a, b, method: str = ASYMPTOTIC, n_permutations: int = 10000, seed=0) -> KsResult:
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError(f"KS needs two non-empty samples (got n1={a.size}, n2={b.size})")
    d = ks_statistic(a, b)
    if method == ASYMPTOTIC:
        p = ks_asymptotic_p(d, a.size, b.size)
    elif method == PERMUTATION:
        p = _permutation_p(a, b, d, n_permutations, seed)
    else:
        raise ConfigError(f"unknown KS method {method!r}")
    return KsResult(d, p, int(a.size), int(b.size), method)


# ---------------------------------------------------------------- comparison rows

Feature = str | Callable[[Mapping], float]


@dataclass(frozen=True)
class ComparisonRow:
    feature: str
    pos_mean: float
    pos_median: float
    neg_mean: float
    neg_median: float
    ks: KsResult

    def to_csv_row(self) -> dict:
        return {
            "feature": self.feature,
            "pos_mean": self.pos_mean,
            "pos_median": self.pos_median,
            "neg_mean": self.neg_mean,
            "neg_median": self.neg_median,
            "d_stat": self.ks.d_stat,
            "p_value": self.ks.p_value,
            "n_pos": self.ks.n1,
            "n_neg": self.ks.n2,
        }


CSV_COLUMNS = ("feature", "pos_mean", "pos_median", "neg_mean", "neg_median", "d_stat", "p_value", "n_pos", "n_neg")


def _extract(records, feature: Feature):
    if callable(feature):
        name = getattr(feature, "__name__", "feature")
        values = [feature(r) for r in records]
    else:
        name = feature
        values = [r[feature] for r in records]
    return name, [float(v) for v in values if v is not None]


def split_groups(records: Sequence[Mapping], label: str = "moc"):
    pos = [r for r in records if r[label]]
    neg = [r for r in records if not r[label]]
    return pos, neg


def compare_groups(records: Sequence[Mapping], feature: Feature, label: str = "moc",
                   method: str = ASYMPTOTIC, seed=0) -> ComparisonRow:
    """Means, medians and a KS test of one feature between positive and negative records.

    Records whose feature value is None are left out of both groups.
    """
    pos, neg = split_groups(records, label)
    name, pv = _extract(pos, feature)
    _, nv = _extract(neg, feature)
    if not pv:
        raise EmptyGroupError("positive", name)
    if not nv:
        raise EmptyGroupError("negative", name)
    return ComparisonRow(
        feature=name,
        pos_mean=float(np.mean(pv)),
        pos_median=float(np.median(pv)),
        neg_mean=float(np.mean(nv)),
        neg_median=float(np.median(nv)),
        ks=ks_two_sample(pv, nv, method=method, seed=seed),
    )


def histogram_table(records: Sequence[Mapping], feature: str, label: str = "moc") -> list:
    """Integer-binned counts of a feature for positive and negative records."""
    pos, neg = split_groups(records, label)
    _, pv = _extract(pos, feature)
    _, nv = _extract(neg, feature)
    allv = pv + nv
    if not allv:
        return []
    lo, hi = int(math.floor(min(allv))), int(math.floor(max(allv)))
    pc = np.bincount(np.floor(pv).astype(int) - lo, minlength=hi - lo + 1) if pv else np.zeros(hi - lo + 1, int)
    nc = np.bincount(np.floor(nv).astype(int) - lo, minlength=hi - lo + 1) if nv else np.zeros(hi - lo + 1, int)
    return [{"bin": lo + i, "pos_count": int(pc[i]), "neg_count": int(nc[i])} for i in range(hi - lo + 1)]


# ---------------------------------------------------------------- categories


@dataclass(frozen=True)
class CategoryProfile:
    posts: dict  # category -> proportion among originals
    replies: dict  # category -> proportion among replies
    n_categories_posts: int
    n_categories_replies: int


@dataclass(frozen=True)
class CategoryMetrics:
    profile: CategoryProfile
    available: bool
    cosine_distance: float | None
    top_match: bool | None
    top_tie: bool


def _proportions(categories) -> dict:
    counts = {}
    for c in categories:
        counts[c] = counts.get(c, 0) + 1
    total = sum(counts.values())
    return {c: counts[c] / total for c in sorted(counts)}


def cosine_distance(p: Mapping, q: Mapping) -> float:
    """1 - cosine similarity over the union of keys; both vectors must be non-zero."""
    keys = sorted(set(p) | set(q))
    a = np.array([p.get(k, 0.0) for k in keys], dtype=np.float64)
    b = np.array([q.get(k, 0.0) for k in keys], dtype=np.float64)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        raise ValueError("cosine distance undefined for a zero vector")
    return float(min(1.0, max(0.0, 1.0 - float(a @ b) / (na * nb))))


def _top(props: Mapping):
    best = max(props.values())
    winners = sorted(c for c, v in props.items() if v == best)
    return winners[0], len(winners) > 1


def category_metrics(posts) -> CategoryMetrics:
    """Category spread of originals vs replies for one entity (burst or user)."""
    originals = [p.category for p in posts if p.is_original]
    replies = [p.category for p in posts if p.is_reply]
    profile = CategoryProfile(
        posts=_proportions(originals),
        replies=_proportions(replies),
        n_categories_posts=len(set(originals)),
        n_categories_replies=len(set(replies)),
    )
    if not originals or not replies:
        return CategoryMetrics(profile, False, None, None, False)
    top_p, tie_p = _top(profile.posts)
    top_r, tie_r = _top(profile.replies)
    return CategoryMetrics(
        profile=profile,
        available=True,
        cosine_distance=cosine_distance(profile.posts, profile.replies),
        top_match=top_p == top_r,
        top_tie=tie_p or tie_r,
    )


# ---------------------------------------------------------------- conditioning

_OPS = {">=": operator.ge, ">": operator.gt, "<=": operator.le, "<": operator.lt, "==": operator.eq}
_COND_RE = re.compile(r"^\s*([A-Za-z_][A-Za-z0-9_]*)\s*(>=|<=|==|>|<)\s*(mean|median|[-+0-9.eE]+)\s*$")

NAMED_CONDITIONS = {
    "persistence": "n_posts>=15",
    "ces_given": "ces_given>0",
    "ses_given": "ses_given>0",
    "engagement": "engagement>=0.75",
    "affect_pos": "affect_pos_own>=mean",
}


@dataclass(frozen=True)
class Condition:
    feature: str
    op: str
    threshold: float | str

    def __str__(self):
        return f"{self.feature}{self.op}{self.threshold}"

    def resolve(self, records) -> float:
        if isinstance(self.threshold, str):
            values = [float(r[self.feature]) for r in records if r[self.feature] is not None]
            if not values:
                raise EmptyGroupError("all", str(self))
            return float(np.mean(values) if self.threshold == "mean" else np.median(values))
        return float(self.threshold)


def parse_condition(spec: str) -> Condition:
    """Parse ``feature<op>value`` (value may be ``mean`` or ``median``) or a named predicate."""
    spec = NAMED_CONDITIONS.get(spec, spec)
    m = _COND_RE.match(spec)
    if not m:
        raise ConfigError(f"cannot parse condition {spec!r}")
    feature, op, value = m.groups()
    threshold = value if value in ("mean", "median") else float(value)
    return Condition(feature, op, threshold)


@dataclass(frozen=True)
class ConditionedResult:
    condition: str
    threshold: float
    n_conditioned: int
    n_complement: int
    mean_conditioned: float
    mean_complement: float
    positive_rate_conditioned: float
    positive_rate_complement: float
    ratio: float | None
    ks: KsResult

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ks"] = self.ks.to_dict()
        return d


def conditioned_mood_change(records: Sequence[Mapping], condition: Condition | str,
                            outcome: str = "mood_change") -> ConditionedResult:
    """Mood change in bursts meeting a condition vs the rest, ignoring MOC labels."""
    if isinstance(condition, str):
        condition = parse_condition(condition)
    thr = condition.resolve(records)
    op = _OPS[condition.op]
    inside, outside = [], []
    for r in records:
        v = r[condition.feature]
        (inside if v is not None and op(float(v), thr) else outside).append(float(r[outcome]))
    if not inside:
        raise EmptyGroupError("conditioned", str(condition))
    if not outside:
        raise EmptyGroupError("complement", str(condition))
    mc, mo = float(np.mean(inside)), float(np.mean(outside))
    return ConditionedResult(
        condition=str(condition),
        threshold=thr,
        n_conditioned=len(inside),
        n_complement=len(outside),
        mean_conditioned=mc,
        mean_complement=mo,
        positive_rate_conditioned=sum(1 for v in inside if v > 0) / len(inside),
        positive_rate_complement=sum(1 for v in outside if v > 0) / len(outside),
        ratio=mc / mo if mo > 0 else None,
        ks=ks_two_sample(inside, outside),
    )
