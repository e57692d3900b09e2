"""Outcome labels per burst: moments of cognitive change, mood change, engagement."""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, asdict
from importlib import resources

import numpy as np

from .bursts import DAY
from .errors import ConfigError, NoMocError
from .moods import N_GROUPS, MoodMap
from .support import LexiconSet, default_lexicon, support_rates

REGEX_PREFIX = "re:"


def normalize_text(text: str) -> str:
    return " ".join(text.lower().split())


class MocPhraseSet:
    """Self-reported-change phrases; plain entries match as normalised substrings,
    entries prefixed with ``re:`` are regular expressions (case-insensitive)."""

    def __init__(self, phrases):
        phrases = tuple(phrases)
        if not phrases:
            raise ConfigError("MOC phrase set must be non-empty")
        self.phrases = phrases
        self._plain = tuple(
            normalize_text(p) for p in phrases if not p.startswith(REGEX_PREFIX)
        )
        patterns = [p[len(REGEX_PREFIX):] for p in phrases if p.startswith(REGEX_PREFIX)]
        self._regex = re.compile("|".join(f"(?:{p})" for p in patterns), re.I) if patterns else None

    def matches(self, text: str) -> bool:
        norm = normalize_text(text)
        if any(p in norm for p in self._plain):
            return True
        return self._regex is not None and self._regex.search(norm) is not None

    def __len__(self):
        return len(self.phrases)

    @classmethod
    def from_json(cls, path) -> "MocPhraseSet":
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
        if not isinstance(data, list) or not all(isinstance(p, str) for p in data):
            raise ConfigError(f"{path}: MOC phrase file must be a JSON list of strings")
        return cls(data)


def default_moc_phrases() -> MocPhraseSet:
    with resources.files("peerbursts.data").joinpath("moc_phrases.json").open(encoding="utf-8") as f:
        return MocPhraseSet(json.load(f))


def load_moc_phrases(path=None) -> MocPhraseSet:
    return default_moc_phrases() if path is None else MocPhraseSet.from_json(path)


def own_posts(burst) -> list:
    return [p for p in burst.posts if p.user_id == burst.user_id]


def detect_moc(burst, phrase_set: MocPhraseSet):
    """(True, index) for the first of the burst owner's posts containing a phrase."""
    for i, p in enumerate(burst.posts):
        if p.user_id == burst.user_id and phrase_set.matches(p.text):
            return True, i
    return False, None


def _originals_with_mood(burst) -> list:
    return [p for p in burst.posts if p.user_id == burst.user_id and p.is_original and p.mood is not None]


def mood_change(burst, mood_map: MoodMap) -> int:
    """Group of the last original minus group of the first; 0 with fewer than two."""
    origs = _originals_with_mood(burst)
    if len(origs) < 2:
        return 0
    return mood_map.group_of(origs[-1].mood) - mood_map.group_of(origs[0].mood)


def engagement(burst, corpus) -> float:
    """Replies on other users' threads over all of the user's own posts in the burst."""
    own = own_posts(burst)
    if not own:
        return 0.0
    return sum(1 for p in own if corpus.is_reply_to_other(p)) / len(own)


@dataclass(frozen=True)
class BurstOutcome:
    user_id: str
    burst_index: int
    n_posts: int
    n_originals: int
    span_days: float
    moc: bool
    moc_post_index: int | None
    moc_position_frac: float | None
    posts_before_moc: int | None
    mood_change: int
    mood_change_valid: bool
    first_mood_group: int | None
    engagement: float
    replies_given: int
    replies_received: int
    replies_received_per_post: float
    starts_on_reply: bool
    ends_on_reply: bool
    mean_word_count: float

    def to_dict(self) -> dict:
        return dict(vars(self))  # flat scalars; asdict's deep copy is slow here


def label_burst(burst, corpus, phrase_set: MocPhraseSet) -> BurstOutcome:
    own = own_posts(burst)
    moc, idx = detect_moc(burst, phrase_set)
    frac = None
    if moc:
        frac = idx / (len(burst.posts) - 1) if len(burst.posts) > 1 else 0.0
    origs = _originals_with_mood(burst)
    mm = corpus.mood_map
    user_originals = [p for p in own if p.is_original]
    received = sum(len(corpus.replies_from_others(p)) for p in user_originals)
    given = sum(1 for p in own if corpus.is_reply_to_other(p))
    return BurstOutcome(
        user_id=burst.user_id,
        burst_index=burst.index,
        n_posts=len(own),
        n_originals=len(user_originals),
        span_days=burst.span / DAY,
        moc=moc,
        moc_post_index=idx,
        moc_position_frac=frac,
        posts_before_moc=idx,
        mood_change=mood_change(burst, mm),
        mood_change_valid=len(origs) >= 2,
        first_mood_group=mm.group_of(origs[0].mood) if origs else None,
        engagement=given / len(own) if own else 0.0,
        replies_given=given,
        replies_received=received,
        replies_received_per_post=received / len(user_originals) if user_originals else 0.0,
        starts_on_reply=burst.posts[0].is_reply,
        ends_on_reply=burst.posts[-1].is_reply,
        mean_word_count=float(np.mean([len(p.text.split()) for p in own])) if own else 0.0,
    )


@dataclass(frozen=True)
class CohortSummary:
    n_users: int
    n_bursts: int
    n_positive_bursts: int
    pct_users_with_moc: float
    pct_bursts_with_moc: float
    pct_zero_reply_posts: float
    mean_moc_position_frac: float | None
    mean_posts_before_moc: float | None
    start_on_reply_rate: dict
    end_on_reply_rate: dict
    initial_mood_distribution: dict

    def to_dict(self) -> dict:
        return asdict(self)


def _rate(flags) -> float | None:
    flags = list(flags)
    return sum(flags) / len(flags) if flags else None


def _mood_distribution(outcomes) -> list:
    counts = [0] * N_GROUPS
    for o in outcomes:
        if o.first_mood_group is not None:
            counts[o.first_mood_group - 1] += 1
    total = sum(counts)
    return [c / total if total else 0.0 for c in counts]


def cohort_summary(corpus, outcomes: dict) -> CohortSummary:
    outs = list(outcomes.values())
    pos = [o for o in outs if o.moc]
    neg = [o for o in outs if not o.moc]
    users = {o.user_id for o in outs}
    moc_users = {o.user_id for o in pos}
    originals = [p for tl in corpus.timelines.values() for p in tl.posts if p.is_original]
    zero = sum(1 for p in originals if not corpus.replies_from_others(p))
    return CohortSummary(
        n_users=len(users),
        n_bursts=len(outs),
        n_positive_bursts=len(pos),
        pct_users_with_moc=100.0 * len(moc_users) / len(users) if users else 0.0,
        pct_bursts_with_moc=100.0 * len(pos) / len(outs) if outs else 0.0,
        pct_zero_reply_posts=100.0 * zero / len(originals) if originals else 0.0,
        mean_moc_position_frac=float(np.mean([o.moc_position_frac for o in pos])) if pos else None,
        mean_posts_before_moc=float(np.mean([o.posts_before_moc for o in pos])) if pos else None,
        start_on_reply_rate={
            "positive": _rate(o.starts_on_reply for o in pos),
            "negative": _rate(o.starts_on_reply for o in neg),
        },
        end_on_reply_rate={
            "positive": _rate(o.ends_on_reply for o in pos),
            "negative": _rate(o.ends_on_reply for o in neg),
        },
        initial_mood_distribution={
            "positive": _mood_distribution(pos),
            "negative": _mood_distribution(neg),
        },
    )


def label_corpus(corpus, bursts_by_user: dict, phrase_set: MocPhraseSet | None = None):
    """Label every burst; returns ({(user_id, index): BurstOutcome}, CohortSummary)."""
    phrase_set = phrase_set or default_moc_phrases()
    outcomes = {}
    for uid in sorted(bursts_by_user):
        for b in bursts_by_user[uid]:
            outcomes[b.key] = label_burst(b, corpus, phrase_set)
    return outcomes, cohort_summary(corpus, outcomes)


# ---------------------------------------------------------------- pre/post MOC


@dataclass(frozen=True)
class SegmentStats:
    posts: tuple
    engagement: float | None
    ses_given: float
    ces_given: float
    ns_given: float

    @property
    def empty(self) -> bool:
        return not self.posts


@dataclass(frozen=True)
class PrePostSplit:
    user_id: str
    moc_post: object
    pre: SegmentStats
    post: SegmentStats


def _segment_stats(posts, corpus, lexicons) -> SegmentStats:
    posts = tuple(posts)
    given = [p for p in posts if corpus.is_reply_to_other(p)]
    rates = support_rates([p.text for p in given], lexicons)
    return SegmentStats(
        posts=posts,
        engagement=len(given) / len(posts) if posts else None,
        ses_given=rates.ses,
        ces_given=rates.ces,
        ns_given=rates.ns,
    )


def first_moc_position(bursts, outcomes: dict) -> int | None:
    for b in bursts:
        o = outcomes[b.key]
        if o.moc:
            return b.first_position + o.moc_post_index
    return None


def split_pre_post_moc(timeline, bursts, outcomes: dict, corpus, lexicons: LexiconSet | None = None) -> PrePostSplit:
    """Split the user's whole timeline at their first MOC post (which belongs to neither side)."""
    lexicons = lexicons or default_lexicon()
    pos = first_moc_position(bursts, outcomes)
    if pos is None:
        raise NoMocError(timeline.user_id)
    posts = timeline.posts
    return PrePostSplit(
        user_id=timeline.user_id,
        moc_post=posts[pos],
        pre=_segment_stats(posts[:pos], corpus, lexicons),
        post=_segment_stats(posts[pos + 1 :], corpus, lexicons),
    )
