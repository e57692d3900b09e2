"""Posts, threads, per-user timelines, JSONL ingest and user filtering."""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import ConfigError, CorpusError, ValidationError
from .moods import MoodMap, default_mood_map


class PostKind(str, enum.Enum):
    ORIGINAL = "original"
    REPLY = "reply"


@dataclass(frozen=True, slots=True)
class Post:
    post_id: str
    user_id: str
    timestamp: int  # UTC epoch seconds
    kind: PostKind
    category: str
    text: str = ""
    parent_post_id: str | None = None
    mood: str | None = None
    anonymous: bool = False

    @property
    def is_reply(self) -> bool:
        return self.kind is PostKind.REPLY

    @property
    def is_original(self) -> bool:
        return self.kind is PostKind.ORIGINAL

    def to_record(self) -> dict:
        rec = {
            "post_id": self.post_id,
            "user_id": self.user_id,
            "ts": self.timestamp,
            "kind": self.kind.value,
        }
        if self.parent_post_id is not None:
            rec["parent_post_id"] = self.parent_post_id
        rec["category"] = self.category
        if self.mood is not None:
            rec["mood"] = self.mood
        rec["text"] = self.text
        rec["anonymous"] = self.anonymous
        return rec


def post_to_json(post: Post) -> str:
    return json.dumps(post.to_record(), ensure_ascii=False, separators=(",", ":"))


# ---------------------------------------------------------------- ingest

REQUIRED_FIELDS = ("post_id", "user_id", "ts", "kind", "category", "text", "anonymous")
OPTIONAL_FIELDS = ("parent_post_id", "mood")
ALLOWED_FIELDS = frozenset(REQUIRED_FIELDS + OPTIONAL_FIELDS)


@dataclass(frozen=True)
class LineError:
    line_no: int
    message: str

    def __str__(self):
        return f"line {self.line_no}: {self.message}"


@dataclass
class ParseResult:
    posts: list
    errors: list
    n_lines: int

    @property
    def error_rate(self) -> float:
        return len(self.errors) / self.n_lines if self.n_lines else 0.0

    def raise_if_over(self, threshold: float = 0.0) -> None:
        if self.errors and self.error_rate > threshold:
            raise ValidationError(self.errors, self.n_lines, threshold)


_FRACTION = re.compile(r"\.(\d+)")


def parse_timestamp(value) -> int:
    """Integer epoch seconds or an ISO-8601 string; naive strings are read as UTC."""
    if isinstance(value, bool):
        raise ValueError("ts must be an integer or ISO-8601 string, got bool")
    if isinstance(value, int):
        return value
    if isinstance(value, str):
        s = value.strip()
        if s.endswith(("Z", "z")):
            s = s[:-1] + "+00:00"
        # 3.10's fromisoformat only takes 3 or 6 fraction digits
        s = _FRACTION.sub(lambda m: "." + (m.group(1) + "000000")[:6], s)
        try:
            dt = datetime.fromisoformat(s)
        except ValueError:
            raise ValueError(f"unparseable ts {value!r}") from None
        if dt.tzinfo is None:
            dt = dt.replace(tzinfo=timezone.utc)
        return math.floor(dt.timestamp())
    raise ValueError(f"ts must be an integer or ISO-8601 string, got {type(value).__name__}")


def post_from_record(obj, mood_map: MoodMap | None = None) -> Post:
    """Validate one decoded JSON object against the post schema."""
    if not isinstance(obj, dict):
        raise ValueError(f"expected a JSON object, got {type(obj).__name__}")
    extra = obj.keys() - ALLOWED_FIELDS
    if extra:
        raise ValueError(f"unknown field(s) {sorted(extra)}")
    missing = [k for k in REQUIRED_FIELDS if k not in obj]
    if missing:
        raise ValueError(f"missing field(s) {missing}")

    for key in ("post_id", "user_id"):
        if not isinstance(obj[key], str) or not obj[key]:
            raise ValueError(f"{key} must be a non-empty string")
    for key in ("category", "text"):
        if not isinstance(obj[key], str):
            raise ValueError(f"{key} must be a string")
    if not isinstance(obj["anonymous"], bool):
        raise ValueError("anonymous must be a boolean")
    try:
        kind = PostKind(obj["kind"])
    except ValueError:
        raise ValueError(f"kind must be 'original' or 'reply', got {obj['kind']!r}") from None
    ts = parse_timestamp(obj["ts"])

    parent = obj.get("parent_post_id")
    mood = obj.get("mood")
    if parent is not None and (not isinstance(parent, str) or not parent):
        raise ValueError("parent_post_id must be a non-empty string")
    if mood is not None and not isinstance(mood, str):
        raise ValueError("mood must be a string")

    if kind is PostKind.REPLY:
        if parent is None:
            raise ValueError("reply without parent_post_id")
        if mood is not None:
            raise ValueError("reply carries a mood")
        if obj["anonymous"]:
            raise ValueError("reply marked anonymous")
    else:
        if parent is not None:
            raise ValueError("original post carries parent_post_id")
        if mood is not None:
            mm = mood_map or default_mood_map()
            if mood not in mm:
                raise ValueError(f"unknown mood {mood!r}")

    return Post(
        post_id=obj["post_id"],
        user_id=obj["user_id"],
        timestamp=ts,
        kind=kind,
        category=obj["category"],
        text=obj["text"],
        parent_post_id=parent,
        mood=mood,
        anonymous=obj["anonymous"],
    )


def parse_posts(lines, mood_map: MoodMap | None = None) -> ParseResult:
    """Parse JSONL lines into posts, collecting per-line errors instead of raising.

    Blank lines are skipped and do not count toward the error rate.
    """
    mood_map = mood_map or default_mood_map()
    posts, errors = [], []
    n = 0
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        n += 1
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as e:
            errors.append(LineError(line_no, f"malformed JSON: {e.msg}"))
            continue
        try:
            posts.append(post_from_record(obj, mood_map))
        except ValueError as e:
            errors.append(LineError(line_no, str(e)))
    return ParseResult(posts, errors, n)


def read_posts(path, mood_map: MoodMap | None = None) -> ParseResult:
    with open(path, encoding="utf-8") as f:
        return parse_posts(f, mood_map)


# ---------------------------------------------------------------- corpus


@dataclass(frozen=True)
class Thread:
    original: Post
    replies: tuple = ()

    @property
    def category(self) -> str:
        return self.original.category


def _sort_key(p: Post):
    return (p.timestamp, p.post_id)


@dataclass(frozen=True, eq=False)
class UserTimeline:
    user_id: str
    posts: tuple
    times: np.ndarray = field(repr=False)
    inter_post_gaps: np.ndarray = field(repr=False)
    median_gap: float
    active_age: float

    @classmethod
    def from_posts(cls, user_id: str, posts) -> "UserTimeline":
        ordered = tuple(sorted(posts, key=_sort_key))
        times = np.fromiter((p.timestamp for p in ordered), dtype=np.int64, count=len(ordered))
        gaps = np.diff(times).astype(np.float64)
        times.flags.writeable = False
        gaps.flags.writeable = False
        median = float(np.median(gaps)) if gaps.size else 0.0
        age = float(times[-1] - times[0]) if times.size else 0.0
        return cls(user_id, ordered, times, gaps, median, age)

    def __len__(self) -> int:
        return len(self.posts)

    @property
    def n_originals(self) -> int:
        return sum(1 for p in self.posts if p.is_original)

    @property
    def n_replies(self) -> int:
        return sum(1 for p in self.posts if p.is_reply)


@dataclass(frozen=True, eq=False)
class Corpus:
    timelines: dict
    threads: dict
    mood_map: MoodMap
    posts_by_id: dict = field(repr=False)

    @property
    def n_posts(self) -> int:
        return sum(len(t) for t in self.timelines.values())

    def parent_author(self, reply: Post) -> str | None:
        parent = self.posts_by_id.get(reply.parent_post_id)
        return parent.user_id if parent is not None else None

    def is_reply_to_other(self, post: Post) -> bool:
        return post.is_reply and self.parent_author(post) != post.user_id

    def replies_from_others(self, original: Post) -> list:
        thread = self.threads.get(original.post_id)
        if thread is None:
            return []
        return [r for r in thread.replies if r.user_id != original.user_id]


def build_corpus(posts, mood_map: MoodMap | None = None) -> Corpus:
    """Assemble threads and timelines; raise CorpusError listing every structural problem."""
    mood_map = mood_map or default_mood_map()
    problems = []
    by_id = {}
    first_pos = {}
    for i, p in enumerate(posts):
        if p.post_id in by_id:
            problems.append(
                f"duplicate post_id {p.post_id!r} at positions {first_pos[p.post_id]} and {i}"
            )
            continue
        by_id[p.post_id] = p
        first_pos[p.post_id] = i

    replies_of = {}
    for p in by_id.values():
        if not p.is_reply:
            continue
        parent = by_id.get(p.parent_post_id)
        if parent is None:
            problems.append(f"reply {p.post_id!r} references missing parent {p.parent_post_id!r}")
        elif not parent.is_original:
            problems.append(f"reply {p.post_id!r} references reply {parent.post_id!r}")
        elif parent.category != p.category:
            problems.append(
                f"reply {p.post_id!r} category {p.category!r} differs from thread "
                f"category {parent.category!r}"
            )
        else:
            replies_of.setdefault(parent.post_id, []).append(p)
    if problems:
        raise CorpusError(problems)

    threads = {
        pid: Thread(p, tuple(sorted(replies_of.get(pid, ()), key=_sort_key)))
        for pid, p in by_id.items()
        if p.is_original
    }
    per_user = {}
    for p in by_id.values():
        per_user.setdefault(p.user_id, []).append(p)
    timelines = {uid: UserTimeline.from_posts(uid, per_user[uid]) for uid in sorted(per_user)}
    return Corpus(timelines, threads, mood_map, by_id)


# ---------------------------------------------------------------- filtering

DEFAULT_MAX_POSTS = 2028


@dataclass(frozen=True)
class FilterConfig:
    min_total_posts: int = 10
    max_total_posts: int | None = DEFAULT_MAX_POSTS
    max_posts_mode: str = "fixed"  # or "three_sigma"
    require_one_original_and_one_reply: bool = True
    join_date_cutoff: int | None = None  # epoch seconds; first post must be at/after it
    exclude_user_ids: frozenset = frozenset()

    def __post_init__(self):
        if self.max_posts_mode not in ("fixed", "three_sigma"):
            raise ConfigError(f"max_posts_mode must be 'fixed' or 'three_sigma', got {self.max_posts_mode!r}")
        if self.min_total_posts < 0:
            raise ConfigError("min_total_posts must be >= 0")

    @classmethod
    def from_dict(cls, d: dict) -> "FilterConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown filter option(s) {sorted(unknown)}")
        d = dict(d)
        if d.get("join_date_cutoff") is not None:
            d["join_date_cutoff"] = parse_timestamp(d["join_date_cutoff"])
        if "exclude_user_ids" in d:
            d["exclude_user_ids"] = frozenset(d["exclude_user_ids"] or ())
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "FilterConfig":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f))

    def to_dict(self) -> dict:
        return {
            "min_total_posts": self.min_total_posts,
            "max_total_posts": self.max_total_posts,
            "max_posts_mode": self.max_posts_mode,
            "require_one_original_and_one_reply": self.require_one_original_and_one_reply,
            "join_date_cutoff": self.join_date_cutoff,
            "exclude_user_ids": sorted(self.exclude_user_ids),
        }


def three_sigma_max_posts(corpus: Corpus) -> int:
    counts = np.array([len(t) for t in corpus.timelines.values()], dtype=np.float64)
    if counts.size == 0:
        return 0
    return int(math.floor(counts.mean() + 3.0 * counts.std()))


def filter_users(corpus: Corpus, rules: FilterConfig | None = None) -> Corpus:
    """Keep users passing every rule. Threads stay whole, so removed users' replies
    remain visible as replies from outside the analysed cohort."""
    rules = rules or FilterConfig()
    if rules.max_posts_mode == "three_sigma":
        max_posts = three_sigma_max_posts(corpus)
    else:
        max_posts = rules.max_total_posts

    kept = {}
    for uid, tl in corpus.timelines.items():
        n = len(tl)
        if uid in rules.exclude_user_ids:
            continue
        if n < rules.min_total_posts:
            continue
        if max_posts is not None and n > max_posts:
            continue
        if rules.require_one_original_and_one_reply and (tl.n_originals < 1 or tl.n_replies < 1):
            continue
        if rules.join_date_cutoff is not None and tl.posts[0].timestamp < rules.join_date_cutoff:
            continue
        kept[uid] = tl
    return Corpus(kept, corpus.threads, corpus.mood_map, corpus.posts_by_id)


def load_corpus(path: str | Path, mood_map: MoodMap | None = None, max_error_rate: float = 0.0):
    """Read, validate and assemble a corpus. Returns (corpus, parse_result)."""
    result = read_posts(path, mood_map)
    result.raise_if_over(max_error_rate)
    return build_corpus(result.posts, mood_map), result
