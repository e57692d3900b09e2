"""End-to-end analysis: ingest, filter, segment, label, classify, compare, write."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import os
import tempfile
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import __version__
from .bursts import (
    DAY,
    SegmentationConfig,
    burst_meta,
    burstiness,
    frange,
    segment_corpus,
    sweep_n,
)
from .errors import ConfigError, EmptyGroupError
from .events import Corpus, FilterConfig, build_corpus, filter_users, read_posts
from .moods import MoodMap, load_mood_map
from .outcomes import MocPhraseSet, label_corpus, load_moc_phrases, split_pre_post_moc
from .stats import (
    ASYMPTOTIC,
    CSV_COLUMNS,
    NAMED_CONDITIONS,
    category_metrics,
    compare_groups,
    conditioned_mood_change,
    histogram_table,
    ks_two_sample,
)
from .support import LexiconSet, burst_support_profile, load_lexicon

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_EMPTY_GROUP = 3

# comparison feature name -> record key
FEATURES = {
    "replies_given": "replies_given",
    "engagement": "engagement",
    "replies_received_per_post": "replies_received_per_post",
    "replies_received": "replies_received",
    "burst_length": "n_posts",
    "span_days": "span_days",
    "word_count": "mean_word_count",
    "n_categories_posts": "n_categories_posts",
    "n_categories_replies": "n_categories_replies",
    "post_similarity": "post_similarity",
    "ses_given": "ses_given",
    "ces_given": "ces_given",
    "ns_given": "ns_given",
    "ses_received": "ses_received",
    "ces_received": "ces_received",
    "ns_received": "ns_received",
    "affect_pos_own": "affect_pos_own",
    "affect_neg_own": "affect_neg_own",
    "affect_pos_received": "affect_pos_received",
    "affect_neg_received": "affect_neg_received",
}
DEFAULT_FEATURES = (
    "replies_given", "engagement", "replies_received_per_post", "burst_length", "word_count",
    "n_categories_posts", "n_categories_replies", "post_similarity",
    "ses_given", "ces_given", "ns_given", "ses_received", "ces_received", "ns_received",
    "affect_pos_own", "affect_neg_own", "affect_pos_received", "affect_neg_received",
)
DEFAULT_CONDITIONS = tuple(NAMED_CONDITIONS)
HISTOGRAM_FEATURES = ("n_categories_posts", "n_categories_replies")
PRE_POST_FEATURES = ("engagement", "ses_given", "ces_given", "ns_given")


@dataclass(frozen=True)
class RunConfig:
    input: str | None = None
    out_dir: str = "out"
    n_multiplier: float = 75.0
    filter: FilterConfig = field(default_factory=FilterConfig)
    lexicon_path: str | None = None
    moc_phrases_path: str | None = None
    mood_map_path: str | None = None
    features: tuple = DEFAULT_FEATURES
    conditions: tuple = DEFAULT_CONDITIONS
    sweep_range: tuple = (1.0, 150.0, 1.0)
    formats: frozenset = frozenset({"csv", "json"})
    max_error_rate: float = 0.0
    ks_method: str = ASYMPTOTIC
    write_intermediates: bool = True

    def __post_init__(self):
        unknown = [f for f in self.features if f not in FEATURES]
        if unknown:
            raise ConfigError(f"unknown feature(s) {unknown}; choose from {sorted(FEATURES)}")
        bad = set(self.formats) - {"csv", "json"}
        if bad:
            raise ConfigError(f"unknown report format(s) {sorted(bad)}")
        if not 0 <= self.max_error_rate <= 1:
            raise ConfigError("max_error_rate must lie in [0, 1]")
        SegmentationConfig(self.n_multiplier)

    def canonical(self) -> dict:
        """Settings that determine the report (paths replaced by file digests)."""
        return {
            "n_multiplier": self.n_multiplier,
            "filter": self.filter.to_dict(),
            "lexicon": _file_digest(self.lexicon_path),
            "moc_phrases": _file_digest(self.moc_phrases_path),
            "mood_map": _file_digest(self.mood_map_path),
            "features": list(self.features),
            "conditions": list(self.conditions),
            "sweep_range": list(self.sweep_range),
            "max_error_rate": self.max_error_rate,
            "ks_method": self.ks_method,
        }


def _file_digest(path) -> str | None:
    if path is None:
        return None
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def config_hash(cfg: RunConfig, input_digest: str | None) -> str:
    blob = json.dumps({"config": cfg.canonical(), "input": input_digest}, sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


# ---------------------------------------------------------------- analysis


@dataclass
class Analysis:
    corpus: Corpus
    bursts: dict
    outcomes: dict
    cohort: object
    records: list
    burstiness: dict
    meta: object


def burst_records(corpus: Corpus, bursts: dict, outcomes: dict, lexicons: LexiconSet) -> list:
    """One flat feature dict per burst, in (user_id, burst_index) order."""
    records = []
    for uid in sorted(bursts):
        for b in bursts[uid]:
            rec = outcomes[b.key].to_dict()
            rec.update(vars(burst_support_profile(b, corpus, lexicons)))
            cm = category_metrics(b.posts)
            rec["n_categories_posts"] = cm.profile.n_categories_posts
            rec["n_categories_replies"] = cm.profile.n_categories_replies
            rec["post_similarity"] = cm.cosine_distance
            rec["top_match"] = cm.top_match
            rec["top_tie"] = cm.top_tie
            records.append(rec)
    return records


def analyze_corpus(corpus: Corpus, n_multiplier: float = 75.0, lexicons: LexiconSet | None = None,
                   phrase_set: MocPhraseSet | None = None) -> Analysis:
    lexicons = lexicons or load_lexicon()
    phrase_set = phrase_set or load_moc_phrases()
    bursts = segment_corpus(corpus, SegmentationConfig(n_multiplier))
    outcomes, cohort = label_corpus(corpus, bursts, phrase_set)
    records = burst_records(corpus, bursts, outcomes, lexicons)
    reports = {uid: burstiness(corpus.timelines[uid], bs) for uid, bs in bursts.items()}
    return Analysis(corpus, bursts, outcomes, cohort, records, reports, burst_meta(bursts))


def comparison_table(records, features=DEFAULT_FEATURES, method=ASYMPTOTIC, seed=0):
    """Rows for every feature; returns (rows, notices). Raises EmptyGroupError when
    there are no positive (or no negative) bursts at all."""
    pos = sum(1 for r in records if r["moc"])
    if pos == 0:
        raise EmptyGroupError("positive", "comparison table")
    if pos == len(records):
        raise EmptyGroupError("negative", "comparison table")
    rows, notices = [], []
    for name in features:
        key = FEATURES[name]
        try:
            row = compare_groups(records, key, method=method, seed=seed)
        except EmptyGroupError as e:
            notices.append(f"feature {name} omitted: {e}")
            continue
        rows.append({**row.to_csv_row(), "feature": name})
    return rows, notices


def robustness_table(records, conditions=DEFAULT_CONDITIONS):
    rows, notices = [], []
    for spec in conditions:
        try:
            res = conditioned_mood_change(records, spec)
        except EmptyGroupError as e:
            notices.append(f"condition {spec} omitted: {e}")
            continue
        d = res.to_dict()
        ks = d.pop("ks")
        rows.append({"name": spec, **d, "d_stat": ks["d_stat"], "p_value": ks["p_value"]})
    return rows, notices


def pre_post_moc_table(analysis: Analysis, lexicons: LexiconSet):
    """Per-user feature values before vs after the first MOC, KS across users."""
    pre = {f: [] for f in PRE_POST_FEATURES}
    post = {f: [] for f in PRE_POST_FEATURES}
    n_users = 0
    for uid, bs in analysis.bursts.items():
        if not any(analysis.outcomes[b.key].moc for b in bs):
            continue
        n_users += 1
        split = split_pre_post_moc(analysis.corpus.timelines[uid], bs, analysis.outcomes,
                                   analysis.corpus, lexicons)
        for side, seg in ((pre, split.pre), (post, split.post)):
            if seg.empty:
                continue
            for f in PRE_POST_FEATURES:
                side[f].append(getattr(seg, f))
    rows = []
    for f in PRE_POST_FEATURES:
        a, b = pre[f], post[f]
        if not a or not b:
            continue
        ks = ks_two_sample(a, b)
        rows.append({
            "feature": f,
            "pre_mean": float(np.mean(a)), "pre_median": float(np.median(a)),
            "post_mean": float(np.mean(b)), "post_median": float(np.median(b)),
            "d_stat": ks.d_stat, "p_value": ks.p_value, "n_pre": len(a), "n_post": len(b),
        })
    return rows, n_users


def category_summary(analysis: Analysis) -> dict:
    """MOC rate by whether top categories of originals and replies match, per burst,
    plus the same similarity measures aggregated per user."""
    avail = [r for r in analysis.records if r["top_match"] is not None]
    match = [r for r in avail if r["top_match"]]
    other = [r for r in avail if not r["top_match"]]
    users = []
    for uid, bs in analysis.bursts.items():
        cm = category_metrics(analysis.corpus.timelines[uid].posts)
        users.append({
            "moc": any(analysis.outcomes[b.key].moc for b in bs),
            "n_categories_posts": cm.profile.n_categories_posts,
            "n_categories_replies": cm.profile.n_categories_replies,
            "post_similarity": cm.cosine_distance,
        })

    def moc_rate(rs):
        return sum(1 for r in rs if r["moc"]) / len(rs) if rs else None

    def mean_of(rs, key):
        vals = [r[key] for r in rs if r[key] is not None]
        return float(np.mean(vals)) if vals else None

    per_user = {}
    for key in ("n_categories_posts", "n_categories_replies", "post_similarity"):
        per_user[key] = {
            "moc_users_mean": mean_of([u for u in users if u["moc"]], key),
            "other_users_mean": mean_of([u for u in users if not u["moc"]], key),
        }
    return {
        "n_bursts_with_similarity": len(avail),
        "moc_rate_top_match": moc_rate(match),
        "moc_rate_top_mismatch": moc_rate(other),
        "n_top_ties": sum(1 for r in avail if r["top_tie"]),
        "per_user": per_user,
    }


def corpus_summary(raw: Corpus, corpus: Corpus) -> dict:
    ages = np.array([tl.active_age for tl in corpus.timelines.values()]) / DAY
    posts = [p for tl in corpus.timelines.values() for p in tl.posts]
    return {
        "n_users_total": len(raw.timelines),
        "n_users": len(corpus.timelines),
        "n_posts": len(posts),
        "n_originals": sum(1 for p in posts if p.is_original),
        "n_replies": sum(1 for p in posts if p.is_reply),
        "active_age_days_mean": float(ages.mean()) if ages.size else 0.0,
        "active_age_days_median": float(np.median(ages)) if ages.size else 0.0,
    }


def burst_summary(analysis: Analysis) -> dict:
    meta = asdict(analysis.meta)
    meta["empty"] = analysis.meta.empty
    b = np.array([r.burstiness for r in analysis.burstiness.values()])
    meta["burstiness_mean"] = float(b.mean()) if b.size else 0.0
    meta["burstiness_median"] = float(np.median(b)) if b.size else 0.0
    meta["share_users_burstiness_ge_0_99"] = float(np.mean(b >= 0.99)) if b.size else 0.0
    return meta


# ---------------------------------------------------------------- output


def _clean(obj):
    """Replace non-finite floats by None and numpy scalars by Python ones."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        f = float(obj)
        return f if np.isfinite(f) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(_clean(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def csv_text(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(columns), lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: ("" if r.get(k) is None else repr(r[k]) if isinstance(r.get(k), float) else r[k])
                    for k in columns})
    return buf.getvalue()


def sweep_csv(points) -> str:
    return csv_text(
        [{"n": p.n, "mean_bursts_per_month": p.mean_bursts_per_month, "std": p.std_bursts_per_month}
         for p in points],
        ("n", "mean_bursts_per_month", "std"),
    )


def bursts_jsonl(bursts: dict) -> str:
    lines = []
    for uid in sorted(bursts):
        for b in bursts[uid]:
            lines.append(json.dumps({
                "user_id": uid,
                "burst_index": b.index,
                "start": b.start,
                "end": b.end,
                "span_seconds": b.span,
                "n_posts": len(b),
                "first_position": b.first_position,
                "post_ids": [p.post_id for p in b.posts],
            }, sort_keys=True, separators=(",", ":")))
    return "".join(line + "\n" for line in lines)


def records_jsonl(records) -> str:
    return "".join(
        json.dumps(_clean(r), sort_keys=True, separators=(",", ":"), allow_nan=False) + "\n"
        for r in records
    )


ROBUSTNESS_COLUMNS = ("name", "condition", "threshold", "n_conditioned", "n_complement",
                      "mean_conditioned", "mean_complement", "positive_rate_conditioned",
                      "positive_rate_complement", "ratio", "d_stat", "p_value")
PRE_POST_COLUMNS = ("feature", "pre_mean", "pre_median", "post_mean", "post_median",
                    "d_stat", "p_value", "n_pre", "n_post")


@dataclass
class RunResult:
    report: dict
    exit_code: int
    files: list


def run_analyze(cfg: RunConfig) -> RunResult:
    """Full pipeline from a JSONL file to an output directory.

    Raises ValidationError when the input error rate exceeds ``cfg.max_error_rate``.
    """
    if cfg.input is None:
        raise ConfigError("run_analyze needs an input path")
    mood_map: MoodMap = load_mood_map(cfg.mood_map_path)
    lexicons = load_lexicon(cfg.lexicon_path)
    phrase_set = load_moc_phrases(cfg.moc_phrases_path)
    input_digest = _file_digest(cfg.input)
    chash = config_hash(cfg, input_digest)
    seed = int(chash[:16], 16)

    parsed = read_posts(cfg.input, mood_map)
    parsed.raise_if_over(cfg.max_error_rate)
    raw = build_corpus(parsed.posts, mood_map)
    corpus = filter_users(raw, cfg.filter)
    if not corpus.timelines:
        raise EmptyGroupError("users", "analysis (no user survives filtering)")

    analysis = analyze_corpus(corpus, cfg.n_multiplier, lexicons, phrase_set)
    notices = [str(e) for e in parsed.errors]
    exit_code = EXIT_OK
    try:
        comparison, extra = comparison_table(analysis.records, cfg.features, cfg.ks_method, seed)
        notices += extra
    except EmptyGroupError as e:
        comparison = None
        notices.append(f"comparison table omitted: {e}")
        exit_code = EXIT_EMPTY_GROUP
    robustness, extra = robustness_table(analysis.records, cfg.conditions)
    notices += extra
    pre_post, n_moc_users = pre_post_moc_table(analysis, lexicons)
    histograms = {f: histogram_table(analysis.records, f) for f in HISTOGRAM_FEATURES}
    sweep = sweep_n(corpus, frange(*cfg.sweep_range))

    report = {
        "tool": {"name": "peerbursts", "version": __version__},
        "config": cfg.canonical(),
        "config_hash": chash,
        "input_sha256": input_digest,
        "parse": {"n_lines": parsed.n_lines, "n_errors": len(parsed.errors)},
        "corpus": corpus_summary(raw, corpus),
        "bursts": burst_summary(analysis),
        "cohort": analysis.cohort.to_dict(),
        "comparison": comparison,
        "robustness": robustness,
        "pre_post_moc": {"n_users": n_moc_users, "rows": pre_post},
        "category": category_summary(analysis),
        "histograms": histograms,
        "sweep": [asdict(p) for p in sweep],
        "notices": notices,
        "exit_code": exit_code,
    }

    out = Path(cfg.out_dir)
    files = []

    def emit(name, text):
        write_atomic(out / name, text)
        files.append(name)

    if "json" in cfg.formats:
        emit("report.json", dumps(report))
    if "csv" in cfg.formats:
        if comparison is not None:
            emit("comparison.csv", csv_text(comparison, CSV_COLUMNS))
        emit("robustness.csv", csv_text(robustness, ROBUSTNESS_COLUMNS))
        emit("pre_post_moc.csv", csv_text(pre_post, PRE_POST_COLUMNS))
        emit("sweep.csv", sweep_csv(sweep))
        for f, rows in histograms.items():
            emit(f"hist_{f}.csv", csv_text(rows, ("bin", "pos_count", "neg_count")))
    if cfg.write_intermediates:
        emit("bursts.jsonl", bursts_jsonl(analysis.bursts))
        emit("outcomes.jsonl", records_jsonl(analysis.records))
    return RunResult(report, exit_code, files)


def run_sweep(corpus: Corpus, n_from: float = 1.0, n_to: float = 150.0, n_step: float = 1.0,
              out: str | Path | None = None):
    points = sweep_n(corpus, frange(n_from, n_to, n_step))
    if out is not None:
        write_atomic(Path(out), sweep_csv(points))
    return points
