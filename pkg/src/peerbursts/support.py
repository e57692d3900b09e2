"""Phrase-based support-type labels (SES/CES/NS) and keyword affect scoring."""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources

from .errors import ConfigError

TOKEN_RE = re.compile(r"[^\W_]+(?:['’][^\W_]+)*")


def tokenize(text: str) -> list:
    """Lowercased word tokens; punctuation is dropped, inner apostrophes kept."""
    return TOKEN_RE.findall(text.lower())


class SupportLabel(enum.Flag):
    NONE = 0
    SES = enum.auto()
    CES = enum.auto()
    NS = enum.auto()


_SES, _NS = 0, 1
_CACHE_LIMIT = 1 << 20


@dataclass(frozen=True)
class AffectScores:
    pos: float = 0.0
    neg: float = 0.0


@dataclass(frozen=True, eq=False)
class LexiconSet:
    ses_phrases: tuple
    ns_phrases: tuple
    affect_pos: tuple
    affect_neg: tuple
    ces_context_min_tokens: int = 5
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if not self.ses_phrases or not self.ns_phrases:
            raise ConfigError("ses and ns phrase lists must be non-empty")
        if self.ces_context_min_tokens < 1:
            raise ConfigError("ces_context_min_tokens must be >= 1")
        for p in self.ses_phrases + self.ns_phrases:
            if not tokenize(p):
                raise ConfigError(f"phrase {p!r} has no word tokens")

    @classmethod
    def from_dict(cls, d: dict, base: "LexiconSet | None" = None) -> "LexiconSet":
        """Build from the JSON layout; keys missing from ``d`` fall back to ``base``."""
        unknown = set(d) - {"ses", "ns", "affect_pos", "affect_neg", "ces_context_min_tokens"}
        if unknown:
            raise ConfigError(f"unknown lexicon key(s) {sorted(unknown)}")

        def pick(key, attr):
            if key in d:
                return tuple(d[key])
            if base is None:
                raise ConfigError(f"lexicon is missing {key!r}")
            return getattr(base, attr)

        k = d.get("ces_context_min_tokens", base.ces_context_min_tokens if base else 5)
        return cls(
            ses_phrases=pick("ses", "ses_phrases"),
            ns_phrases=pick("ns", "ns_phrases"),
            affect_pos=pick("affect_pos", "affect_pos"),
            affect_neg=pick("affect_neg", "affect_neg"),
            ces_context_min_tokens=int(k),
        )

    @classmethod
    def from_json(cls, path, base: "LexiconSet | None" = None) -> "LexiconSet":
        with open(path, encoding="utf-8") as f:
            return cls.from_dict(json.load(f), base=base or default_lexicon())

    def to_dict(self) -> dict:
        return {
            "ses": list(self.ses_phrases),
            "ns": list(self.ns_phrases),
            "ces_context_min_tokens": self.ces_context_min_tokens,
            "affect_pos": list(self.affect_pos),
            "affect_neg": list(self.affect_neg),
        }

    # -- compiled matchers

    @cached_property
    def _phrase_index(self) -> dict:
        index = {}
        for kind, phrases in ((_SES, self.ses_phrases), (_NS, self.ns_phrases)):
            for p in phrases:
                toks = tuple(tokenize(p))
                index.setdefault(toks[0], []).append((toks, kind))
        return index

    @cached_property
    def _affect_matchers(self):
        return _KeywordMatcher(self.affect_pos), _KeywordMatcher(self.affect_neg)

    @cached_property
    def _token_affect(self) -> dict:
        return {}

    def scan(self, text: str):
        """(support label, affect scores) for one text, memoised by text."""
        hit = self._cache.get(text)
        if hit is None:
            if len(self._cache) >= _CACHE_LIMIT:
                self._cache.clear()
            tokens = tokenize(text)
            hit = self._cache[text] = (_classify_tokens(tokens, self), _affect_tokens(tokens, self))
        return hit

    def classify(self, text: str) -> SupportLabel:
        return self.scan(text)[0]

    def affect(self, text: str) -> "AffectScores":
        return self.scan(text)[1]


class _KeywordMatcher:
    """Exact keywords plus trailing-wildcard prefixes such as ``happi*``."""

    def __init__(self, entries):
        self.exact = set()
        prefixes = []
        for e in entries:
            e = e.strip().lower()
            if e.endswith("*"):
                prefixes.append(e[:-1])
            elif e:
                self.exact.add(e)
        self.prefixes = tuple(sorted(set(prefixes)))
        self._memo = {}

    def __call__(self, token: str) -> bool:
        hit = self._memo.get(token)
        if hit is None:
            hit = token in self.exact or token.startswith(self.prefixes)
            self._memo[token] = hit
        return hit


def _match_spans(tokens, index) -> list:
    spans = []
    for i, tok in enumerate(tokens):
        for phrase, kind in index.get(tok, ()):
            j = i + len(phrase)
            if tuple(tokens[i:j]) == phrase:
                spans.append((i, j, kind))
    # longest match wins an overlap, so "others feel the same way" is not also "same"
    spans.sort(key=lambda s: (-(s[1] - s[0]), s[0]))
    taken = []
    for s in spans:
        if all(s[1] <= t[0] or s[0] >= t[1] for t in taken):
            taken.append(s)
    return taken


def classify_support(text: str, lexicons: LexiconSet) -> SupportLabel:
    """SES when an emotional-support phrase stands (nearly) alone, CES when it comes
    with at least ``ces_context_min_tokens`` tokens of other context, NS for any
    network/instrumental phrase. SES and CES never co-occur."""
    return _classify_tokens(tokenize(text), lexicons)


def _classify_tokens(tokens, lexicons) -> SupportLabel:
    if not tokens:
        return SupportLabel.NONE
    spans = _match_spans(tokens, lexicons._phrase_index)
    label = SupportLabel.NONE
    if any(k == _NS for _, _, k in spans):
        label |= SupportLabel.NS
    if any(k == _SES for _, _, k in spans):
        residual = len(tokens) - sum(e - s for s, e, _ in spans)
        label |= SupportLabel.CES if residual >= lexicons.ces_context_min_tokens else SupportLabel.SES
    return label


def affect_scores(text: str, lexicons: LexiconSet) -> AffectScores:
    return _affect_tokens(tokenize(text), lexicons)


def _affect_tokens(tokens, lexicons) -> AffectScores:
    if not tokens:
        return AffectScores(0.0, 0.0)
    is_pos, is_neg = lexicons._affect_matchers
    memo = lexicons._token_affect
    n_pos = n_neg = 0
    for t in tokens:
        hit = memo.get(t)
        if hit is None:
            hit = memo[t] = (is_pos(t), is_neg(t))
        n_pos += hit[0]
        n_neg += hit[1]
    return AffectScores(100.0 * n_pos / len(tokens), 100.0 * n_neg / len(tokens))


_DEFAULT = None


def default_lexicon() -> LexiconSet:
    global _DEFAULT
    if _DEFAULT is None:
        with resources.files("peerbursts.data").joinpath("lexicon.json").open(encoding="utf-8") as f:
            _DEFAULT = LexiconSet.from_dict(json.load(f))
    return _DEFAULT


def load_lexicon(path=None) -> LexiconSet:
    return default_lexicon() if path is None else LexiconSet.from_json(path)


# ---------------------------------------------------------------- per-burst profile


@dataclass(frozen=True)
class SupportRates:
    ses: float = 0.0
    ces: float = 0.0
    ns: float = 0.0
    n: int = 0


def support_rates(texts, lexicons: LexiconSet) -> SupportRates:
    """Fraction of texts carrying each label; all zero for no texts."""
    labels = [lexicons.classify(t) for t in texts]
    n = len(labels)
    if n == 0:
        return SupportRates()
    return SupportRates(
        ses=sum(1 for l in labels if SupportLabel.SES in l) / n,
        ces=sum(1 for l in labels if SupportLabel.CES in l) / n,
        ns=sum(1 for l in labels if SupportLabel.NS in l) / n,
        n=n,
    )


def mean_affect(texts, lexicons: LexiconSet) -> AffectScores:
    scores = [lexicons.affect(t) for t in texts]
    if not scores:
        return AffectScores()
    n = len(scores)
    return AffectScores(math.fsum(s.pos for s in scores) / n, math.fsum(s.neg for s in scores) / n)


@dataclass(frozen=True)
class BurstSupportProfile:
    ses_given: float
    ces_given: float
    ns_given: float
    ses_received: float
    ces_received: float
    ns_received: float
    affect_pos_own: float
    affect_neg_own: float
    affect_pos_received: float
    affect_neg_received: float
    n_given: int
    n_received: int


def given_replies(burst, corpus) -> list:
    return [p for p in burst.posts if p.user_id == burst.user_id and corpus.is_reply_to_other(p)]


def received_replies(burst, corpus) -> list:
    """Others' replies on the user's originals in this burst, including late ones."""
    out = []
    for p in burst.posts:
        if p.is_original and p.user_id == burst.user_id:
            out.extend(corpus.replies_from_others(p))
    return out


def burst_support_profile(burst, corpus, lexicons: LexiconSet | None = None) -> BurstSupportProfile:
    lexicons = lexicons or default_lexicon()
    given = [p.text for p in given_replies(burst, corpus)]
    received = [p.text for p in received_replies(burst, corpus)]
    own = [p.text for p in burst.posts if p.user_id == burst.user_id]
    g = support_rates(given, lexicons)
    r = support_rates(received, lexicons)
    a_own = mean_affect(own, lexicons)
    a_rec = mean_affect(received, lexicons)
    return BurstSupportProfile(
        ses_given=g.ses,
        ces_given=g.ces,
        ns_given=g.ns,
        ses_received=r.ses,
        ces_received=r.ces,
        ns_received=r.ns,
        affect_pos_own=a_own.pos,
        affect_neg_own=a_own.neg,
        affect_pos_received=a_rec.pos,
        affect_neg_received=a_rec.neg,
        n_given=g.n,
        n_received=r.n,
    )
