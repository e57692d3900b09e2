import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from peerbursts.errors import CorpusError, ValidationError
from peerbursts.events import (
    FilterConfig,
    PostKind,
    UserTimeline,
    build_corpus,
    filter_users,
    load_corpus,
    parse_posts,
    parse_timestamp,
    post_to_json,
    three_sigma_max_posts,
)

from conftest import orig, reply


def line(**kw):
    base = {"post_id": "p1", "user_id": "u1", "ts": 100, "kind": "original",
            "category": "General", "text": "hello", "anonymous": False}
    base.update(kw)
    return json.dumps({k: v for k, v in base.items() if v is not ...})


def test_valid_original():
    res = parse_posts([line(mood="sad")])
    assert not res.errors
    (p,) = res.posts
    assert p.kind is PostKind.ORIGINAL and p.mood == "sad" and p.timestamp == 100


def test_valid_reply():
    res = parse_posts([line(kind="reply", parent_post_id="p0")])
    assert not res.errors and res.posts[0].is_reply


@pytest.mark.parametrize("bad,msg", [
    (dict(kind="reply"), "without parent"),
    (dict(kind="reply", parent_post_id="p0", mood="sad"), "carries a mood"),
    (dict(kind="reply", parent_post_id="p0", anonymous=True), "anonymous"),
    (dict(parent_post_id="p0"), "carries parent"),
    (dict(mood="grumpy"), "unknown mood"),
    (dict(kind="comment"), "kind"),
    (dict(ts="yesterday"), "unparseable"),
    (dict(ts=True), "bool"),
    (dict(user_id=""), "user_id"),
    (dict(anonymous="no"), "anonymous"),
    (dict(extra=1), "unknown field"),
    (dict(text=...), "missing"),
])
def test_invalid_lines(bad, msg):
    res = parse_posts([line(**bad)])
    assert not res.posts
    assert len(res.errors) == 1 and res.errors[0].line_no == 1
    assert msg in res.errors[0].message


def test_malformed_json_and_blank_lines():
    res = parse_posts(["", line(), "{not json", "   ", line(post_id="p2")])
    assert [p.post_id for p in res.posts] == ["p1", "p2"]
    assert res.n_lines == 3
    assert res.errors[0].line_no == 3 and "malformed" in res.errors[0].message
    assert res.error_rate == pytest.approx(1 / 3)


def test_error_threshold():
    res = parse_posts([line(), "{bad"])
    res.raise_if_over(0.5)
    with pytest.raises(ValidationError) as e:
        res.raise_if_over(0.0)
    assert e.value.n_lines == 2 and "line 2" in str(e.value)


def test_iso_timestamps():
    assert parse_timestamp("2016-01-01T00:00:00Z") == 1451606400
    assert parse_timestamp("2016-01-01T00:00:00") == 1451606400
    assert parse_timestamp("2016-01-01T01:00:00+01:00") == 1451606400
    assert parse_timestamp("2016-01-01T00:00:00.9Z") == 1451606400


def test_post_roundtrip():
    p = orig("a", "u", 5, "hi there", mood="calm", cat="Music")
    q = parse_posts([post_to_json(p)]).posts[0]
    assert q == p
    r = reply("b", "v", 6, "a", "yo", cat="Music")
    assert parse_posts([post_to_json(r)]).posts[0] == r


def test_corpus_threads_and_timelines():
    posts = [orig("a", "u", 10, cat="X"), reply("b", "v", 20, "a", cat="X"),
             reply("c", "u", 15, "a", cat="X"), orig("d", "v", 5)]
    c = build_corpus(posts)
    assert [r.post_id for r in c.threads["a"].replies] == ["c", "b"]
    assert [p.post_id for p in c.timelines["u"].posts] == ["a", "c"]
    assert [p.post_id for p in c.replies_from_others(posts[0])] == ["b"]
    assert c.is_reply_to_other(posts[1]) and not c.is_reply_to_other(posts[2])
    assert c.n_posts == 4


def test_corpus_problems_all_listed():
    posts = [orig("a", "u", 1, cat="X"), orig("a", "u", 2), reply("b", "v", 3, "zz"),
             reply("c", "v", 4, "b2"), reply("b2", "v", 3, "a", cat="X"), reply("d", "v", 5, "a", cat="Y")]
    with pytest.raises(CorpusError) as e:
        build_corpus(posts)
    text = " | ".join(e.value.problems)
    assert "duplicate post_id 'a' at positions 0 and 1" in text
    assert "missing parent 'zz'" in text
    assert "references reply 'b2'" in text
    assert "category 'Y'" in text
    assert len(e.value.problems) == 4


def test_timeline_sort_ties_by_id():
    tl = UserTimeline.from_posts("u", [orig("b", "u", 5), orig("a", "u", 5), orig("c", "u", 1)])
    assert [p.post_id for p in tl.posts] == ["c", "a", "b"]
    assert tl.inter_post_gaps.tolist() == [4.0, 0.0]
    assert tl.median_gap == 2.0
    assert not tl.times.flags.writeable


def test_single_post_timeline():
    tl = UserTimeline.from_posts("u", [orig("a", "u", 5)])
    assert tl.median_gap == 0.0 and tl.active_age == 0.0 and tl.inter_post_gaps.size == 0


def _user(uid, n, n_replies=1, t0=0):
    host = orig(f"{uid}-host", f"{uid}-h", t0)
    posts = [host]
    for i in range(n):
        if i < n_replies:
            posts.append(reply(f"{uid}-{i}", uid, t0 + i + 1, host.post_id))
        else:
            posts.append(orig(f"{uid}-{i}", uid, t0 + i + 1))
    return posts


def test_filter_rules():
    posts = _user("nine", 9) + _user("ten", 10) + _user("big", 2029) + _user("noreply", 12, 0)
    c = filter_users(build_corpus(posts))
    assert set(c.timelines) == {"ten"}
    # threads stay whole even when their author is filtered out
    assert "ten-host" in c.threads and len(c.threads) == build_corpus(posts).threads.__len__()


def test_filter_max_posts_boundary():
    c = build_corpus(_user("a", 2028) + _user("b", 2029))
    assert set(filter_users(c).timelines) == {"a"}


def test_filter_join_date_and_exclusion():
    posts = _user("early", 10, t0=0) + _user("late", 10, t0=1000) + _user("mod", 10, t0=2000)
    rules = FilterConfig.from_dict({"join_date_cutoff": 500, "exclude_user_ids": ["mod"]})
    assert set(filter_users(build_corpus(posts), rules).timelines) == {"late"}


def test_three_sigma_cap():
    sizes = [10] * 30 + [400]
    posts = [p for i, n in enumerate(sizes) for p in _user(f"u{i}", n)]
    c = build_corpus(posts)
    counts = np.array([len(t) for t in c.timelines.values()], dtype=float)
    expected = int(np.floor(counts.mean() + 3 * counts.std()))
    assert three_sigma_max_posts(c) == expected
    kept = filter_users(c, FilterConfig(max_posts_mode="three_sigma"))
    assert "u30" not in kept.timelines and "u0" in kept.timelines


def test_load_corpus(tmp_path, fixture_path):
    c, res = load_corpus(fixture_path)
    assert not res.errors and c.n_posts == res.n_lines


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(0, 10**6), min_size=1, max_size=30))
def test_timeline_invariants(times):
    posts = [orig(f"p{i}", "u", t) for i, t in enumerate(times)]
    tl = UserTimeline.from_posts("u", posts)
    assert np.all(tl.inter_post_gaps >= 0)
    assert tl.active_age == max(times) - min(times)
    assert tl.median_gap == pytest.approx(float(np.median(np.diff(sorted(times)))) if len(times) > 1 else 0.0)
