import sys
from importlib import resources
from pathlib import Path

import pytest

from peerbursts.events import Post, PostKind, build_corpus

ROOT = Path(__file__).resolve().parents[1]
sys.path.insert(0, str(ROOT / "scripts"))

FIXTURE = Path(str(resources.files("peerbursts.data").joinpath("fixture_20users.jsonl")))
MIN = 60
DAY = 86400


def orig(pid, uid, ts, text="", mood=None, cat="General"):
    return Post(pid, uid, ts, PostKind.ORIGINAL, cat, text, None, mood, False)


def reply(pid, uid, ts, parent, text="", cat="General"):
    return Post(pid, uid, ts, PostKind.REPLY, cat, text, parent, None, False)


def corpus_of(posts):
    return build_corpus(posts)


def timeline_posts(uid, times, kinds=None, texts=None, moods=None, host="host"):
    """A user's posts at the given times. Replies go to a shared original by ``host``,
    which is included in the returned list (first element) at time 0."""
    out = [orig(f"{host}-root", host, 0)]
    for i, t in enumerate(times):
        k = kinds[i] if kinds else "o"
        text = texts[i] if texts else ""
        if k == "r":
            out.append(reply(f"{uid}-{i}", uid, t, f"{host}-root", text))
        else:
            out.append(orig(f"{uid}-{i}", uid, t, text, moods[i] if moods else None))
    return out


@pytest.fixture(scope="session")
def fixture_path():
    return FIXTURE


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
