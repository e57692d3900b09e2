import json

import pytest

from peerbursts.errors import ConfigError, UnknownMoodError
from peerbursts.moods import MoodGroup, MoodMap, default_mood_map, load_mood_map, mood_group_of

# group sizes and one member per group, read off the published mood table
GROUP_SIZES = {1: 12, 2: 10, 3: 9, 4: 10, 5: 10, 6: 8}
NAMES = ["Sadness", "Inadequacy", "Frustration", "Support", "Relief", "Positivity"]


def test_default_map_shape():
    mm = default_mood_map()
    assert len(mm) == 59
    assert [g.name for g in mm.groups] == NAMES
    assert {g.group_index: len(g.members) for g in mm.groups} == GROUP_SIZES


@pytest.mark.parametrize("label,group", [
    ("heartbroken", 1), ("sad", 1), ("meh", 2), ("nothing", 2), ("disgust", 3),
    ("hopeful", 4), ("supported", 4), ("calm", 5), ("motivated", 5), ("ecstatic", 6), ("energetic", 6),
])
def test_group_lookup(label, group):
    assert mood_group_of(label) == group


def test_unknown_mood():
    with pytest.raises(UnknownMoodError) as e:
        mood_group_of("grumpy")
    assert "grumpy" in str(e.value)
    assert isinstance(e.value, KeyError)


def test_lookup_is_case_sensitive():
    with pytest.raises(UnknownMoodError):
        mood_group_of("Sad")


def test_override_file_roundtrip(tmp_path):
    recs = default_mood_map().to_records()
    recs[0]["members"].append("gloomy")
    p = tmp_path / "moods.json"
    p.write_text(json.dumps(recs))
    mm = load_mood_map(p)
    assert mm.group_of("gloomy") == 1
    assert len(mm) == 60


def test_overlapping_groups_rejected():
    groups = [MoodGroup(i, f"g{i}", frozenset({f"m{i}"})) for i in range(1, 7)]
    groups[1] = MoodGroup(2, "g2", frozenset({"m1"}))
    with pytest.raises(ConfigError, match="m1"):
        MoodMap(groups)


def test_missing_group_rejected():
    groups = [MoodGroup(i, f"g{i}", frozenset({f"m{i}"})) for i in range(1, 6)]
    with pytest.raises(ConfigError):
        MoodMap(groups)
