"""Mood labels and their six ordered valence groups."""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError, UnknownMoodError

N_GROUPS = 6
NEGATIVE_GROUPS = (1, 2, 3)
POSITIVE_GROUPS = (4, 5, 6)


@dataclass(frozen=True)
class MoodGroup:
    group_index: int
    name: str
    members: frozenset


class MoodMap:
    """Lookup from mood label to group; groups must be disjoint and indexed 1..6."""

    def __init__(self, groups):
        groups = sorted(groups, key=lambda g: g.group_index)
        indices = [g.group_index for g in groups]
        if indices != list(range(1, N_GROUPS + 1)):
            raise ConfigError(f"mood map needs groups 1..{N_GROUPS}, got {indices}")
        lookup = {}
        for g in groups:
            for label in g.members:
                if label in lookup:
                    raise ConfigError(
                        f"mood {label!r} is in groups {lookup[label]} and {g.group_index}"
                    )
                lookup[label] = g.group_index
        self.groups = tuple(groups)
        self._lookup = lookup

    def __contains__(self, label) -> bool:
        return label in self._lookup

    def __len__(self) -> int:
        return len(self._lookup)

    def group_of(self, label: str) -> int:
        try:
            return self._lookup[label]
        except KeyError:
            raise UnknownMoodError(label) from None

    def group(self, index: int) -> MoodGroup:
        return self.groups[index - 1]

    def labels(self):
        return sorted(self._lookup)

    @classmethod
    def from_records(cls, records) -> "MoodMap":
        return cls(
            MoodGroup(int(r["index"]), str(r["name"]), frozenset(r["members"]))
            for r in records
        )

    @classmethod
    def from_json(cls, path) -> "MoodMap":
        with open(path, encoding="utf-8") as f:
            return cls.from_records(json.load(f))

    def to_records(self):
        return [
            {"index": g.group_index, "name": g.name, "members": sorted(g.members)}
            for g in self.groups
        ]


_DEFAULT = None


def default_mood_map() -> MoodMap:
    global _DEFAULT
    if _DEFAULT is None:
        with resources.files("peerbursts.data").joinpath("mood_map.json").open(
            encoding="utf-8"
        ) as f:
            _DEFAULT = MoodMap.from_records(json.load(f))
    return _DEFAULT


def load_mood_map(path: str | Path | None = None) -> MoodMap:
    return default_mood_map() if path is None else MoodMap.from_json(path)


def mood_group_of(mood_label: str, mood_map: MoodMap | None = None) -> int:
    return (mood_map or default_mood_map()).group_of(mood_label)
