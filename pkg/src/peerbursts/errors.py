"""Exception types raised across the package."""

from __future__ import annotations


class PeerburstsError(Exception):
    pass


class ValidationError(PeerburstsError):
    """Input rows failed schema validation beyond the tolerated error rate."""

    def __init__(self, errors, n_lines: int, threshold: float):
        self.errors = list(errors)
        self.n_lines = n_lines
        self.threshold = threshold
        rate = len(self.errors) / n_lines if n_lines else 0.0
        head = "; ".join(str(e) for e in self.errors[:5])
        more = f" (+{len(self.errors) - 5} more)" if len(self.errors) > 5 else ""
        super().__init__(
            f"{len(self.errors)} invalid line(s) of {n_lines} "
            f"(rate {rate:.4f} > threshold {threshold:.4f}): {head}{more}"
        )


class CorpusError(PeerburstsError):
    """Structural problems found while assembling threads and timelines."""

    def __init__(self, problems):
        self.problems = list(problems)
        head = "; ".join(self.problems[:5])
        more = f" (+{len(self.problems) - 5} more)" if len(self.problems) > 5 else ""
        super().__init__(f"{len(self.problems)} corpus problem(s): {head}{more}")


class UnknownMoodError(PeerburstsError, KeyError):
    def __init__(self, label):
        self.label = label
        super().__init__(f"unknown mood label {label!r}")

    def __str__(self):
        return self.args[0]


class EmptyGroupError(PeerburstsError):
    def __init__(self, group: str, what: str = ""):
        self.group = group
        suffix = f" for {what}" if what else ""
        super().__init__(f"group {group!r} is empty{suffix}")


class NoMocError(PeerburstsError):
    def __init__(self, user_id: str):
        self.user_id = user_id
        super().__init__(f"no MOC for user {user_id!r}")


class ConfigError(PeerburstsError, ValueError):
    pass
