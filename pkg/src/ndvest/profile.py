"""Frequency-of-frequencies profiles and the ratio error metric.

A profile maps a frequency ``j`` to the number of distinct values that occur
exactly ``j`` times. The same type serves as the population profile ``F`` of a
column and as the sample profile ``f`` of a random sample drawn from it.
"""

from __future__ import annotations

import json
from collections import Counter
from collections.abc import Iterable, Iterator, Mapping
from typing import Any


class Profile(Mapping[int, int]):
    """Immutable sparse profile ``{frequency: count}``.

    Only positive counts are stored, keys are kept in ascending order so
    iteration and serialization are deterministic.

    >>> p = Profile({3: 2, 2: 1})
    >>> p.ndv, p.size
    (3, 8)
    """

    __slots__ = ("_counts", "_ndv", "_size")

    def __init__(self, counts: Mapping[int, int] | Iterable[tuple[int, int]] = ()):
        items = counts.items() if isinstance(counts, Mapping) else counts
        merged: dict[int, int] = {}
        for freq, cnt in items:
            freq, cnt = int(freq), int(cnt)
            if freq < 1:
                raise ValueError(f"frequency must be a positive integer, got {freq}")
            if cnt < 0:
                raise ValueError(f"count must be non-negative, got {cnt} for frequency {freq}")
            if cnt:
                merged[freq] = merged.get(freq, 0) + cnt
        self._counts = dict(sorted(merged.items()))
        self._ndv = sum(self._counts.values())
        self._size = sum(j * c for j, c in self._counts.items())

    def __getitem__(self, freq: int) -> int:
        return self._counts[freq]

    def get(self, freq: int, default: int = 0) -> int:  # type: ignore[override]
        return self._counts.get(freq, default)

    def __iter__(self) -> Iterator[int]:
        return iter(self._counts)

    def __len__(self) -> int:
        return len(self._counts)

    def __eq__(self, other: object) -> bool:
        if isinstance(other, Profile):
            return self._counts == other._counts
        if isinstance(other, Mapping):
            return self._counts == {k: v for k, v in other.items() if v}
        return NotImplemented

    def __hash__(self) -> int:
        return hash(tuple(self._counts.items()))

    def __repr__(self) -> str:
        return f"Profile({self._counts!r})"

    @property
    def ndv(self) -> int:
        """Number of distinct values, ``sum_j F_j``."""
        return self._ndv

    @property
    def size(self) -> int:
        """Number of rows, ``sum_j j * F_j``."""
        return self._size

    def to_dict(self) -> dict[str, int]:
        return {str(j): c for j, c in self._counts.items()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: Mapping[Any, Any]) -> Profile:
        try:
            return cls({int(k): int(v) for k, v in data.items()})
        except (TypeError, ValueError) as exc:
            raise ValueError(f"malformed profile: {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> Profile:
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError("profile JSON must be an object mapping frequency to count")
        return cls.from_dict(data)

    def add(self, freq: int, count: int) -> Profile:
        """Return a copy with ``count`` more values of frequency ``freq``."""
        out = dict(self._counts)
        out[freq] = out.get(freq, 0) + count
        return Profile(out)


def profile_from_values(values: Iterable[Any]) -> Profile:
    """Exact profile of a finite multiset of hashable values."""
    return Profile(Counter(Counter(values).values()))


def ndv(p: Mapping[int, int]) -> int:
    return p.ndv if isinstance(p, Profile) else sum(p.values())


def size(p: Mapping[int, int]) -> int:
    return p.size if isinstance(p, Profile) else sum(j * c for j, c in p.items())


def ratio_error(estimate: float, truth: float) -> float:
    """``max(estimate / truth, truth / estimate)``; always >= 1."""
    if not estimate > 0 or not truth > 0:
        raise ValueError(f"ratio error needs positive inputs, got estimate={estimate}, truth={truth}")
    return max(estimate / truth, truth / estimate)
