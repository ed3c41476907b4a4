"""Count-carrying fuzzy modes and metamodes.

A mode keeps, per attribute, the raw occurrence count of every category seen
in its cluster rather than only the most frequent one. Keeping counts (not
frequencies) is what lets several modes be merged into a metamode whose
frequencies are weighted by records, not by modes.

Count maps are sparse: a category absent from the map has count 0.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import ModelError

CountMaps = tuple  # tuple[dict[int, int], ...], one map per attribute


class _CountProfile:
    counts: CountMaps

    @property
    def total(self) -> int:
        raise NotImplementedError

    @property
    def m(self) -> int:
        return len(self.counts)

    def frequencies(self, j: int) -> dict[int, float]:
        n = self.total
        return {c: v / n for c, v in self.counts[j].items()}

    def top_value(self, j: int) -> int:
        """Most frequent category at attribute ``j``; ties go to the smallest id."""
        cj = self.counts[j]
        best = max(cj.values())
        return min(c for c, v in cj.items() if v == best)

    def top_values(self) -> np.ndarray:
        return np.array([self.top_value(j) for j in range(self.m)], dtype=np.int64)

    def top_frequencies(self) -> np.ndarray:
        n = self.total
        return np.array([max(cj.values()) / n for cj in self.counts])


@dataclass(frozen=True)
class Mode(_CountProfile):
    counts: CountMaps
    n_members: int
    id: int = 0

    @property
    def total(self) -> int:
        return self.n_members


@dataclass(frozen=True)
class Metamode(_CountProfile):
    counts: CountMaps
    n_total: int
    id: int = 0

    @property
    def total(self) -> int:
        return self.n_total


def _check_records(records) -> np.ndarray:
    x = np.asarray(records)
    if x.ndim != 2:
        raise ModelError("records must form a 2-d array (n records x m attributes)")
    if x.shape[0] == 0:
        raise ModelError("cannot build a mode from zero records")
    return x


def mode_from_records(records, id: int = 0) -> Mode:
    x = _check_records(records)
    counts = []
    for j in range(x.shape[1]):
        vals, cnt = np.unique(x[:, j], return_counts=True)
        counts.append({int(v): int(c) for v, c in zip(vals, cnt)})
    return Mode(tuple(counts), int(x.shape[0]), id)


def record_as_mode(record, id: int = 0) -> Mode:
    return Mode(tuple({int(v): 1} for v in np.asarray(record).ravel()), 1, id)


def top_value(mode: _CountProfile, j: int) -> int:
    return mode.top_value(j)


def frequencies(mode: _CountProfile, j: int) -> dict[int, float]:
    return mode.frequencies(j)


def merge_modes(modes: Sequence[_CountProfile], id: int = 0) -> Metamode:
    """Sum the count maps of several modes into one metamode."""
    modes = list(modes)
    if not modes:
        raise ModelError("cannot merge an empty list of modes")
    m = modes[0].m
    if any(q.m != m for q in modes):
        raise ModelError("modes disagree on attribute count")
    merged = [dict() for _ in range(m)]
    for q in modes:
        for j, cj in enumerate(q.counts):
            acc = merged[j]
            for c, v in cj.items():
                acc[c] = acc.get(c, 0) + v
    # sorted keys keep equality and serialization independent of merge order
    counts = tuple({c: acc[c] for c in sorted(acc)} for acc in merged)
    return Metamode(counts, sum(q.total for q in modes), id)


def with_id(profile, id: int):
    return replace(profile, id=id)


def profiles_from_counts(tables: Sequence[np.ndarray], cls=Mode, id_offset: int = 0) -> list:
    """Build modes/metamodes from dense per-attribute count tables.

    ``tables[j]`` has shape (k, cardinality_j). Row sums must be equal across
    attributes (they are the member counts).
    """
    k = tables[0].shape[0]
    out = []
    for l in range(k):
        counts = tuple(
            {int(c): int(t[l, c]) for c in np.flatnonzero(t[l])} for t in tables
        )
        total = int(tables[0][l].sum())
        out.append(cls(counts, total, id_offset + l))
    return out
