"""Distance functions between records, modes and metamodes.

Three families:

* ``hamming``: number of attributes where a record differs from the mode's
  top values.
* ``frequency``: like hamming, but a match on attribute j costs
  ``1 - f`` where ``f`` is the relative frequency of the mode's top value.
* ``meta_frequency``: distance between two fuzzy sets, the sum over
  attributes of the Euclidean distance between their frequency
  distributions (absent categories count as frequency 0).

The scalar functions here work on :class:`~kmetamodes.model.Mode` objects and
are the reference definitions. The ``*_matrix`` helpers are the vectorized
forms used by the solvers and are tested against the scalar ones.
"""
from __future__ import annotations

import enum
import math

import numpy as np

from .errors import ConfigError, DistanceError
from .model import Mode, Metamode, record_as_mode


class DistanceKind(str, enum.Enum):
    HAMMING = "hamming"
    FREQUENCY = "frequency"
    META_FREQUENCY = "meta_frequency"

    @classmethod
    def parse(cls, value) -> "DistanceKind":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("-", "_").lower())
        except ValueError:
            raise ConfigError(f"unknown distance {value!r}") from None


STAGE1_KINDS = (DistanceKind.HAMMING, DistanceKind.FREQUENCY)
STAGE2_KINDS = (DistanceKind.FREQUENCY, DistanceKind.META_FREQUENCY)


def _check_len(x, q):
    if len(x) != q.m:
        raise DistanceError(f"attribute count mismatch: {len(x)} vs {q.m}")


def hamming(x, q: Mode) -> float:
    _check_len(x, q)
    return float(sum(int(v) != q.top_value(j) for j, v in enumerate(x)))


def frequency_distance(x, q) -> float:
    _check_len(x, q)
    d = 0.0
    for j, v in enumerate(x):
        top = q.top_value(j)
        d += 1.0 - q.counts[j][top] / q.total if int(v) == top else 1.0
    return d


def meta_frequency_distance(q, z) -> float:
    if q.m != z.m:
        raise DistanceError(f"attribute count mismatch: {q.m} vs {z.m}")
    d = 0.0
    for j in range(q.m):
        fq, fz = q.frequencies(j), z.frequencies(j)
        sq = sum((fq.get(c, 0.0) - fz.get(c, 0.0)) ** 2 for c in fq.keys() | fz.keys())
        d += math.sqrt(sq)
    return d


def mode_to_metamode(q: Mode, z: Metamode, kind) -> float:
    """Mode-level distance used in the second clustering stage.

    ``frequency`` discards the mode's frequencies: the mode is projected to
    its top values and treated as a record.
    """
    kind = DistanceKind.parse(kind)
    if kind is DistanceKind.META_FREQUENCY:
        return meta_frequency_distance(q, z)
    if kind is DistanceKind.FREQUENCY:
        return frequency_distance(q.top_values(), z)
    raise ConfigError("hamming is not a mode-to-metamode distance")


def record_to_metamode(x, z: Metamode, kind) -> float:
    kind = DistanceKind.parse(kind)
    if kind is DistanceKind.FREQUENCY:
        return frequency_distance(x, z)
    if kind is DistanceKind.META_FREQUENCY:
        _check_len(x, z)
        return meta_frequency_distance(record_as_mode(x), z)
    raise ConfigError("hamming is not supported against metamodes")


# -- vectorized forms -------------------------------------------------------


def match_distance_matrix(records: np.ndarray, tops: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """``D[i, l] = m - sum_j [x_ij == tops_lj] * weights_lj``.

    With unit weights this is hamming; with top-value frequencies as weights
    it is the frequency distance.
    """
    x = np.asarray(records)
    n, m = x.shape
    if tops.shape[1] != m:
        raise DistanceError(f"attribute count mismatch: {m} vs {tops.shape[1]}")
    out = np.empty((n, len(tops)))
    for l in range(len(tops)):
        out[:, l] = m - (x == tops[l]) @ weights[l]
    return out


class FrequencyLayout:
    """Maps per-attribute count maps onto one flat dense vector.

    Attribute j occupies ``[offsets[j], offsets[j] + cardinalities[j])``.
    """

    def __init__(self, cardinalities):
        self.cardinalities = np.asarray(cardinalities, dtype=np.int64)
        self.offsets = np.concatenate([[0], np.cumsum(self.cardinalities)[:-1]]).astype(np.int64)
        self.size = int(self.cardinalities.sum())

    @property
    def m(self) -> int:
        return len(self.cardinalities)

    @classmethod
    def from_profiles(cls, profiles, minimum=None):
        m = profiles[0].m
        card = np.ones(m, dtype=np.int64)
        for p in profiles:
            for j, cj in enumerate(p.counts):
                card[j] = max(card[j], max(cj) + 1)
        if minimum is not None:
            card = np.maximum(card, np.asarray(minimum, dtype=np.int64))
        return cls(card)

    def counts(self, profiles) -> np.ndarray:
        out = np.zeros((len(profiles), self.size))
        for i, p in enumerate(profiles):
            for j, cj in enumerate(p.counts):
                off = self.offsets[j]
                for c, v in cj.items():
                    out[i, off + c] = v
        return out

    def top_tables(self, counts: np.ndarray, totals: np.ndarray):
        """Top value (smallest id on ties) and its frequency, per row and attribute."""
        rows = counts.shape[0]
        tops = np.empty((rows, self.m), dtype=np.int64)
        freq = np.empty((rows, self.m))
        for j, (off, card) in enumerate(zip(self.offsets, self.cardinalities)):
            seg = counts[:, off:off + card]
            tops[:, j] = seg.argmax(axis=1)
            freq[:, j] = seg.max(axis=1) / totals
        return tops, freq

    def segment_sum(self, values: np.ndarray) -> np.ndarray:
        return np.add.reduceat(values, self.offsets, axis=-1)


def meta_frequency_matrix(fa: np.ndarray, fb: np.ndarray, layout: FrequencyLayout) -> np.ndarray:
    """Pairwise meta-frequency distance between rows of two flat frequency matrices."""
    out = np.empty((fa.shape[0], fb.shape[0]))
    for t in range(fb.shape[0]):
        sq = layout.segment_sum((fa - fb[t]) ** 2)
        out[:, t] = np.sqrt(sq).sum(axis=1)
    return out


def record_meta_frequency_matrix(records: np.ndarray, fz: np.ndarray, layout: FrequencyLayout) -> np.ndarray:
    """Meta-frequency distance from singleton record modes to each flat metamode row.

    For a record with value v at attribute j the per-attribute term is
    ``sqrt((1 - f_v)^2 + sum_{c != v} f_c^2) = sqrt(1 - 2 f_v + sum_c f_c^2)``.
    """
    x = np.asarray(records)
    n, m = x.shape
    sumsq = layout.segment_sum(fz ** 2)  # (t, m)
    inside = x < layout.cardinalities
    idx = layout.offsets + np.where(inside, x, 0)
    out = np.zeros((n, fz.shape[0]))
    for t in range(fz.shape[0]):
        fv = np.where(inside, fz[t][idx], 0.0)
        out[:, t] = np.sqrt(np.clip(1.0 - 2.0 * fv + sumsq[t], 0.0, None)).sum(axis=1)
    return out
