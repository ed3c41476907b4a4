"""Outlier scores from a fitted model, plus ROC / PR / AUC evaluation."""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

from .distance import (
    DistanceKind,
    FrequencyLayout,
    match_distance_matrix,
    meta_frequency_matrix,
    record_meta_frequency_matrix,
)
from .errors import ConfigError, MetricError, ScoringError


class ScoreVariant(str, enum.Enum):
    RECORD_TO_METAMODES = "record_to_metamodes"
    MODE_TO_METAMODES = "mode_to_metamodes"

    @classmethod
    def parse(cls, value) -> "ScoreVariant":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("-", "_").lower())
        except ValueError:
            raise ConfigError(f"unknown score variant {value!r}") from None


@dataclass
class ScoredDataset:
    scores: np.ndarray
    labels: np.ndarray | None = None
    variant: ScoreVariant = ScoreVariant.MODE_TO_METAMODES

    def __post_init__(self):
        self.scores = np.asarray(self.scores, dtype=float)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int8)
            if self.labels.shape != self.scores.shape:
                raise MetricError(f"{len(self.scores)} scores but {len(self.labels)} labels")


def _aggregate(d: np.ndarray, agg: str) -> np.ndarray:
    if agg == "sum":
        return d.sum(axis=1)
    if agg == "min":
        return d.min(axis=1)
    raise ConfigError(f"unknown score aggregation {agg!r}")


def metamode_tables(metamodes, cardinalities=None):
    layout = FrequencyLayout.from_profiles(metamodes, cardinalities)
    counts = layout.counts(metamodes)
    totals = np.array([z.total for z in metamodes], dtype=float)
    return layout, counts, totals


def record_distances(records, metamodes, distance, cardinalities=None) -> np.ndarray:
    """(n, k_meta) record-to-metamode distances."""
    distance = DistanceKind.parse(distance)
    x = np.asarray(records)
    layout, counts, totals = metamode_tables(metamodes, cardinalities)
    if distance is DistanceKind.META_FREQUENCY:
        return record_meta_frequency_matrix(x, counts / totals[:, None], layout)
    if distance is DistanceKind.FREQUENCY:
        tops, weights = layout.top_tables(counts, totals)
        return match_distance_matrix(x, tops, weights)
    raise ConfigError("hamming is not supported against metamodes")


def mode_distances(modes, metamodes, distance, cardinalities=None) -> np.ndarray:
    """(n_modes, k_meta) mode-to-metamode distances, as used in stage 2."""
    distance = DistanceKind.parse(distance)
    layout = FrequencyLayout.from_profiles(list(modes) + list(metamodes), cardinalities)
    qc = layout.counts(modes)
    qt = np.array([q.total for q in modes], dtype=float)
    zc = layout.counts(metamodes)
    zt = np.array([z.total for z in metamodes], dtype=float)
    if distance is DistanceKind.META_FREQUENCY:
        return meta_frequency_matrix(qc / qt[:, None], zc / zt[:, None], layout)
    if distance is DistanceKind.FREQUENCY:
        q_tops, _ = layout.top_tables(qc, qt)
        tops, weights = layout.top_tables(zc, zt)
        return match_distance_matrix(q_tops, tops, weights)
    raise ConfigError("hamming is not supported against metamodes")


def score_records(records, model, variant, labels=None, record_modes=None, agg="sum") -> ScoredDataset:
    """Outlier score per record; larger means more outlying.

    ``record_to_metamodes`` aggregates the record's distance to every
    metamode. ``mode_to_metamodes`` gives every record the aggregated
    distance of its stage-1 mode, so it needs the record-to-mode map produced
    by a cover-all fit (``record_modes``, defaulting to the model's).
    """
    variant = ScoreVariant.parse(variant)
    x = np.asarray(records)
    card = model.cardinalities
    if variant is ScoreVariant.RECORD_TO_METAMODES:
        scores = _aggregate(record_distances(x, model.metamodes, model.stage2_distance, card), agg)
        return ScoredDataset(scores, labels, variant)
    rm = model.record_modes if record_modes is None else np.asarray(record_modes)
    if rm is None:
        raise ScoringError("mode_to_metamodes scoring needs per-record stage-1 mode ids (cover-all fit)")
    if len(rm) != len(x):
        raise ScoringError(f"model maps {len(rm)} records to modes, got {len(x)} records")
    if (rm < 0).any():
        raise ScoringError("some records were not clustered in stage 1; fit with cover-all sampling")
    ids = np.array([q.id for q in model.modes])
    idx = np.searchsorted(ids, rm) if np.all(np.diff(ids) > 0) else None
    if idx is None or (idx >= len(ids)).any() or (ids[np.minimum(idx, len(ids) - 1)] != rm).any():
        raise ScoringError("record-to-mode map refers to mode ids missing from the model")
    per_mode = _aggregate(mode_distances(model.modes, model.metamodes, model.stage2_distance, card), agg)
    return ScoredDataset(per_mode[idx], labels, variant)


# -- metrics ----------------------------------------------------------------


def _checked(scored: ScoredDataset):
    if scored.labels is None:
        raise MetricError("metrics need ground-truth labels")
    y = scored.labels.astype(bool)
    n_pos = int(y.sum())
    if n_pos == 0 or n_pos == len(y):
        raise MetricError("metrics need both classes present in the labels")
    return scored.scores, y, n_pos, len(y) - n_pos


def _sweep(scores, y):
    order = np.argsort(-scores, kind="mergesort")
    s, yy = scores[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s)), len(s) - 1]  # last index of each distinct score
    tp = np.cumsum(yy)[last]
    fp = (last + 1) - tp
    return tp.astype(float), fp.astype(float), s[last]


def roc_curve(scored: ScoredDataset):
    """``(fpr, tpr, thresholds)`` swept over descending distinct scores.

    Point i flags every record with score >= thresholds[i]; the first point
    (threshold +inf) is (0, 0).
    """
    scores, y, n_pos, n_neg = _checked(scored)
    tp, fp, thr = _sweep(scores, y)
    return (
        np.r_[0.0, fp / n_neg],
        np.r_[0.0, tp / n_pos],
        np.r_[np.inf, thr],
    )


def pr_curve(scored: ScoredDataset):
    """``(recall, precision, thresholds)``; precision at recall 0 is 1."""
    scores, y, n_pos, _ = _checked(scored)
    tp, fp, thr = _sweep(scores, y)
    return (
        np.r_[0.0, tp / n_pos],
        np.r_[1.0, tp / (tp + fp)],
        np.r_[np.inf, thr],
    )


def auc(scored: ScoredDataset) -> float:
    """Mann-Whitney AUC with average ranks for tied scores."""
    scores, y, n_pos, n_neg = _checked(scored)
    ranks = rankdata(scores)
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def trapezoid_auc(fpr, tpr) -> float:
    fpr, tpr = np.asarray(fpr), np.asarray(tpr)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def operating_point(scored: ScoredDataset, max_fpr: float = 0.10):
    """Best ROC point with fpr <= max_fpr, as ``(fpr, tpr, threshold)``."""
    fpr, tpr, thr = roc_curve(scored)
    ok = np.flatnonzero(fpr <= max_fpr)
    i = ok[np.argmax(tpr[ok])]
    return float(fpr[i]), float(tpr[i]), float(thr[i])


def recall_by_category(scored: ScoredDataset, categories, max_fpr: float = 0.10) -> dict[str, float]:
    """Share of each attack category flagged at the operating point for ``max_fpr``."""
    _, _, thr = operating_point(scored, max_fpr)
    flagged = scored.scores >= thr
    cats = np.asarray(categories, dtype=object)
    attack = scored.labels.astype(bool)
    out = {}
    for c in sorted({str(c) for c in cats[attack]}):
        sel = attack & (cats.astype(str) == c)
        out[c] = float(flagged[sel].mean())
    return out
