"""Two-stage k-metamodes.

Stage 1 clusters disjoint samples of the data independently. Stage 2 treats
every collected stage-1 mode as an object and clusters the modes into
``k_meta`` metamodes, where each metamode is the count-level merge of its
member modes.
"""
from __future__ import annotations

import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .distance import (
    STAGE1_KINDS,
    STAGE2_KINDS,
    DistanceKind,
    FrequencyLayout,
    match_distance_matrix,
    meta_frequency_matrix,
)
from .errors import ConfigError, InitError, SamplingError
from .model import Metamode, Mode, with_id
from .solver import ClusteringResult, SolverConfig, fit_partition

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class EnsembleConfig:
    sample_size: int = 10_000
    num_samples: int | None = None  # None: cover the whole dataset
    k: int = 22
    k_meta: int = 22
    stage1_distance: DistanceKind = DistanceKind.FREQUENCY
    stage2_distance: DistanceKind = DistanceKind.META_FREQUENCY
    seed: int = 0
    workers: int = 1
    max_iterations: int = 100

    def __post_init__(self):
        object.__setattr__(self, "stage1_distance", DistanceKind.parse(self.stage1_distance))
        object.__setattr__(self, "stage2_distance", DistanceKind.parse(self.stage2_distance))
        if self.stage1_distance not in STAGE1_KINDS:
            raise ConfigError(f"stage-1 distance must be one of hamming/frequency, got {self.stage1_distance.value}")
        if self.stage2_distance not in STAGE2_KINDS:
            raise ConfigError(f"stage-2 distance must be frequency/meta_frequency, got {self.stage2_distance.value}")
        if self.sample_size < 1 or self.k < 1 or self.k_meta < 1 or self.workers < 1:
            raise ConfigError("sample_size, k, k_meta and workers must be positive")
        if self.num_samples is not None and self.num_samples < 1:
            raise ConfigError("num_samples must be positive (or None for cover-all)")

    @property
    def cover_all(self) -> bool:
        return self.num_samples is None

    def to_dict(self):
        return {
            "sample_size": self.sample_size,
            "num_samples": self.num_samples,
            "k": self.k,
            "k_meta": self.k_meta,
            "stage1_distance": self.stage1_distance.value,
            "stage2_distance": self.stage2_distance.value,
            "seed": self.seed,
            "workers": self.workers,
            "max_iterations": self.max_iterations,
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if d.pop("cover_all", False):
            d["num_samples"] = None
        try:
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad ensemble config: {exc}") from exc


@dataclass
class MetaResult:
    stage1: list[ClusteringResult]
    modes: list[Mode]
    metamodes: list[Metamode]
    mode_to_metamode: dict[int, int]
    partitions: list[np.ndarray] = field(default_factory=list)
    record_modes: np.ndarray | None = None  # global mode id per record, -1 if unsampled
    stage2_iterations: int = 0
    stage2_cost: float = 0.0


def _seeds(seed: int, count: int) -> list[int]:
    children = np.random.SeedSequence(seed).spawn(count)
    return [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]


def draw_samples(n_records: int, config: EnsembleConfig) -> list[np.ndarray]:
    """Disjoint index partitions drawn without replacement (seeded)."""
    if n_records < 1:
        raise SamplingError("dataset is empty")
    s = config.sample_size
    rng = np.random.default_rng(config.seed)
    perm = rng.permutation(n_records)
    if config.cover_all:
        return [perm[i:i + s] for i in range(0, n_records, s)]
    need = s * config.num_samples
    if need > n_records:
        raise SamplingError(
            f"{config.num_samples} samples of {s} need {need} records, dataset has {n_records}"
        )
    return [perm[i * s:(i + 1) * s] for i in range(config.num_samples)]


def _fit_one(args):
    index, records, solver_config = args
    try:
        return fit_partition(records, solver_config)
    except InitError as exc:
        raise InitError(f"partition {index}: {exc}") from None


def stage1(partitions, config: EnsembleConfig) -> list[ClusteringResult]:
    """Cluster every partition independently; results keep partition order."""
    seeds = _seeds(config.seed, len(partitions))
    jobs = [
        (
            i,
            np.asarray(p),
            SolverConfig(config.k, config.max_iterations, seeds[i], config.stage1_distance),
        )
        for i, p in enumerate(partitions)
    ]
    if config.workers == 1 or len(jobs) == 1:
        return [_fit_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=config.workers) as pool:
        return list(pool.map(_fit_one, jobs))


def collect_modes(results) -> list[Mode]:
    """Stage-1 modes with globally unique ids (partition order, then cluster order)."""
    out = []
    for res in results:
        for q in res.modes:
            out.append(with_id(q, len(out)))
    return out


def _stage2_distances(meta_counts, layout, kind, mode_tops, mode_freqs):
    """(n_modes, k_meta) distance matrix against metamodes given as count rows."""
    meta_totals = _row_totals(meta_counts, layout)
    if kind is DistanceKind.META_FREQUENCY:
        with np.errstate(invalid="ignore", divide="ignore"):
            fz = meta_counts / meta_totals[:, None]
        return meta_frequency_matrix(mode_freqs, np.nan_to_num(fz), layout)
    tops, weights = layout.top_tables(meta_counts, np.maximum(meta_totals, 1))
    return match_distance_matrix(mode_tops, tops, weights)


def _row_totals(counts, layout):
    # every attribute segment sums to the member count; read it off attribute 0
    return counts[:, : layout.cardinalities[0]].sum(axis=1)


def stage2(modes, config: EnsembleConfig, cardinalities=None):
    """Cluster modes into metamodes.

    Returns ``(metamodes, mode_to_metamode, iterations, cost)``.
    """
    modes = list(modes)
    kind = config.stage2_distance
    k = config.k_meta
    if len(modes) < k:
        raise InitError(f"need at least k_meta={k} modes, got {len(modes)}")
    layout = FrequencyLayout.from_profiles(modes, cardinalities)
    counts = layout.counts(modes)
    totals = np.array([q.total for q in modes], dtype=float)
    freqs = counts / totals[:, None]
    mode_tops, _ = layout.top_tables(counts, totals)
    rows = np.arange(len(modes))

    # seeding: k_meta modes that are pairwise distinct under the active distance
    rng = np.random.default_rng([config.seed, 2])
    chosen: list[int] = []
    for i in rng.permutation(len(modes)):
        if kind is DistanceKind.FREQUENCY:
            dup = any(np.array_equal(mode_tops[i], mode_tops[c]) for c in chosen)
        else:
            dup = bool(chosen) and meta_frequency_matrix(freqs[i:i + 1], freqs[chosen], layout).min() <= 0.0
        if not dup:
            chosen.append(int(i))
            if len(chosen) == k:
                break
    if len(chosen) < k:
        raise InitError(f"only {len(chosen)} distinct modes available for k_meta={k}")
    meta_counts = counts[chosen].copy()

    labels = None
    iterations = 0
    converged = cycled = False
    seen: set[bytes] = set()
    cost = 0.0
    for _ in range(config.max_iterations + 1):
        d = _stage2_distances(meta_counts, layout, kind, mode_tops, freqs)
        new = d.argmin(axis=1)
        if labels is not None and np.array_equal(new, labels):
            converged = True
            break
        key = new.tobytes()
        if key in seen:
            log.info("stage-2 assignment cycle detected after %d iterations", iterations)
            cycled = True
            break
        seen.add(key)
        if iterations == config.max_iterations:
            break
        labels = new
        meta_counts = _merge_by_label(counts, labels, k)
        sizes = np.bincount(labels, minlength=k)
        while (sizes == 0).any():
            empty = int(np.flatnonzero(sizes == 0)[0])
            own = _stage2_distances(meta_counts, layout, kind, mode_tops, freqs)[rows, labels]
            own = np.nan_to_num(own)
            own[sizes[labels] <= 1] = -np.inf
            donor = int(np.argmax(own))
            labels = labels.copy()
            labels[donor] = empty
            meta_counts = _merge_by_label(counts, labels, k)
            sizes = np.bincount(labels, minlength=k)
        iterations += 1
        cost = float(_stage2_distances(meta_counts, layout, kind, mode_tops, freqs)[rows, labels].sum())
    if not converged and not cycled:
        log.warning("stage 2 stopped at max_iterations=%d without converging", config.max_iterations)

    metamodes = []
    for t in range(k):
        row = meta_counts[t]
        maps = tuple(
            {int(c): int(round(row[off + c])) for c in np.flatnonzero(row[off:off + card])}
            for off, card in zip(layout.offsets, layout.cardinalities)
        )
        metamodes.append(Metamode(maps, int(round(_row_totals(row[None, :], layout)[0])), t))
    mapping = {q.id: int(labels[i]) for i, q in enumerate(modes)}
    return metamodes, mapping, iterations, cost


def _merge_by_label(counts, labels, k):
    out = np.zeros((k, counts.shape[1]))
    np.add.at(out, labels, counts)
    return out


def fit_ensemble(records, config: EnsembleConfig, cardinalities=None) -> MetaResult:
    """Sample, run stage 1 on every sample, then cluster the collected modes."""
    x = np.asarray(records)
    partitions = draw_samples(len(x), config)
    results = stage1([x[p] for p in partitions], config)
    modes = collect_modes(results)
    metamodes, mapping, it2, cost2 = stage2(modes, config, cardinalities)
    record_modes = np.full(len(x), -1, dtype=np.int64)
    offset = 0
    for p, res in zip(partitions, results):
        record_modes[p] = res.assignment + offset
        offset += len(res.modes)
    return MetaResult(results, modes, metamodes, mapping, partitions, record_modes, it2, cost2)


def k_sweep(partitions, k_candidates, config: EnsembleConfig) -> dict[int, float]:
    """Mean within-cluster similarity per k, averaged over partitions.

    Similarity of a record is ``1 - frequency_distance(record, mode) / m``.
    Only meant for choosing k.
    """
    k_candidates = list(k_candidates)
    if not k_candidates:
        raise ConfigError("k_sweep needs at least one candidate k")
    seeds = _seeds(config.seed, len(partitions))
    table = {}
    for k in k_candidates:
        sims = []
        for i, p in enumerate(partitions):
            x = np.asarray(p)
            res = fit_partition(x, SolverConfig(k, config.max_iterations, seeds[i], DistanceKind.FREQUENCY))
            tops = np.stack([q.top_values() for q in res.modes])
            weights = np.stack([q.top_frequencies() for q in res.modes])
            d = match_distance_matrix(x, tops, weights)[np.arange(len(x)), res.assignment]
            sims.append(float(np.mean(1.0 - d / x.shape[1])))
        table[k] = float(np.mean(sims))
    return table
