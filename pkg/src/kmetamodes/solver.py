"""Single-partition k-modes with fuzzy (count-carrying) modes.

Alternates the two classic steps until an assignment step moves no record:

1. fix the modes, assign every record to its nearest mode;
2. fix the assignment, recompute every mode as the tally of its members.

The loop works on dense per-attribute count tables; :class:`Mode` objects
are only materialized at the end.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .distance import STAGE1_KINDS, DistanceKind, match_distance_matrix
from .errors import ConfigError, InitError
from .model import Mode, profiles_from_counts, record_as_mode

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    k: int
    max_iterations: int = 100
    seed: int = 0
    distance: DistanceKind = DistanceKind.FREQUENCY

    def __post_init__(self):
        object.__setattr__(self, "distance", DistanceKind.parse(self.distance))
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.max_iterations < 1:
            raise ConfigError("max_iterations must be >= 1")
        if self.distance not in STAGE1_KINDS:
            raise ConfigError(f"{self.distance.value} is not a record-to-mode distance")


@dataclass
class ClusteringResult:
    modes: list[Mode]
    assignment: np.ndarray
    cost: float
    iterations: int
    converged: bool = True
    cost_history: list[float] = field(default_factory=list)
    cycled: bool = False

    @property
    def hit_max_iterations(self) -> int:
        return 0 if self.converged or self.cycled else 1

    def __eq__(self, other):
        if not isinstance(other, ClusteringResult):
            return NotImplemented
        return (
            self.modes == other.modes
            and np.array_equal(self.assignment, other.assignment)
            and self.cost == other.cost
            and self.iterations == other.iterations
            and self.converged == other.converged
            and self.cost_history == other.cost_history
            and self.cycled == other.cycled
        )


def _cardinalities(records: np.ndarray) -> np.ndarray:
    return records.max(axis=0).astype(np.int64) + 1


def _tally(records, labels, k, card) -> list[np.ndarray]:
    tables = []
    for j in range(records.shape[1]):
        flat = labels.astype(np.int64) * card[j] + records[:, j]
        tables.append(np.bincount(flat, minlength=k * card[j]).reshape(k, card[j]))
    return tables


def _tables(tallies, distance):
    sizes = tallies[0].sum(axis=1)
    tops = np.stack([t.argmax(axis=1) for t in tallies], axis=1)
    if distance is DistanceKind.HAMMING:
        weights = np.ones(tops.shape)
    else:
        with np.errstate(invalid="ignore", divide="ignore"):
            weights = np.stack([t.max(axis=1) for t in tallies], axis=1) / sizes[:, None]
    return tops, weights


def _mode_tables(modes, distance):
    tops = np.stack([q.top_values() for q in modes])
    if distance is DistanceKind.HAMMING:
        return tops, np.ones(tops.shape)
    return tops, np.stack([q.top_frequencies() for q in modes])


def init_modes(records, config: SolverConfig) -> list[Mode]:
    """Pick k distinct records uniformly at random as singleton modes."""
    x = np.asarray(records)
    uniq = np.unique(x, axis=0)
    if len(uniq) < config.k:
        raise InitError(
            f"need {config.k} distinct records to initialise modes, found {len(uniq)} "
            f"(short by {config.k - len(uniq)})"
        )
    rng = np.random.default_rng(config.seed)
    picks = rng.choice(len(uniq), size=config.k, replace=False)
    return [record_as_mode(uniq[p], id=l) for l, p in enumerate(picks)]


def assign_step(records, modes, distance=DistanceKind.FREQUENCY) -> np.ndarray:
    """Nearest mode per record; ties go to the lowest mode index."""
    distance = DistanceKind.parse(distance)
    tops, weights = _mode_tables(modes, distance)
    return match_distance_matrix(np.asarray(records), tops, weights).argmin(axis=1)


def _repair_empty(records, labels, k, card, distance):
    """Move the record farthest from its mode into each empty cluster."""
    labels = labels.copy()
    while True:
        sizes = np.bincount(labels, minlength=k)
        empty = np.flatnonzero(sizes == 0)
        if empty.size == 0:
            return labels, _tally(records, labels, k, card)
        tallies = _tally(records, labels, k, card)
        tops, weights = _tables(tallies, distance)
        own = np.nan_to_num(match_distance_matrix(records, tops, weights)[np.arange(len(labels)), labels])
        own[sizes[labels] <= 1] = -np.inf  # never empty another cluster
        donor = int(np.argmax(own))
        log.debug("re-seeding empty cluster %d with record %d", empty[0], donor)
        labels[donor] = empty[0]


def update_step(records, assignment, k, distance=DistanceKind.FREQUENCY):
    """Recompute modes from an assignment.

    Empty clusters are re-seeded with the record farthest from its current
    mode, so the returned assignment may differ from the input one.
    Returns ``(modes, assignment)``.
    """
    x = np.asarray(records)
    distance = DistanceKind.parse(distance)
    labels, tallies = _repair_empty(x, np.asarray(assignment, dtype=np.int64), k, _cardinalities(x), distance)
    return profiles_from_counts(tallies), labels


def clustering_cost(records, modes, assignment, distance) -> float:
    distance = DistanceKind.parse(distance)
    tops, weights = _mode_tables(modes, distance)
    d = match_distance_matrix(np.asarray(records), tops, weights)
    return float(d[np.arange(len(assignment)), assignment].sum())


def fit_partition(records, config: SolverConfig) -> ClusteringResult:
    x = np.asarray(records, dtype=np.int64)
    if x.ndim != 2 or len(x) == 0:
        raise InitError("partition must be a non-empty 2-d array")
    distance = config.distance
    k = config.k
    card = _cardinalities(x)
    rows = np.arange(len(x))

    tops, weights = _mode_tables(init_modes(x, config), distance)
    labels = None
    tallies = None
    history: list[float] = []
    converged = cycled = False
    seen: set[bytes] = set()
    iterations = 0
    for _ in range(config.max_iterations + 1):
        new = match_distance_matrix(x, tops, weights).argmin(axis=1)
        if labels is not None and np.array_equal(new, labels):
            converged = True
            break
        key = new.tobytes()
        if key in seen:
            # batch updates under the frequency distance can revisit a state
            log.info("assignment cycle detected after %d iterations", iterations)
            cycled = True
            break
        seen.add(key)
        if iterations == config.max_iterations:
            break
        labels, tallies = _repair_empty(x, new, k, card, distance)
        tops, weights = _tables(tallies, distance)
        iterations += 1
        cost = float(match_distance_matrix(x, tops, weights)[rows, labels].sum())
        if history and cost > history[-1] + 1e-9:
            log.debug("cost rose from %.6f to %.6f at iteration %d", history[-1], cost, iterations)
        history.append(cost)
    if not converged and not cycled:
        log.warning("k-modes stopped at max_iterations=%d without converging", config.max_iterations)
    return ClusteringResult(
        modes=profiles_from_counts(tallies),
        assignment=labels,
        cost=history[-1],
        iterations=iterations,
        converged=converged,
        cost_history=history,
        cycled=cycled,
    )
