from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kmetamodes.errors import ModelError
from kmetamodes.model import Mode, frequencies, merge_modes, mode_from_records, record_as_mode, top_value

A, B, C = 0, 1, 2


def test_tally():
    q = mode_from_records([[A], [A], [B]])
    assert q.counts == ({A: 2, B: 1},)
    assert q.n_members == 3


def test_singleton_mode():
    q = mode_from_records([[A, B]])
    assert q.counts == ({A: 1}, {B: 1})
    assert q.n_members == 1


def test_frequency_from_tally():
    recs = [[A], [A], [A], [B]]
    tally = Counter(r[0] for r in recs)
    q = mode_from_records(recs)
    assert frequencies(q, 0)[A] == tally[A] / len(recs) == 0.75


def test_empty_records_rejected():
    with pytest.raises(ModelError):
        mode_from_records(np.empty((0, 3), dtype=int))


@pytest.mark.parametrize(
    "counts, expected",
    [({A: 3, B: 1}, A), ({A: 2, B: 2}, A), ({B: 1}, B), ({C: 2, B: 2}, B)],
)
def test_top_value(counts, expected):
    q = Mode((counts,), sum(counts.values()))
    # oracle: enumerate the maximal categories, take the smallest id
    best = max(counts.values())
    assert min(c for c in counts if counts[c] == best) == expected
    assert top_value(q, 0) == expected


@pytest.mark.parametrize(
    "counts, expected",
    [
        ({A: 3, B: 1}, {A: 0.75, B: 0.25}),
        ({A: 5}, {A: 1.0}),
        ({A: 1, B: 1, C: 2}, {A: 0.25, B: 0.25, C: 0.5}),
    ],
)
def test_frequencies(counts, expected):
    q = Mode((counts,), sum(counts.values()))
    assert frequencies(q, 0) == pytest.approx(expected)


def test_merge_is_record_weighted():
    q1 = Mode(({A: 2},), 2)
    q2 = Mode(({A: 1, B: 1},), 2)
    z = merge_modes([q1, q2])
    assert z.counts == ({A: 3, B: 1},)
    assert z.n_total == 4
    assert z.frequencies(0) == pytest.approx({A: 0.75, B: 0.25})


def test_merge_identity_and_purity():
    q = Mode(({A: 2, B: 1}, {C: 3}), 3)
    assert merge_modes([q]).counts == q.counts
    pure = Mode(({A: 3},), 3)
    z = merge_modes([pure, pure])
    assert z.counts == ({A: 6},)
    assert z.frequencies(0) == {A: 1.0}


def test_merge_rejects_empty_and_mismatched():
    with pytest.raises(ModelError):
        merge_modes([])
    with pytest.raises(ModelError):
        merge_modes([Mode(({A: 1},), 1), Mode(({A: 1}, {B: 1}), 1)])


def test_record_as_mode():
    q = record_as_mode([A, B])
    assert q.counts == ({A: 1}, {B: 1})
    assert q.n_members == 1
    assert all(f == 1.0 for j in range(2) for f in frequencies(q, j).values())


records_strategy = st.integers(1, 6).flatmap(
    lambda m: st.lists(st.lists(st.integers(0, 4), min_size=m, max_size=m), min_size=1, max_size=100)
)


@settings(max_examples=60)
@given(records_strategy)
def test_merge_of_singletons_equals_tally(records):
    merged = merge_modes([record_as_mode(r) for r in records])
    direct = mode_from_records(records)
    assert merged.counts == direct.counts
    assert merged.n_total == direct.n_members


@settings(max_examples=60)
@given(records_strategy, st.randoms(use_true_random=False))
def test_merge_associative_and_permutation_invariant(records, rnd):
    modes = [record_as_mode(r) for r in records]
    flat = merge_modes(modes)
    shuffled = list(modes)
    rnd.shuffle(shuffled)
    assert merge_modes(shuffled).counts == flat.counts
    cut = rnd.randint(0, len(modes))
    parts = [p for p in (modes[:cut], modes[cut:]) if p]
    nested = merge_modes([merge_modes(p) for p in parts])
    assert nested.counts == flat.counts and nested.n_total == flat.n_total


@settings(max_examples=60)
@given(records_strategy)
def test_counts_sum_to_members_and_frequencies_to_one(records):
    q = mode_from_records(records)
    z = merge_modes([q, q])
    for prof in (q, z):
        for j in range(prof.m):
            assert sum(prof.counts[j].values()) == prof.total
            assert abs(sum(prof.frequencies(j).values()) - 1.0) <= 1e-9
