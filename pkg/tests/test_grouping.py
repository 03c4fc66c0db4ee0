from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from strike.grouping import (FeatureGroupPartition, PartitionError, average_linkage, correlation_distance,
                             correlation_partition, deal_round_robin, manual_partition, mi_partition,
                             mutual_information_distance, random_round_robin_partition, validate_partition)


def sizes(part):
    return [len(c) for _, c in part.groups]


def naive_average_linkage(dist, G):
    """Recompute every cluster distance from member pairs at each step."""
    clusters = [[i] for i in range(len(dist))]
    while len(clusters) > G:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                d = np.mean([dist[i, j] for i in clusters[a] for j in clusters[b]])
                key = (d, min(clusters[a]), min(clusters[b]))
                if best is None or key < best[0]:
                    best = (key, a, b)
        _, a, b = best
        clusters[a] = sorted(clusters[a] + clusters[b])
        del clusters[b]
    return sorted(clusters)


def test_manual_partition_examples():
    part = manual_partition({"groups": [{"name": "G1", "features": ["a"]}, {"name": "G2", "features": ["b", "c"]}]},
                            ["a", "b", "c"])
    assert part.groups == [("G1", (0,)), ("G2", (1, 2))]
    with pytest.raises(PartitionError, match="feature c unassigned"):
        manual_partition({"groups": [{"name": "G1", "features": ["a", "b"]}]}, ["a", "b", "c"])
    part = manual_partition({"groups": [{"name": "G1", "features": ["cat=*"]}]}, ["cat=A", "cat=B"])
    assert part.groups == [("G1", (0, 1))]


def test_manual_partition_errors():
    with pytest.raises(PartitionError, match="matched by both"):
        manual_partition([{"name": "G1", "features": ["a"]}, {"name": "G2", "features": ["a", "b"]}], ["a", "b"])
    with pytest.raises(PartitionError, match="matches no feature"):
        manual_partition([{"name": "G1", "features": ["a", "zz"]}], ["a"])


def test_manual_partition_reads_file(tmp_path):
    path = tmp_path / "groups.json"
    path.write_text(json.dumps({"groups": [{"name": "x", "features": ["a", "b"]}]}))
    assert manual_partition(path, ["a", "b"]).n_groups == 1


def test_validator_rejects_bad_partitions():
    with pytest.raises(PartitionError, match="both"):
        validate_partition(FeatureGroupPartition([("a", (0, 1)), ("b", (1,))]), 2)
    with pytest.raises(PartitionError, match="not assigned"):
        validate_partition(FeatureGroupPartition([("a", (0,))]), 2)
    with pytest.raises(PartitionError, match="empty"):
        validate_partition(FeatureGroupPartition([("a", (0, 1)), ("b", ())]), 2)


def test_correlation_partition_pairs_copies():
    rng = np.random.default_rng(0)
    f1 = rng.normal(size=500)
    X = np.column_stack([f1, f1, rng.normal(size=500)])
    part = correlation_partition(X, 2)
    assert [c for _, c in part.groups] == [(0, 1), (2,)]
    assert sizes(correlation_partition(X, 3)) == [1, 1, 1]


def test_constant_columns_are_uncorrelated():
    rng = np.random.default_rng(1)
    X = np.column_stack([np.ones(50), np.ones(50), rng.normal(size=50)])
    assert np.all(correlation_distance(X)[0] == [0, 1, 1])
    part = correlation_partition(X, 2)
    assert sorted(i for _, c in part.groups for i in c) == [0, 1, 2]


def test_mi_partition_pairs_monotone_transform():
    rng = np.random.default_rng(2)
    f1 = rng.normal(size=2000)
    X = np.column_stack([f1, np.exp(f1), rng.normal(size=2000)])
    assert mutual_information_distance(X)[0, 1] == pytest.approx(0, abs=1e-12)
    assert [c for _, c in mi_partition(X, 2).groups] == [(0, 1), (2,)]
    X = np.column_stack([X, np.zeros(2000)])
    assert np.all(mutual_information_distance(X)[3, :3] == 1.0)


@pytest.mark.parametrize("fn", [correlation_partition, mi_partition, random_round_robin_partition])
def test_group_count_out_of_range(fn):
    X = np.random.default_rng(0).random((20, 4))
    arg = 4 if fn is random_round_robin_partition else X
    for G in (1, 5):
        with pytest.raises(PartitionError):
            fn(arg, G)


def test_round_robin_identity_deal():
    groups = deal_round_robin(range(10), 3)
    assert groups == [[0, 3, 6, 9], [1, 4, 7], [2, 5, 8]]


def test_round_robin_seeds_differ():
    parts = {tuple(c for _, c in random_round_robin_partition(12, 3, s).groups) for s in range(5)}
    assert len(parts) == 5


@settings(max_examples=100, deadline=None)
@given(n=st.integers(2, 60), data=st.data())
def test_round_robin_is_balanced_cover(n, data):
    G = data.draw(st.integers(2, n))
    part = random_round_robin_partition(n, G, data.draw(st.integers(0, 2**31)))
    assert max(sizes(part)) - min(sizes(part)) <= 1
    assert sorted(i for _, c in part.groups for i in c) == list(range(n))


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**31), n=st.integers(2, 9), data=st.data())
def test_average_linkage_matches_naive(seed, n, data):
    rng = np.random.default_rng(seed)
    A = rng.random((n, n))
    dist = (A + A.T) / 2
    np.fill_diagonal(dist, 0)
    G = data.draw(st.integers(1, n))
    assert sorted(average_linkage(dist, G)) == naive_average_linkage(dist, G)


def test_linkage_tie_breaks_on_indices():
    dist = np.ones((4, 4)) - np.eye(4)
    assert sorted(average_linkage(dist, 3)) == [[0, 1], [2], [3]]


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_automatic_strategies_are_permutation_equivariant(seed):
    rng = np.random.default_rng(seed)
    base = rng.normal(size=(300, 3))
    X = np.column_stack([base[:, [0, 0, 1, 1, 2, 2]] + 0.7 * rng.normal(size=(300, 6)), rng.normal(size=300)])
    perm = rng.permutation(X.shape[1])
    for fn in (correlation_partition, mi_partition):
        plain = {frozenset(c) for _, c in fn(X, 3).groups}
        permuted = {frozenset(int(perm[i]) for i in c) for _, c in fn(X[:, perm], 3).groups}
        assert plain == permuted
