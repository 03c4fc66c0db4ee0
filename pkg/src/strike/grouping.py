"""Feature-group partitions: manual config, correlation / mutual-information
clustering, and the seeded random round-robin baseline."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._util import mix

STRATEGIES = ("manual", "corr", "mi", "random")
MI_EPS = 1e-12


class PartitionError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureGroupPartition:
    groups: list[tuple[str, tuple[int, ...]]]
    strategy: str = "manual"
    seed: int | None = None

    @property
    def names(self) -> list[str]:
        return [name for name, _ in self.groups]

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def members(self, name: str) -> tuple[int, ...]:
        for g, cols in self.groups:
            if g == name:
                return cols
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"strategy": self.strategy, "seed": self.seed,
                "groups": [{"name": g, "columns": list(cols)} for g, cols in self.groups]}

    @classmethod
    def from_dict(cls, d: dict) -> FeatureGroupPartition:
        return cls([(g["name"], tuple(int(c) for c in g["columns"])) for g in d["groups"]],
                   d.get("strategy", "manual"), d.get("seed"))


def validate_partition(partition: FeatureGroupPartition, n_features: int) -> FeatureGroupPartition:
    """Groups must be non-empty, pairwise disjoint and cover every column."""
    seen: dict[int, str] = {}
    names = set()
    for name, cols in partition.groups:
        if name in names:
            raise PartitionError(f"duplicate group name {name!r}")
        names.add(name)
        if not cols:
            raise PartitionError(f"group {name!r} is empty")
        for c in cols:
            if not 0 <= c < n_features:
                raise PartitionError(f"group {name!r} references column {c} outside 0..{n_features - 1}")
            if c in seen:
                raise PartitionError(f"column {c} is in both {seen[c]!r} and {name!r}")
            seen[c] = name
    if len(seen) != n_features:
        missing = sorted(set(range(n_features)) - set(seen))
        raise PartitionError(f"columns {missing} are not assigned to any group")
    return partition


def _matches(pattern: str, name: str) -> bool:
    if pattern.endswith("=*"):
        return name.startswith(pattern[:-1])
    return pattern == name


def manual_partition(config, feature_names: list[str]) -> FeatureGroupPartition:
    """Build a partition from ``{"groups": [{"name", "features"}]}``.

    A feature entry ``"col=*"`` selects every one-hot column derived from raw
    column ``col``.
    """
    if isinstance(config, (str, Path)):
        config = json.loads(Path(config).read_text(encoding="utf-8"))
    specs = config["groups"] if isinstance(config, dict) and "groups" in config else config
    if isinstance(specs, dict):
        specs = [{"name": k, "features": v} for k, v in specs.items()]
    owner: dict[int, str] = {}
    groups = []
    for spec in specs:
        name = spec["name"]
        cols = []
        for pattern in spec["features"]:
            hit = [i for i, f in enumerate(feature_names) if _matches(pattern, f)]
            if not hit:
                raise PartitionError(f"group {name!r}: {pattern!r} matches no feature")
            for i in hit:
                if i in owner:
                    raise PartitionError(f"feature {feature_names[i]} matched by both {owner[i]!r} and {name!r}")
                owner[i] = name
                cols.append(i)
        if not cols:
            raise PartitionError(f"group {name!r} is empty")
        groups.append((name, tuple(sorted(cols))))
    for i, f in enumerate(feature_names):
        if i not in owner:
            raise PartitionError(f"feature {f} unassigned")
    return validate_partition(FeatureGroupPartition(groups, "manual"), len(feature_names))


def _check_g(G: int, n_features: int) -> None:
    if not 2 <= G <= n_features:
        raise PartitionError(f"G must lie in [2, {n_features}], got {G}")


def average_linkage(dist: np.ndarray, G: int) -> list[list[int]]:
    """Agglomerate until ``G`` clusters remain.

    Each step merges the pair with the smallest (distance, min index, max
    index), where a cluster's index is its smallest member. Distances between
    clusters are member-pair averages, maintained by the Lance-Williams update.
    """
    n = dist.shape[0]
    D = np.array(dist, dtype=np.float64, copy=True)
    np.fill_diagonal(D, np.inf)
    alive = list(range(n))
    members = {i: [i] for i in range(n)}
    while len(alive) > G:
        best = None
        for a_pos, a in enumerate(alive):
            row = D[a]
            for b in alive[a_pos + 1:]:
                key = (row[b], a, b)
                if best is None or key < best:
                    best = key
        _, a, b = best
        na, nb = len(members[a]), len(members[b])
        for c in alive:
            if c in (a, b):
                continue
            v = (na * D[a, c] + nb * D[b, c]) / (na + nb)
            D[a, c] = D[c, a] = v
        members[a] = sorted(members[a] + members.pop(b))
        alive.remove(b)
        D[b, :] = np.inf
        D[:, b] = np.inf
    return [members[a] for a in alive]


def _from_clusters(clusters, strategy, seed, prefix) -> FeatureGroupPartition:
    clusters = sorted(clusters, key=min)
    return FeatureGroupPartition([(f"{prefix}{i}", tuple(c)) for i, c in enumerate(clusters)], strategy, seed)


def correlation_distance(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    Xc = X - X.mean(axis=0)
    norms = np.sqrt(np.sum(Xc * Xc, axis=0))
    live = norms > 0
    corr = np.zeros((X.shape[1], X.shape[1]))
    Z = Xc[:, live] / norms[live]
    corr[np.ix_(live, live)] = Z.T @ Z
    corr = np.clip(corr, -1.0, 1.0)
    dist = 1.0 - np.abs(corr)
    dist = 0.5 * (dist + dist.T)
    np.fill_diagonal(dist, 0.0)
    return dist


def correlation_partition(ds, G: int, seed: int = 0) -> FeatureGroupPartition:
    """Average-linkage clusters on 1 - |pearson|; constant columns correlate 0."""
    X = ds.X if hasattr(ds, "X") else np.asarray(ds)
    _check_g(G, X.shape[1])
    clusters = average_linkage(correlation_distance(X), G)
    return validate_partition(_from_clusters(clusters, "corr", seed, "corr_"), X.shape[1])


def mutual_information_distance(X, B: int = 10) -> np.ndarray:
    from .cmi import entropy, mutual_information, quantile_bin

    X = np.asarray(X, dtype=np.float64)
    d = X.shape[1]
    binned = [quantile_bin(X[:, j], B) for j in range(d)]
    H = np.array([entropy(b) for b in binned])
    dist = np.zeros((d, d))
    for i in range(d):
        for j in range(i + 1, d):
            mi = mutual_information(binned[i], binned[j])
            dist[i, j] = dist[j, i] = 1.0 - mi / max(MI_EPS, min(H[i], H[j]))
    return np.clip(dist, 0.0, 1.0)


def mi_partition(ds, G: int, B: int = 10, seed: int = 0) -> FeatureGroupPartition:
    """Average-linkage clusters on 1 - MI / min(H_i, H_j) over quantile-binned columns."""
    X = ds.X if hasattr(ds, "X") else np.asarray(ds)
    _check_g(G, X.shape[1])
    clusters = average_linkage(mutual_information_distance(X, B), G)
    return validate_partition(_from_clusters(clusters, "mi", seed, "mi_"), X.shape[1])


def deal_round_robin(order, G: int) -> list[list[int]]:
    groups: list[list[int]] = [[] for _ in range(G)]
    for pos, idx in enumerate(order):
        groups[pos % G].append(int(idx))
    return groups


def random_round_robin_partition(n_features: int, G: int, seed: int = 0) -> FeatureGroupPartition:
    """Seeded shuffle of column indices dealt cyclically onto ``G`` groups."""
    _check_g(G, n_features)
    rng = np.random.default_rng(mix(seed, "round_robin"))
    order = np.arange(n_features)
    # Fisher-Yates, highest index first
    for i in range(n_features - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        order[i], order[j] = order[j], order[i]
    groups = deal_round_robin(order, G)
    part = FeatureGroupPartition([(f"random_{g}", tuple(sorted(m))) for g, m in enumerate(groups)], "random", seed)
    return validate_partition(part, n_features)


def single_group_partition(n_features: int, name: str = "all") -> FeatureGroupPartition:
    return FeatureGroupPartition([(name, tuple(range(n_features)))], "manual")
