"""Complete-linkage clustering of series driven by the pairwise max statistics.

The dissimilarity between two series is their multiscale pair maximum; the
dissimilarity between clusters is the complete-linkage max over cross pairs.
Cutting the merge tree at the smallest r whose clusters are all internally
below the critical value q estimates the number of distinct trend groups.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .multiscale import TestReport, minimal_intervals
from .panel import LocationScalePoint

__all__ = [
    "Merge",
    "ClusterTree",
    "GroupStructure",
    "dissimilarity",
    "hac_tree",
    "partition_at",
    "estimate_num_groups",
    "group_difference_intervals",
    "classification_errors",
    "build_group_structure",
]


@dataclass(frozen=True)
class Merge:
    """One agglomeration step: clusters ``left`` < ``right`` joined at ``height``."""

    left: int
    right: int
    height: float
    new_id: int


@dataclass(frozen=True)
class ClusterTree:
    """Full merge history over leaves 0..n_leaves-1; new ids continue upward."""

    n_leaves: int
    merges: tuple[Merge, ...]


@dataclass(frozen=True, eq=False)
class GroupStructure:
    """A partition with per-group internal maxima and between-group interval sets."""

    n_groups: int
    groups: tuple[tuple[int, ...], ...]
    within_max: tuple[float, ...]
    between_intervals: dict[tuple[int, int], tuple[LocationScalePoint, ...]]


def _n_from_pair_count(m: int) -> int:
    n = int((1 + math.isqrt(1 + 8 * m)) // 2)
    if n * (n - 1) // 2 != m:
        raise ValueError(f"pair table of length {m} is not a full pair enumeration")
    return n


def _pair_pos(i: int, j: int, n: int) -> int:
    # lexicographic position of (i, j), i < j, in the fixed pair enumeration
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


def dissimilarity(S, S2, psi_max: np.ndarray) -> float:
    """Complete-linkage dissimilarity: max pair statistic across the two sets.

    With S equal to S2 the max runs over unordered pairs inside the set; a
    singleton against itself has no pair and returns -inf so it always
    passes a threshold.
    """
    a = sorted(set(int(v) for v in S))
    b = sorted(set(int(v) for v in S2))
    if not a or not b:
        raise ValueError("dissimilarity needs non-empty sets")
    n = _n_from_pair_count(len(psi_max))
    if a == b:
        if len(a) == 1:
            return float("-inf")
        pairs = itertools.combinations(a, 2)
    else:
        pairs = ((i, j) for i in a for j in b if i != j)
    best = float("-inf")
    for i, j in pairs:
        lo, hi = (i, j) if i < j else (j, i)
        v = float(psi_max[_pair_pos(lo, hi, n)])
        if v > best:
            best = v
    return best


def hac_tree(psi_max: np.ndarray, n: int) -> ClusterTree:
    """Agglomerate singletons by repeatedly merging the min-dissimilarity pair.

    Ties break on the lexicographically smallest (smaller-id, larger-id).
    Complete linkage updates by the max rule, so heights never decrease.
    """
    if n < 2:
        raise ValueError(f"clustering needs n >= 2, got {n}")
    if len(psi_max) != n * (n - 1) // 2:
        raise ValueError(
            f"pair table length {len(psi_max)} does not match n={n}"
        )
    dist: dict[tuple[int, int], float] = {}
    for i in range(n):
        for j in range(i + 1, n):
            dist[(i, j)] = float(psi_max[_pair_pos(i, j, n)])
    active = set(range(n))
    merges = []
    next_id = n
    while len(active) > 1:
        best = min(dist.items(), key=lambda kv: (kv[1], kv[0]))
        (a, b), height = best
        for c in active:
            if c in (a, b):
                continue
            da = dist.pop((min(a, c), max(a, c)))
            db = dist.pop((min(b, c), max(b, c)))
            dist[(min(c, next_id), max(c, next_id))] = max(da, db)
        del dist[(a, b)]
        active.discard(a)
        active.discard(b)
        active.add(next_id)
        merges.append(Merge(left=a, right=b, height=height, new_id=next_id))
        next_id += 1
    return ClusterTree(n_leaves=n, merges=tuple(merges))


def partition_at(tree: ClusterTree, r: int) -> tuple[tuple[int, ...], ...]:
    """Partition into r clusters: the state after n - r merges.

    Clusters are ordered by smallest member; members sorted ascending.
    """
    n = tree.n_leaves
    if not (1 <= r <= n):
        raise ValueError(f"cluster count r={r} outside 1..{n}")
    members: dict[int, list[int]] = {i: [i] for i in range(n)}
    for merge in tree.merges[: n - r]:
        left = members.pop(merge.left)
        right = members.pop(merge.right)
        members[merge.new_id] = sorted(left + right)
    return tuple(sorted((tuple(v) for v in members.values()), key=lambda c: c[0]))


def estimate_num_groups(tree: ClusterTree, psi_max: np.ndarray, q: float) -> int:
    """Smallest r whose r-partition has every cluster internally below q.

    Singletons contribute -inf, so r = n always passes and the estimate is
    well-defined. Monotone: a larger q can only shrink the estimate.
    """
    if not math.isfinite(q):
        raise ValueError(f"threshold q must be finite, got {q}")
    for r in range(1, tree.n_leaves + 1):
        worst = max(
            dissimilarity(c, c, psi_max) for c in partition_at(tree, r)
        )
        if worst <= q:
            return r
    return tree.n_leaves


def _partition_as_indices(partition, report: TestReport) -> list[list[int]]:
    index_of = {sid: k for k, sid in enumerate(report.series_ids)}
    out = []
    for group in partition:
        idx = []
        for member in group:
            if isinstance(member, str):
                idx.append(index_of[member])
            else:
                idx.append(int(member))
        out.append(sorted(idx))
    return out


def group_difference_intervals(
    partition, report: TestReport, reduce_minimal: bool = False
) -> dict[tuple[int, int], tuple[LocationScalePoint, ...]]:
    """Union of the pairwise rejection sets across each group pair.

    Keys are group index pairs (l, l2) with l < l2 in the partition's order;
    values are deduplicated points sorted by (u, h). With ``reduce_minimal``
    the union is reduced to its minimal intervals.
    """
    groups = _partition_as_indices(partition, report)
    ids = report.series_ids
    out: dict[tuple[int, int], tuple[LocationScalePoint, ...]] = {}
    for l in range(len(groups)):
        for l2 in range(l + 1, len(groups)):
            points = set()
            for i in groups[l]:
                for j in groups[l2]:
                    key = (ids[min(i, j)], ids[max(i, j)])
                    points.update(report.rejections.get(key, ()))
            union = tuple(sorted(points))
            if reduce_minimal:
                union = minimal_intervals(union)
            out[(l, l2)] = union
    return out


def _overlap_matrix(truth, estimated) -> tuple[np.ndarray, int]:
    t_sets = [frozenset(g) for g in truth]
    e_sets = [frozenset(g) for g in estimated]
    universe_t = frozenset().union(*t_sets) if t_sets else frozenset()
    universe_e = frozenset().union(*e_sets) if e_sets else frozenset()
    if universe_t != universe_e:
        raise ValueError("partitions cover different id sets")
    total = sum(len(g) for g in t_sets)
    if total != len(universe_t) or sum(len(g) for g in e_sets) != len(universe_e):
        raise ValueError("inputs are not partitions (overlapping groups)")
    overlap = np.array(
        [[len(g & e) for e in e_sets] for g in t_sets], dtype=np.int64
    )
    return overlap, total


def classification_errors(estimated, truth) -> int:
    """Members of true groups missed by the best label matching.

    Minimizes sum_l |G_l minus Ghat_(pi(l))| over injective-as-possible label
    maps pi; true groups without a partner count whole. Small cases are
    enumerated exactly; larger ones use an optimal assignment, which attains
    the same maximum-overlap optimum.
    """
    overlap, total = _overlap_matrix(truth, estimated)
    n_t, n_e = overlap.shape
    k = max(n_t, n_e)
    if k <= 8:
        padded = np.zeros((k, k), dtype=np.int64)
        padded[:n_t, :n_e] = overlap
        best = max(
            sum(padded[l, perm[l]] for l in range(k))
            for perm in itertools.permutations(range(k))
        )
    else:
        rows, cols = linear_sum_assignment(overlap, maximize=True)
        best = int(overlap[rows, cols].sum())
    return int(total - best)


def build_group_structure(
    tree: ClusterTree,
    psi_max: np.ndarray,
    report: TestReport,
    n_groups: int | None = None,
) -> GroupStructure:
    """Assemble the estimated grouping: partition, internal maxima, interval sets.

    Without an explicit ``n_groups`` the count is estimated against the
    report's critical value.
    """
    if n_groups is None:
        n_groups = estimate_num_groups(tree, psi_max, report.critical_value.q)
    groups = partition_at(tree, n_groups)
    within = tuple(dissimilarity(g, g, psi_max) for g in groups)
    between = group_difference_intervals(groups, report)
    return GroupStructure(
        n_groups=n_groups,
        groups=groups,
        within_max=within,
        between_intervals=between,
    )
