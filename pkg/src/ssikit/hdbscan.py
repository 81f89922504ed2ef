"""Density-based hierarchical clustering with noise filtering.

The full pipeline: core distances -> mutual reachability -> minimum
spanning tree -> single-linkage dendrogram -> condensed tree -> stability
(excess-of-mass) cluster selection with a merge-epsilon floor.  Everything
is exact O(n^2); no spatial index.

Determinism rules pinned here (tests rely on them bit-for-bit):

* Euclidean distances accumulate squared differences dimension by
  dimension, left to right, so results are reproducible across the
  vectorized path and a scalar reimplementation.
* All edge ties break lexicographically by (weight, min index, max index).
  Under that total order the minimum spanning tree is unique, so any
  correct algorithm returns the same edge set.
* lambda = 1/distance, with zero distances capped at MAX_LAMBDA (a large
  finite sentinel keeps stability sums overflow-free) and infinite
  distances mapped to lambda 0.
* Cluster stabilities are exact-rounded per-point sums (math.fsum), so
  selection decisions do not depend on summation order.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

NOISE = -1

# 1/distance sentinel for zero-distance merges; large but far from float
# overflow so per-cluster stability sums stay finite.
MAX_LAMBDA = 1e15


@dataclass(frozen=True)
class ClusterParams:
    """Clustering hyperparameters; defaults follow the reference setup."""

    min_samples: int = 5
    min_cluster_size: int = 25
    merge_epsilon: float = 0.3
    metric: str = "euclidean"

    def __post_init__(self):
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")
        if self.min_cluster_size < 2:
            raise ValueError("min_cluster_size must be >= 2")
        if not (self.merge_epsilon >= 0.0):
            raise ValueError("merge_epsilon must be >= 0")
        if self.metric != "euclidean":
            raise ValueError(f"unsupported metric {self.metric!r}")


@dataclass(frozen=True)
class MstEdge:
    a: int
    b: int
    weight: float


@dataclass(frozen=True)
class CondensedNode:
    node_id: int
    parent_id: int | None
    lambda_birth: float
    lambda_death: float
    size: int
    kind: str  # "cluster" or "point"


@dataclass
class Labeling:
    """Per-point cluster assignment; NOISE marks filtered points."""

    labels: np.ndarray
    n_clusters: int


def lambda_of(weight: float) -> float:
    """Density scale of a merge distance (1/weight with capped extremes)."""
    if weight <= 0.0:
        return MAX_LAMBDA
    if math.isinf(weight):
        return 0.0
    return min(1.0 / weight, MAX_LAMBDA)


def _dist_row(points: np.ndarray, i: int) -> np.ndarray:
    # Accumulate per dimension: bitwise-identical to a scalar left-to-right
    # loop, which keeps an independent reimplementation exactly comparable.
    acc = np.zeros(points.shape[0], dtype=np.float64)
    for k in range(points.shape[1]):
        diff = points[i, k] - points[:, k]
        acc += diff * diff
    return np.sqrt(acc)


def _as_points(points) -> np.ndarray:
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError("points must be a 2-d array")
    if not np.all(np.isfinite(arr)):
        raise ValueError("points contain non-finite values")
    return arr


def core_distances(points, min_samples: int) -> np.ndarray:
    """Distance from each point to its min_samples-th nearest other point.

    Points with fewer than min_samples neighbors get +inf and can never
    join a cluster.
    """
    arr = _as_points(points)
    n = arr.shape[0]
    if min_samples < 1:
        raise ValueError("min_samples must be >= 1")
    if n - 1 < min_samples:
        return np.full(n, np.inf)
    core = np.empty(n, dtype=np.float64)
    for i in range(n):
        row = _dist_row(arr, i)
        # row includes the self-distance 0, so the k-th nearest *other*
        # point sits at sorted index k.
        core[i] = np.partition(row, min_samples)[min_samples]
    return core


def mutual_reachability(dist_ab: float, core_a: float, core_b: float) -> float:
    """Mutual reachability distance: max of base distance and both cores."""
    return max(dist_ab, core_a, core_b)


def minimum_spanning_tree(points, core: Sequence[float]) -> list[MstEdge]:
    """MST of the complete mutual-reachability graph (Prim, O(n^2)).

    Edge comparisons use the total order (weight, min index, max index),
    which makes the MST unique; edges are returned in that order.
    """
    arr = _as_points(points)
    core = np.asarray(core, dtype=np.float64)
    n = arr.shape[0]
    if core.shape != (n,):
        raise ValueError("core distances do not match point count")
    if n <= 1:
        return []

    idx = np.arange(n)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best_w = np.maximum(_dist_row(arr, 0), np.maximum(core, core[0]))
    best_parent = np.zeros(n, dtype=np.int64)
    edges: list[MstEdge] = []

    for _ in range(n - 1):
        outside = np.nonzero(~in_tree)[0]
        w_out = best_w[outside]
        cands = outside[w_out == w_out.min()]
        if len(cands) == 1:
            j = int(cands[0])
        else:
            j = min(
                (int(c) for c in cands),
                key=lambda c: (min(int(best_parent[c]), c), max(int(best_parent[c]), c)),
            )
        edges.append(MstEdge(int(best_parent[j]), j, float(best_w[j])))
        in_tree[j] = True
        if len(edges) == n - 1:
            break
        row = np.maximum(_dist_row(arr, j), np.maximum(core, core[j]))
        a_new = np.minimum(idx, j)
        b_new = np.maximum(idx, j)
        a_old = np.minimum(idx, best_parent)
        b_old = np.maximum(idx, best_parent)
        upd = (~in_tree) & (
            (row < best_w)
            | (
                (row == best_w)
                & ((a_new < a_old) | ((a_new == a_old) & (b_new < b_old)))
            )
        )
        best_w[upd] = row[upd]
        best_parent[upd] = j

    edges.sort(key=lambda e: (e.weight, min(e.a, e.b), max(e.a, e.b)))
    return edges


def _single_linkage_merges(
    edges: list[MstEdge], n: int
) -> list[tuple[int, int, float, int]]:
    """Union-find pass over sorted edges -> (left, right, weight, size) rows.

    Row t merges two dendrogram nodes into node n + t; leaves are 0..n-1.
    """
    parent = list(range(2 * n - 1))
    size = [1] * (2 * n - 1)

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    merges: list[tuple[int, int, float, int]] = []
    for t, edge in enumerate(edges):
        ra, rb = find(edge.a), find(edge.b)
        node = n + t
        merges.append((min(ra, rb), max(ra, rb), edge.weight, size[ra] + size[rb]))
        size[node] = size[ra] + size[rb]
        parent[ra] = node
        parent[rb] = node
    return merges


@dataclass
class CondensedTree:
    """Condensed cluster hierarchy.

    Rows are (parent, child, lambda, size): child is a point (< n_points)
    falling out of its parent cluster at that density, or a cluster
    (>= n_points) born at that density.  The root cluster id is n_points.
    """

    n_points: int
    min_cluster_size: int
    parents: list[int] = field(default_factory=list)
    children: list[int] = field(default_factory=list)
    lambdas: list[float] = field(default_factory=list)
    sizes: list[int] = field(default_factory=list)

    @property
    def root(self) -> int:
        return self.n_points

    def rows(self):
        return zip(self.parents, self.children, self.lambdas, self.sizes)

    def cluster_ids(self) -> list[int]:
        ids = {self.root}
        for parent, child, _, _ in self.rows():
            ids.add(parent)
            if child >= self.n_points:
                ids.add(child)
        return sorted(ids)

    def cluster_maps(self) -> tuple[dict[int, int | None], dict[int, float]]:
        """One-pass (parent_of, birth_lambda) maps over all cluster ids."""
        parent_of: dict[int, int | None] = {self.root: None}
        birth: dict[int, float] = {self.root: 0.0}
        for parent, child, lam, _ in self.rows():
            parent_of.setdefault(parent, None)
            birth.setdefault(parent, 0.0)
            if child >= self.n_points:
                parent_of[child] = parent
                birth[child] = lam
        return parent_of, birth

    def cluster_children(self, cid: int) -> list[int]:
        return [
            child
            for parent, child, _, _ in self.rows()
            if parent == cid and child >= self.n_points
        ]

    def cluster_parent(self, cid: int) -> int | None:
        for parent, child, _, _ in self.rows():
            if child == cid:
                return parent
        return None

    def birth_lambda(self, cid: int) -> float:
        if cid == self.root:
            return 0.0
        for parent, child, lam, _ in self.rows():
            if child == cid:
                return lam
        raise KeyError(f"unknown cluster {cid}")

    def point_rows(self) -> list[tuple[int, int, float]]:
        return [
            (parent, child, lam)
            for parent, child, lam, _ in self.rows()
            if child < self.n_points
        ]

    def cluster_point_count(self) -> dict[int, int]:
        counts = {cid: 0 for cid in self.cluster_ids()}
        parent_of = {}
        for parent, child, _, size in self.rows():
            if child >= self.n_points:
                parent_of[child] = parent
            else:
                counts[parent] += 1
        for cid in sorted(counts, reverse=True):
            if cid in parent_of:
                counts[parent_of[cid]] += counts[cid]
        return counts

    def stability(self) -> dict[int, float]:
        """Per-cluster excess of mass: sum over points of
        (lambda at which the point leaves the cluster) - (birth lambda).

        Summed with math.fsum so the result is independent of term order.
        """
        birth = {self.root: 0.0}
        for parent, child, lam, _ in self.rows():
            if child >= self.n_points:
                birth[child] = lam
        terms: dict[int, list[float]] = {cid: [] for cid in self.cluster_ids()}
        for parent, child, lam, size in self.rows():
            t = lam - birth[parent]
            if child >= self.n_points:
                terms[parent].extend([t] * size)
            else:
                terms[parent].append(t)
        return {cid: math.fsum(ts) for cid, ts in terms.items()}

    def cluster_descendants(self, cid: int) -> list[int]:
        out: list[int] = []
        stack = list(self.cluster_children(cid))
        while stack:
            node = stack.pop()
            out.append(node)
            stack.extend(self.cluster_children(node))
        return out

    def nodes(self) -> list[CondensedNode]:
        """Node-oriented view (clusters and points) of the hierarchy."""
        birth = {self.root: 0.0}
        parent_of: dict[int, int | None] = {self.root: None}
        split_lambda: dict[int, float] = {}
        fallout_max: dict[int, float] = {}
        counts = self.cluster_point_count()
        out: list[CondensedNode] = []
        for parent, child, lam, _ in self.rows():
            if child >= self.n_points:
                birth[child] = lam
                parent_of[child] = parent
                split_lambda[parent] = lam
            else:
                fallout_max[parent] = max(fallout_max.get(parent, lam), lam)
                out.append(
                    CondensedNode(child, parent, lam, math.inf, 1, "point")
                )
        for cid in self.cluster_ids():
            death = split_lambda.get(cid, fallout_max.get(cid, birth[cid]))
            out.append(
                CondensedNode(
                    cid, parent_of.get(cid), birth[cid], death, counts[cid], "cluster"
                )
            )
        return out

    def to_jsonl(self, path) -> None:
        """Debug dump: one row record per line."""
        with open(path, "w", encoding="utf-8") as fh:
            for parent, child, lam, size in self.rows():
                fh.write(
                    json.dumps(
                        {"parent": parent, "child": child, "lambda": lam, "size": size}
                    )
                    + "\n"
                )


def condensed_hierarchy(
    mst: list[MstEdge], n: int, min_cluster_size: int
) -> CondensedTree:
    """Single-linkage over the MST, condensed by minimum cluster size.

    A dendrogram split is a true cluster split only when both sides have at
    least min_cluster_size points; otherwise the smaller side's points fall
    out of the current cluster at lambda = 1/weight of the split.
    """
    if min_cluster_size < 2:
        raise ValueError("min_cluster_size must be >= 2")
    tree = CondensedTree(n_points=n, min_cluster_size=min_cluster_size)
    if n <= 1:
        return tree
    edges = sorted(mst, key=lambda e: (e.weight, min(e.a, e.b), max(e.a, e.b)))
    if len(edges) != n - 1:
        raise ValueError("edge list does not span the points")
    merges = _single_linkage_merges(edges, n)

    def node_size(x: int) -> int:
        return 1 if x < n else merges[x - n][3]

    def leaves_under(x: int) -> list[int]:
        out: list[int] = []
        stack = [x]
        while stack:
            y = stack.pop()
            if y < n:
                out.append(y)
            else:
                stack.extend(merges[y - n][:2])
        return sorted(out)

    def emit(cluster: int, child: int, lam: float, size: int) -> None:
        tree.parents.append(cluster)
        tree.children.append(child)
        tree.lambdas.append(lam)
        tree.sizes.append(size)

    root_dnode = 2 * n - 2
    relabel = {root_dnode: tree.root}
    next_label = tree.root + 1
    queue = deque([root_dnode])
    while queue:
        dnode = queue.popleft()
        cluster = relabel[dnode]
        left, right, weight, _ = merges[dnode - n]
        lam = lambda_of(weight)
        left_n, right_n = node_size(left), node_size(right)
        if left_n >= min_cluster_size and right_n >= min_cluster_size:
            for child in (left, right):
                label = next_label
                next_label += 1
                relabel[child] = label
                emit(cluster, label, lam, node_size(child))
                queue.append(child)
        elif left_n < min_cluster_size and right_n < min_cluster_size:
            for child in (left, right):
                for p in leaves_under(child):
                    emit(cluster, p, lam, 1)
        else:
            keep, drop = (left, right) if left_n >= min_cluster_size else (right, left)
            for p in leaves_under(drop):
                emit(cluster, p, lam, 1)
            relabel[keep] = cluster
            queue.append(keep)
    return tree


def _birth_distance(tree: CondensedTree, cid: int, birth: dict[int, float]) -> float:
    lam = birth[cid]
    return math.inf if lam <= 0.0 else 1.0 / lam


def _excess_of_mass(tree: CondensedTree) -> set[int]:
    """Stability-maximizing antichain of non-root clusters.

    A node beats its children when its stability is at least the sum of the
    stabilities selected below it; the root wins only when it has no
    cluster children at all.
    """
    clusters = tree.cluster_ids()
    parent_of, _ = tree.cluster_maps()
    kids: dict[int, list[int]] = {cid: [] for cid in clusters}
    for cid in clusters:
        if cid != tree.root:
            kids[parent_of[cid]].append(cid)
    stab = tree.stability()
    subtree_stab = dict(stab)
    chosen = {cid: cid != tree.root for cid in clusters}
    for cid in sorted(clusters, reverse=True):
        if cid == tree.root or not kids[cid]:
            continue
        child_total = math.fsum(subtree_stab[k] for k in kids[cid])
        if stab[cid] >= child_total:
            subtree_stab[cid] = stab[cid]
            stack = list(kids[cid])
            while stack:
                node = stack.pop()
                chosen[node] = False
                stack.extend(kids[node])
        else:
            chosen[cid] = False
            subtree_stab[cid] = child_total
    selected = {cid for cid, keep in chosen.items() if keep}
    if not selected:
        selected = {tree.root}
    return selected


def _merge_shallow_clusters(
    tree: CondensedTree, selected: set[int], merge_epsilon: float
) -> set[int]:
    """Replace clusters born below the epsilon floor by deeper ancestors.

    Each selected cluster whose birth distance is < epsilon climbs to its
    nearest ancestor with birth distance >= epsilon, stopping below the
    root; overlapping results are resolved by keeping the ancestors.
    """
    parent, birth = tree.cluster_maps()
    replacements: set[int] = set()
    for cid in sorted(selected):
        node = cid
        while _birth_distance(tree, node, birth) < merge_epsilon:
            up = parent[node]
            if up is None or up == tree.root:
                break
            node = up
        replacements.add(node)
    final: set[int] = set()
    for cid in replacements:
        anc = parent[cid]
        while anc is not None and anc not in replacements:
            anc = parent[anc]
        if anc is None:
            final.add(cid)
    return final


def _label_root_only(tree: CondensedTree, merge_epsilon: float) -> Labeling:
    # Single-cluster tree: the root is the only candidate.  Points dense
    # enough to persist to the end (or past the epsilon density) form the
    # cluster, provided enough of them remain to satisfy the size rule.
    labels = np.full(tree.n_points, NOISE, dtype=np.int64)
    point_rows = tree.point_rows()
    if not point_rows:
        return Labeling(labels, 0)
    if merge_epsilon > 0.0:
        threshold = 1.0 / merge_epsilon
    else:
        threshold = max(lam for _, _, lam in point_rows)
    members = [p for _, p, lam in point_rows if lam >= threshold]
    if len(members) < tree.min_cluster_size:
        return Labeling(labels, 0)
    labels[members] = 0
    return Labeling(labels, 1)


def select_clusters(tree: CondensedTree, merge_epsilon: float) -> Labeling:
    """Excess-of-mass selection plus epsilon merging and noise labeling."""
    if not (merge_epsilon >= 0.0):
        raise ValueError("merge_epsilon must be >= 0")
    selected = _excess_of_mass(tree)
    if merge_epsilon > 0.0 and selected != {tree.root}:
        selected = _merge_shallow_clusters(tree, selected, merge_epsilon)
    if selected == {tree.root}:
        return _label_root_only(tree, merge_epsilon)

    # Map every cluster to the selected ancestor-or-self covering it, then
    # label each point through its fall-out cluster.
    covering: dict[int, int | None] = {}
    parent, _ = tree.cluster_maps()
    for cid in sorted(tree.cluster_ids()):
        if cid == tree.root:
            covering[cid] = None
        elif cid in selected:
            covering[cid] = cid
        else:
            covering[cid] = covering[parent[cid]]

    members: dict[int, list[int]] = {cid: [] for cid in selected}
    for cluster, point, _ in tree.point_rows():
        owner = covering[cluster]
        if owner is not None:
            members[owner].append(point)

    labels = np.full(tree.n_points, NOISE, dtype=np.int64)
    order = sorted(selected, key=lambda cid: min(members[cid]))
    for dense_id, cid in enumerate(order):
        labels[members[cid]] = dense_id
    return Labeling(labels, len(order))


def cluster(points, params: ClusterParams) -> Labeling:
    """Full clustering pipeline over an embedding matrix."""
    arr = _as_points(points)
    n = arr.shape[0]
    if n == 0:
        raise ValueError("cluster requires at least one point")
    if n == 1:
        return Labeling(np.full(1, NOISE, dtype=np.int64), 0)
    core = core_distances(arr, params.min_samples)
    mst = minimum_spanning_tree(arr, core)
    tree = condensed_hierarchy(mst, n, params.min_cluster_size)
    return select_clusters(tree, params.merge_epsilon)
