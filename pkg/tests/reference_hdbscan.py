"""Straight-from-definition reference clustering used as the test oracle.

Deliberately independent of ssikit.hdbscan: scalar distance loops, Kruskal
over the full edge list (no MST shortcut), a recursive condensation, and a
recursive stability selection.  Shares only the pinned conventions every
implementation of this pipeline must agree on: left-to-right squared-
difference accumulation for distances, (weight, min, max) edge ordering,
the capped lambda scale, exact-rounded (fsum) stability sums, and the
root/epsilon/size labeling rules.
"""

from __future__ import annotations

import math

NOISE = -1
MAX_LAMBDA = 1e15


def _lam(weight: float) -> float:
    if weight <= 0.0:
        return MAX_LAMBDA
    if math.isinf(weight):
        return 0.0
    return min(1.0 / weight, MAX_LAMBDA)


def _distance(a, b) -> float:
    acc = 0.0
    for x, y in zip(a, b):
        diff = x - y
        acc += diff * diff
    return math.sqrt(acc)


def _core_distances(points, min_samples: int) -> list[float]:
    n = len(points)
    if n - 1 < min_samples:
        return [math.inf] * n
    core = []
    for i in range(n):
        others = sorted(_distance(points[i], points[j]) for j in range(n) if j != i)
        core.append(others[min_samples - 1])
    return core


class _Node:
    """Dendrogram node from agglomerative single linkage."""

    __slots__ = ("left", "right", "weight", "points")

    def __init__(self, left, right, weight, points):
        self.left = left
        self.right = right
        self.weight = weight
        self.points = points


class _Cluster:
    """Condensed cluster: direct fall-outs plus at most two child clusters."""

    __slots__ = ("birth", "parent", "children", "fallouts", "split_lambda")

    def __init__(self, birth, parent):
        self.birth = birth
        self.parent = parent
        self.children: list["_Cluster"] = []
        self.fallouts: list[tuple[int, float]] = []
        self.split_lambda: float | None = None

    def point_leaves(self) -> list[tuple[int, float]]:
        """(point, lambda at which it leaves this cluster) for all members."""
        out = list(self.fallouts)
        for child in self.children:
            out.extend((p, self.split_lambda) for p, _ in child.point_leaves())
        return out

    def stability(self) -> float:
        return math.fsum(lam - self.birth for _, lam in self.point_leaves())

    def subtree(self) -> list["_Cluster"]:
        out = [self]
        for child in self.children:
            out.extend(child.subtree())
        return out


def _single_linkage(points, core) -> _Node:
    n = len(points)
    edges = []
    for i in range(n):
        for j in range(i + 1, n):
            weight = max(_distance(points[i], points[j]), core[i], core[j])
            edges.append((weight, i, j))
    edges.sort()

    component = {i: _Node(None, None, None, [i]) for i in range(n)}
    find = list(range(n))

    def root_of(x):
        while find[x] != x:
            x = find[x]
        return x

    merged = None
    for weight, i, j in edges:
        ri, rj = root_of(i), root_of(j)
        if ri == rj:
            continue
        merged = _Node(
            component[ri],
            component[rj],
            weight,
            component[ri].points + component[rj].points,
        )
        find[ri] = rj
        component[rj] = merged
    return merged


def _condense(dnode: _Node, cluster: _Cluster, min_cluster_size: int) -> None:
    lam = _lam(dnode.weight)
    left, right = dnode.left, dnode.right
    n_left, n_right = len(left.points), len(right.points)
    if n_left >= min_cluster_size and n_right >= min_cluster_size:
        cluster.split_lambda = lam
        for side in (left, right):
            child = _Cluster(lam, cluster)
            cluster.children.append(child)
            _condense(side, child, min_cluster_size)
    elif n_left < min_cluster_size and n_right < min_cluster_size:
        for side in (left, right):
            cluster.fallouts.extend((p, lam) for p in side.points)
    else:
        keep, drop = (left, right) if n_left >= min_cluster_size else (right, left)
        cluster.fallouts.extend((p, lam) for p in drop.points)
        _condense(keep, cluster, min_cluster_size)


def _select(cluster: _Cluster, is_root: bool) -> tuple[list[_Cluster], float]:
    if not cluster.children:
        own = cluster.stability()
        return [cluster], own
    parts = [_select(child, False) for child in cluster.children]
    below = [c for chosen, _ in parts for c in chosen]
    below_total = math.fsum(total for _, total in parts)
    if is_root:
        return below, below_total
    own = cluster.stability()
    if own >= below_total:
        return [cluster], own
    return below, below_total


def _birth_distance(cluster: _Cluster) -> float:
    return math.inf if cluster.birth <= 0.0 else 1.0 / cluster.birth


def _epsilon_merge(selected, root: _Cluster, merge_epsilon: float):
    replacements = []
    for cluster in selected:
        node = cluster
        while _birth_distance(node) < merge_epsilon:
            if node.parent is None or node.parent is root:
                break
            node = node.parent
        if node not in replacements:
            replacements.append(node)
    final = []
    for cluster in replacements:
        anc = cluster.parent
        while anc is not None and anc not in replacements:
            anc = anc.parent
        if anc is None:
            final.append(cluster)
    return final


def reference_cluster(
    points, min_samples: int, min_cluster_size: int, merge_epsilon: float
) -> list[int]:
    """Cluster labels per the pinned semantics; NOISE (-1) marks filtered points."""
    n = len(points)
    if n == 0:
        raise ValueError("no points")
    labels = [NOISE] * n
    if n == 1:
        return labels

    core = _core_distances(points, min_samples)
    dendrogram = _single_linkage(points, core)
    root = _Cluster(0.0, None)
    _condense(dendrogram, root, min_cluster_size)

    selected, _ = _select(root, True)
    if not selected or selected == [root]:
        selected = [root]
    elif merge_epsilon > 0.0:
        selected = _epsilon_merge(selected, root, merge_epsilon)

    if selected == [root]:
        # Single-cluster tree: keep the points that persist past the
        # threshold density, if enough of them remain.
        if not root.fallouts:
            return labels
        if merge_epsilon > 0.0:
            threshold = 1.0 / merge_epsilon
        else:
            threshold = max(lam for _, lam in root.fallouts)
        members = [p for p, lam in root.fallouts if lam >= threshold]
        if len(members) >= min_cluster_size:
            for p in members:
                labels[p] = 0
        return labels

    member_lists = []
    for cluster in selected:
        member_lists.append(sorted(p for p, _ in cluster.point_leaves()))
    member_lists.sort(key=lambda members: members[0])
    for dense_id, members in enumerate(member_lists):
        for p in members:
            labels[p] = dense_id
    return labels
