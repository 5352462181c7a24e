"""Metric primitives on finite, time-indexed point sets.

Everything here is exact with respect to a brute-force scan: the kd-tree is
only used to propose candidates, and every distance that decides an ordering
or a threshold is recomputed with :func:`distance`'s formula.  Ties are broken
by the lower time index.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import InputError

__all__ = [
    "PointCloud",
    "ComponentPartition",
    "distance",
    "row_distances",
    "pairwise_distances",
    "knn",
    "knn_batch",
    "farthest_point_sample",
    "epsilon_components",
    "component_labels",
    "mst_edge_lengths",
    "mst_edges",
    "count_components",
]

# Above this many members epsilon_components switches from a dense distance
# matrix to kd-tree pair enumeration.
_DENSE_LIMIT = 512
# Target number of float64 cells per chunk in the batched helpers.
_CHUNK_CELLS = 1 << 21


@dataclass(frozen=True, eq=False)
class PointCloud:
    """An ordered trajectory ``x_0 .. x_{T-1}`` in ``R^d``.

    Row ``t`` is the point with time index ``t``; the successor of ``t`` is
    ``t + 1`` and does not exist for the last row.
    """

    points: np.ndarray
    _tree: cKDTree = field(init=False, repr=False)

    def __post_init__(self):
        pts = np.array(self.points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise InputError(f"points must be a non-empty (T, d) array, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise InputError("points must be finite")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        # built eagerly so concurrent queries never race on construction
        object.__setattr__(self, "_tree", cKDTree(pts))

    def __len__(self) -> int:
        return self.points.shape[0]

    @property
    def T(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    @property
    def tree(self) -> cKDTree:
        return self._tree

    def successor(self, t: int) -> int:
        if not 0 <= t < self.T - 1:
            raise InputError(f"index {t} has no successor in a cloud of length {self.T}")
        return t + 1


@dataclass
class ComponentPartition:
    """Blocks of an epsilon-component decomposition, ordered by smallest member."""

    blocks: list[np.ndarray]
    epsilon: float

    def __len__(self) -> int:
        return len(self.blocks)

    def block_of(self, index: int) -> int:
        for i, b in enumerate(self.blocks):
            if index in b:
                return i
        raise KeyError(index)


def _sq_norm(diff: np.ndarray) -> np.ndarray:
    # sequential accumulation over coordinates keeps batched and scalar
    # results bitwise identical
    acc = diff[..., 0] * diff[..., 0]
    for c in range(1, diff.shape[-1]):
        acc = acc + diff[..., c] * diff[..., c]
    return acc


def distance(a: Sequence[float], b: Sequence[float]) -> float:
    """Euclidean distance between two points of equal dimension."""
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    b = np.atleast_1d(np.asarray(b, dtype=np.float64))
    if a.shape != b.shape or a.ndim != 1:
        raise InputError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(_sq_norm(a - b)))


def row_distances(points: np.ndarray, p: np.ndarray) -> np.ndarray:
    """Distances from every row of ``points`` to the single point ``p``."""
    return np.sqrt(_sq_norm(points - p))


def pairwise_distances(P: np.ndarray) -> np.ndarray:
    """All-pairs distances; ``P`` is ``(n, d)`` or a batch ``(B, n, d)``."""
    return np.sqrt(_sq_norm(P[..., :, None, :] - P[..., None, :, :]))


def _run_chunks(fn: Callable[[slice], np.ndarray], n: int, chunk: int, workers: int) -> list:
    slices = [slice(i, min(i + chunk, n)) for i in range(0, n, chunk)]
    if workers <= 1 or len(slices) <= 1:
        return [fn(s) for s in slices]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, slices))


def _check_index(cloud: PointCloud, t: int) -> int:
    t = int(t)
    if not 0 <= t < cloud.T:
        raise InputError(f"index {t} out of range [0, {cloud.T - 1}]")
    return t


def _knn_brute(X: np.ndarray, t: int, k: int) -> np.ndarray:
    d = row_distances(X, X[t])
    d[t] = -1.0
    order = np.lexsort((np.arange(len(X)), d))
    return order[:k]


def knn_batch(cloud: PointCloud, ts: Iterable[int], k: int, workers: int = 1) -> np.ndarray:
    """``N_k(x_t)`` for many ``t`` at once, as a ``(len(ts), k)`` index array.

    Row ``i`` starts with ``ts[i]`` itself, followed by its ``k - 1`` nearest
    neighbours by increasing distance (lower index first on ties).
    """
    ts = np.asarray(list(ts) if not isinstance(ts, np.ndarray) else ts, dtype=np.int64).ravel()
    T = cloud.T
    if not 1 <= k <= T:
        raise InputError(f"k must satisfy 1 <= k <= T={T}, got {k}")
    if ts.size and (ts.min() < 0 or ts.max() >= T):
        raise InputError(f"query index out of range [0, {T - 1}]")
    if ts.size == 0:
        return np.empty((0, k), dtype=np.int64)
    if k == 1:
        return ts[:, None].copy()
    X = cloud.points
    q = min(T, k + 4)

    def work(s: slice) -> np.ndarray:
        qt = ts[s]
        _, cand = cloud.tree.query(X[qt], k=q)
        cand = np.asarray(cand, dtype=np.int64).reshape(len(qt), q)
        d = np.sqrt(_sq_norm(X[cand] - X[qt][:, None, :]))
        far = d.max(axis=1)
        is_self = cand == qt[:, None]
        d = np.where(is_self, -1.0, d)
        order = np.lexsort((cand, d), axis=-1)
        cand = np.take_along_axis(cand, order, axis=1)
        d = np.take_along_axis(d, order, axis=1)
        kth = d[:, k - 1]
        # every point outside the candidate list is at least `far` away, so
        # the top k are settled when `far` clears the k-th distance
        ok = is_self.any(axis=1) & ((q == T) | (far > kth + 1e-12 * np.abs(kth) + 1e-300))
        out = cand[:, :k].copy()
        for i in np.flatnonzero(~ok):
            out[i] = _knn_brute(X, int(qt[i]), k)
        return out

    chunk = max(1, _CHUNK_CELLS // (q * cloud.dim * 4))
    return np.concatenate(_run_chunks(work, ts.size, chunk, workers), axis=0)


def knn(cloud: PointCloud, t: int, k: int) -> np.ndarray:
    """Indices of ``N_k(x_t)``: ``t`` followed by its ``k - 1`` nearest neighbours."""
    t = _check_index(cloud, t)
    return knn_batch(cloud, [t], k)[0]


def farthest_point_sample(cloud: PointCloud, J: int, start: int = 0,
                          return_distances: bool = False):
    """Greedy max-min selection of ``J`` indices beginning at ``start``.

    With ``return_distances`` also returns the min-distance each selection
    achieved (``inf`` for the first), a non-increasing sequence.
    """
    T = cloud.T
    if not 1 <= J <= T:
        raise InputError(f"J must satisfy 1 <= J <= T={T}, got {J}")
    start = _check_index(cloud, start)
    X = cloud.points
    selected = np.empty(J, dtype=np.int64)
    achieved = np.empty(J)
    selected[0] = start
    achieved[0] = np.inf
    mind = row_distances(X, X[start])
    mind[start] = -np.inf
    for j in range(1, J):
        nxt = int(np.argmax(mind))  # first maximum -> lowest index on ties
        selected[j] = nxt
        achieved[j] = mind[nxt]
        np.minimum(mind, row_distances(X, X[nxt]), out=mind)
        mind[nxt] = -np.inf
    if return_distances:
        return selected, achieved
    return selected


def _labels_to_blocks(members: np.ndarray, labels: np.ndarray) -> list[np.ndarray]:
    # members are sorted, so first occurrence order == order by smallest member
    _, first = np.unique(labels, return_index=True)
    return [members[labels == labels[i]] for i in np.sort(first)]


def epsilon_components(cloud: PointCloud, members: Iterable[int], epsilon: float) -> ComponentPartition:
    """Split ``members`` into maximal epsilon-chained blocks (hops ``d < epsilon``)."""
    members = np.asarray(sorted(int(m) for m in members), dtype=np.int64)
    if members.size == 0:
        raise InputError("member set is empty")
    if not epsilon > 0:
        raise InputError(f"epsilon must be positive, got {epsilon}")
    if members[0] < 0 or members[-1] >= cloud.T:
        raise InputError(f"member index out of range [0, {cloud.T - 1}]")
    if np.any(np.diff(members) == 0):
        raise InputError("member set contains duplicates")
    n = members.size
    if n == 1:
        return ComponentPartition([members.copy()], float(epsilon))
    P = cloud.points[members]
    if n <= _DENSE_LIMIT:
        adj = pairwise_distances(P) < epsilon
    else:
        pairs = cKDTree(P).query_pairs(epsilon, output_type="ndarray")
        if len(pairs):
            d = np.sqrt(_sq_norm(P[pairs[:, 0]] - P[pairs[:, 1]]))
            pairs = pairs[d < epsilon]
        adj = coo_matrix((np.ones(len(pairs), dtype=bool), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
    _, labels = connected_components(adj, directed=False)
    return ComponentPartition(_labels_to_blocks(members, labels), float(epsilon))


def component_labels(P: np.ndarray, epsilon: float, workers: int = 1) -> np.ndarray:
    """Epsilon-component labels for a batch of small point sets.

    ``P`` has shape ``(B, n, d)``.  Returns ``(B, n)`` integer labels where
    each point is labelled with the smallest position in its block.
    """
    P = np.asarray(P, dtype=np.float64)
    B, n = P.shape[:2]
    if B == 0:
        return np.empty((0, n), dtype=np.int64)

    def work(s: slice) -> np.ndarray:
        adj = pairwise_distances(P[s]) < epsilon
        lab = np.broadcast_to(np.arange(n), (adj.shape[0], n)).copy()
        while True:
            new = np.where(adj, lab[:, None, :], n).min(axis=2)
            new = np.take_along_axis(new, new, axis=1)
            if np.array_equal(new, lab):
                return lab
            lab = new

    chunk = max(1, _CHUNK_CELLS // (n * n * P.shape[2]))
    return np.concatenate(_run_chunks(work, B, chunk, workers), axis=0)


def mst_edge_lengths(P: np.ndarray, workers: int = 1) -> np.ndarray:
    """Minimum-spanning-tree edge lengths of each set in a ``(B, n, d)`` batch.

    The number of epsilon-components of a set is one plus the number of its
    MST edges of length ``>= epsilon``, so one pass answers every epsilon.
    """
    P = np.asarray(P, dtype=np.float64)
    B, n = P.shape[:2]
    if n < 2:
        return np.empty((B, 0))

    def work(s: slice) -> np.ndarray:
        D = pairwise_distances(P[s])
        b = D.shape[0]
        rows = np.arange(b)
        in_tree = np.zeros((b, n), dtype=bool)
        in_tree[:, 0] = True
        best = D[:, 0, :].copy()
        best[:, 0] = np.inf
        edges = np.empty((b, n - 1))
        for i in range(n - 1):
            j = np.argmin(best, axis=1)
            edges[:, i] = best[rows, j]
            in_tree[rows, j] = True
            best = np.minimum(best, D[rows, j, :])
            best[in_tree] = np.inf
        return edges

    chunk = max(1, _CHUNK_CELLS // (n * n * P.shape[2]))
    return np.concatenate(_run_chunks(work, B, chunk, workers), axis=0)


def mst_edges(P: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Edges of a minimum spanning tree of one ``(n, d)`` point set.

    Returns ``(pairs, lengths)`` with ``pairs`` of shape ``(n-1, 2)`` holding
    row positions.  Zero-length edges (duplicate points) are kept.
    """
    P = np.asarray(P, dtype=np.float64)
    n = P.shape[0]
    D = pairwise_distances(P)
    in_tree = np.zeros(n, dtype=bool)
    in_tree[0] = True
    best = D[0].copy()
    parent = np.zeros(n, dtype=np.int64)
    best[0] = np.inf
    pairs = np.empty((max(n - 1, 0), 2), dtype=np.int64)
    lengths = np.empty(max(n - 1, 0))
    for i in range(n - 1):
        j = int(np.argmin(best))
        pairs[i] = parent[j], j
        lengths[i] = best[j]
        in_tree[j] = True
        closer = D[j] < best
        parent[closer] = j
        best = np.minimum(best, D[j])
        best[in_tree] = np.inf
    return pairs, lengths


def count_components(mst_edges: np.ndarray, epsilon: float) -> np.ndarray:
    """Epsilon-component counts from :func:`mst_edge_lengths` output."""
    return 1 + np.count_nonzero(mst_edges >= epsilon, axis=-1)
