"""Phase two: label every step with the regime that produced it.

The trajectory is covered by overlapping K-nearest neighbourhoods around
farthest-point-sampled nexuses.  Each neighbourhood's shift image is split
into epsilon-components; the preimages of one component form a
sub-neighbourhood, presumed to have been moved by a single map.
Sub-neighbourhoods sharing a trajectory index are glued, and each large
connected component of the resulting graph is one regime.

A sub-neighbourhood is only used when it looks like the work of one
continuous map at its cut scale: the members' minimum spanning tree is an
epsilon-chain and maps onto one.  Where the images
of different maps interleave, a component failing that test is re-cut at
half the scale (``refine_levels`` times) before being dropped.  One mixed
sub-neighbourhood would otherwise fuse two regimes into one graph component.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .errors import InputError, IntegrityError, StructureError
from .geometry import (
    PointCloud,
    _run_chunks,
    component_labels,
    farthest_point_sample,
    knn_batch,
    mst_edges,
)

UNIDENTIFIED = -1


@dataclass
class NeighborhoodCover:
    cloud: PointCloud
    nexus_indices: np.ndarray
    neighborhoods: np.ndarray  # (J, K), row j starts with nexus j
    K: int

    @property
    def J(self) -> int:
        return len(self.nexus_indices)


@dataclass
class SubNeighborhood:
    j: int
    k: int
    members: np.ndarray  # sorted preimage indices
    epsilon: float  # scale at which this component was cut

    @property
    def image_members(self) -> np.ndarray:
        return self.members + 1


@dataclass
class OverlapGraph:
    nodes: list[SubNeighborhood]
    edges: np.ndarray  # (E, 2), u < v
    component: np.ndarray  # per-node component id
    n_components: int


@dataclass
class SeparationResult:
    labels: np.ndarray  # per step t in [0, T-2]; UNIDENTIFIED or 0..N-1
    component_sizes: list[int]  # image points per chosen component, label order
    census: list[int] = field(default_factory=list)  # image points of every graph component, descending

    @property
    def n_labeled(self) -> int:
        return int(np.count_nonzero(self.labels != UNIDENTIFIED))

    @property
    def n_unidentified(self) -> int:
        return int(np.count_nonzero(self.labels == UNIDENTIFIED))


def build_cover(cloud: PointCloud, K: int = 40, J: int = 10_000, start: int = 0, workers: int = 1) -> NeighborhoodCover:
    if K < 2:
        raise InputError(f"K must be at least 2, got {K}")
    if J < 1:
        raise InputError(f"J must be at least 1, got {J}")
    nexus = farthest_point_sample(cloud, J, start)
    hoods = knn_batch(cloud, nexus, K, workers=workers)
    return NeighborhoodCover(cloud, nexus, hoods, K)


def admissible(cloud: PointCloud, members: np.ndarray, epsilon: float) -> bool:
    """Whether a preimage set behaves like one continuous map at scale ``epsilon``.

    The members' minimum spanning tree must be an epsilon-chain, and so must
    its image: every tree edge joins two points whose successors are also
    closer than ``epsilon``.
    """
    if len(members) < 2:
        return True
    X = cloud.points
    pairs, lengths = mst_edges(X[members])
    if lengths.max() >= epsilon:
        return False
    a, b = members[pairs[:, 0]] + 1, members[pairs[:, 1]] + 1
    diff = X[a] - X[b]
    return bool(np.all(np.sqrt((diff * diff).sum(axis=1)) < epsilon))


def _image_blocks(cloud: PointCloud, members: np.ndarray, epsilon: float) -> list[np.ndarray]:
    lab = component_labels(cloud.points[members + 1][None], epsilon)[0]
    _, first = np.unique(lab, return_index=True)
    return [members[lab == lab[i]] for i in np.sort(first)]


def _settle(cloud: PointCloud, block: np.ndarray, epsilon: float, levels: int, out: list) -> None:
    if admissible(cloud, block, epsilon):
        out.append((block, epsilon))
        return
    if levels <= 0:
        return
    for sub in _image_blocks(cloud, block, epsilon / 2):
        _settle(cloud, sub, epsilon / 2, levels - 1, out)


def split_images(cover: NeighborhoodCover, epsilon: float = 0.03, refine_levels: int = 1,
                 workers: int = 1, screen: bool = True) -> list[SubNeighborhood]:
    """Cut each neighbourhood's image into epsilon-components.

    Members without a successor are left out.  With ``screen``, inadmissible
    components are re-cut at ``epsilon / 2`` up to ``refine_levels`` times,
    then dropped; without it every component is emitted as is.
    """
    if not epsilon > 0:
        raise InputError(f"epsilon must be positive, got {epsilon}")
    cloud = cover.cloud
    last = cloud.T - 1
    hoods = np.sort(cover.neighborhoods, axis=1)
    full = np.all(hoods < last, axis=1)

    def work(s: slice) -> list:
        out = []
        rows = np.arange(s.start, s.stop)
        ok = full[s]
        labels = component_labels(cloud.points[hoods[rows[ok]] + 1], epsilon)
        lab_iter = iter(labels)
        for j, is_full in zip(rows, ok):
            if is_full:
                m = hoods[j]
                lab = next(lab_iter)
                _, first = np.unique(lab, return_index=True)
                blocks = [m[lab == lab[i]] for i in np.sort(first)]
            else:
                m = hoods[j][hoods[j] < last]
                blocks = _image_blocks(cloud, m, epsilon) if m.size else []
            settled: list = []
            for b in blocks:
                if screen:
                    _settle(cloud, b, epsilon, refine_levels, settled)
                else:
                    settled.append((b, epsilon))
            out.extend(SubNeighborhood(int(j), k, b, float(e)) for k, (b, e) in enumerate(settled))
        return out

    parts = _run_chunks(work, cover.J, 512, workers)
    return [node for part in parts for node in part]


def _incidence(nodes: Sequence[SubNeighborhood]) -> tuple[np.ndarray, np.ndarray]:
    if not nodes:
        return np.empty(0, dtype=np.int64), np.empty(0, dtype=np.int64)
    rows = np.concatenate([np.full(len(n.members), i, dtype=np.int64) for i, n in enumerate(nodes)])
    cols = np.concatenate([n.members for n in nodes]).astype(np.int64)
    return rows, cols


def build_overlap_graph(subs: Sequence[SubNeighborhood]) -> OverlapGraph:
    """Join every pair of sub-neighbourhoods that share a preimage index."""
    nodes = list(subs)
    n = len(nodes)
    rows, cols = _incidence(nodes)
    if n == 0:
        return OverlapGraph(nodes, np.empty((0, 2), dtype=np.int64), np.empty(0, dtype=np.int64), 0)
    width = int(cols.max()) + 1
    A = coo_matrix((np.ones(rows.size, dtype=np.int32), (rows, cols)), shape=(n, width)).tocsr()
    co = (A @ A.T).tocoo()
    keep = co.row < co.col
    edges = np.column_stack([co.row[keep], co.col[keep]]).astype(np.int64)
    edges = edges[np.lexsort((edges[:, 1], edges[:, 0]))]
    adj = coo_matrix((np.ones(len(edges), dtype=np.int8), (edges[:, 0], edges[:, 1])), shape=(n, n))
    ncomp, comp = connected_components(adj, directed=False)
    return OverlapGraph(nodes, edges, comp.astype(np.int64), int(ncomp))


def label_regimes(graph: OverlapGraph, N: int, T: int) -> SeparationResult:
    """Label steps by the ``N`` largest graph components (by distinct image points).

    Components are ranked by size, then by their smallest image index; label
    ``r`` is the ``r``-th ranked component.
    """
    if N < 1:
        raise InputError(f"N must be at least 1, got {N}")
    if graph.n_components < N:
        raise StructureError(f"graph has {graph.n_components} components, {N} requested")
    rows, cols = _incidence(graph.nodes)
    comp_of = graph.component[rows]
    pairs = np.unique(np.column_stack([comp_of, cols + 1]), axis=0)  # (component, image index)
    sizes = np.bincount(pairs[:, 0], minlength=graph.n_components)
    smallest = np.full(graph.n_components, np.iinfo(np.int64).max)
    np.minimum.at(smallest, pairs[:, 0], pairs[:, 1])
    ranked = np.lexsort((smallest, -sizes))
    labels = np.full(T - 1, UNIDENTIFIED, dtype=np.int64)
    for r, c in enumerate(ranked[:N]):
        steps = pairs[pairs[:, 0] == c, 1] - 1
        clash = labels[steps] != UNIDENTIFIED
        if clash.any():
            raise IntegrityError(f"step {int(steps[clash][0])} claimed by two graph components")
        labels[steps] = r
    return SeparationResult(labels, [int(sizes[c]) for c in ranked[:N]], [int(sizes[c]) for c in ranked])


def separate(cloud: PointCloud, epsilon: float = 0.03, N: int = 2, K: int = 40, J: int = 10_000,
             start: int = 0, refine_levels: int = 1, workers: int = 1, screen: bool = True):
    """Cover, split, glue and label in one call; returns ``(result, graph)``."""
    J = min(J, cloud.T)
    cover = build_cover(cloud, K, J, start, workers)
    subs = split_images(cover, epsilon, refine_levels, workers, screen)
    graph = build_overlap_graph(subs)
    return label_regimes(graph, N, cloud.T), graph


@dataclass
class SeparationScore:
    purity: float
    per_label_purity: dict[int, float]
    coverage: float
    permutation: dict[int, int]  # label -> truth value


def evaluate_separation(labels: Sequence[int], truth: Sequence[int]) -> SeparationScore:
    """Score labels against known regimes under the best label-to-regime assignment."""
    labels = np.asarray(labels, dtype=np.int64)
    truth = np.asarray(truth, dtype=np.int64)
    if labels.shape != truth.shape:
        raise InputError(f"length mismatch: {labels.size} labels vs {truth.size} truth values")
    seen = labels != UNIDENTIFIED
    coverage = float(np.mean(seen)) if labels.size else 0.0
    names = sorted(set(labels[seen].tolist()))
    values = sorted(set(truth.tolist()))
    if not names:
        return SeparationScore(math.nan, {}, coverage, {})
    lab, tru = labels[seen], truth[seen]
    # matching counts per (label, truth value)
    hits = {(a, b): int(np.count_nonzero((lab == a) & (tru == b))) for a in names for b in values}
    pad = values + [None] * max(0, len(names) - len(values))
    best = None
    for perm in itertools.permutations(pad, len(names)):
        score = sum(hits.get((a, b), 0) for a, b in zip(names, perm))
        if best is None or score > best[0]:
            best = (score, perm)
    score, perm = best
    mapping = {a: b for a, b in zip(names, perm) if b is not None}
    per = {}
    for a in names:
        n_a = int(np.count_nonzero(lab == a))
        per[a] = hits.get((a, mapping.get(a)), 0) / n_a if a in mapping else 0.0
    return SeparationScore(score / lab.size, per, coverage, mapping)
