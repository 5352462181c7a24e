"""Ghosts: sparse displaced copies of the main attractor.

A ghost appears when an otherwise deterministic series is periodically
offset by a constant.  In a forward delay embedding the offset observation
first shows up as the newest coordinate of an image, so a clean
neighbourhood ``N_k(x_j)`` whose image splits into a large and a small
epsilon-component points at the offset observation ``(m - 1) tau + 1``
samples after each member of the small component.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .embedding import EmbeddingConfig, as_series, delay_embed
from .errors import InputError, StructureError
from .geometry import PointCloud, component_labels, knn_batch, mst_edge_lengths
from .ifs import HENON_F0, Explicit, IfsModel, generate


@dataclass
class GhostReport:
    ghost_indices: np.ndarray
    first_differences: np.ndarray
    period: int | None
    spurious: list[int] = field(default_factory=list)  # positions in ghost_indices
    shift: float | None = None


def _eligible_neighborhoods(cloud: PointCloud, k: int, epsilon: float, workers: int):
    if k < 3:
        raise InputError(f"k must be at least 3, got {k}")
    if not epsilon > 0:
        raise InputError(f"epsilon must be positive, got {epsilon}")
    T = cloud.T
    if T < k + 1:
        raise InputError(f"cloud of {T} points is too small for k={k}")
    nb = knn_batch(cloud, np.arange(T - 1), k, workers=workers)
    nb = nb[np.all(nb < T - 1, axis=1)]
    # only neighbourhoods that are themselves one epsilon-chain can vouch for
    # a split of their image
    connected = mst_edge_lengths(cloud.points[nb], workers=workers).max(axis=1) < epsilon
    return nb[connected]


def _minority(labels: np.ndarray) -> np.ndarray | None:
    """Mask of the strictly smaller block of a two-block labelling, else None."""
    values, counts = np.unique(labels, return_counts=True)
    if len(values) != 2 or counts[0] == counts[1]:
        return None
    return labels == values[np.argmin(counts)]


def identify_candidates(cloud: PointCloud, k: int = 10, epsilon: float = 30.0, min_support: int = 2,
                        workers: int = 1) -> np.ndarray:
    """Preimage indices that land in the smaller of two image epsilon-components.

    Every epsilon-connected neighbourhood ``N_k(x_j)`` votes.  An index is
    reported when it sits in at least ``min_support`` such neighbourhoods and
    every one of them has a two-component image with the index on the
    strictly smaller side.
    """
    nb = _eligible_neighborhoods(cloud, k, epsilon, workers)
    if nb.size == 0:
        return np.empty(0, dtype=np.int64)
    labels = component_labels(cloud.points[nb + 1], epsilon, workers=workers)
    seen = np.bincount(nb.ravel(), minlength=cloud.T)
    votes = np.zeros(cloud.T, dtype=np.int64)
    for row, lab in zip(nb, labels):
        small = _minority(lab)
        if small is not None:
            votes[row[small]] += 1
    hit = (votes == seen) & (seen >= min_support)
    return np.flatnonzero(hit)


def to_series_indices(candidates: Sequence[int], cfg: EmbeddingConfig) -> np.ndarray:
    """Series positions of the displaced observations behind ``candidates``."""
    return np.asarray(candidates, dtype=np.int64) + cfg.span + 1


def to_cloud_indices(ghosts: Sequence[int], cfg: EmbeddingConfig) -> np.ndarray:
    """Inverse of :func:`to_series_indices`, dropping positions with no preimage."""
    idx = np.asarray(ghosts, dtype=np.int64) - cfg.span - 1
    return idx[idx >= 0]


def periodicity(ghosts: Sequence[int], min_prevalence: float = 0.5) -> GhostReport:
    """Modal spacing of the ghost sequence and the identifications that break it.

    The ghost between two consecutive spacings that add up to the period is
    flagged spurious.
    """
    g = np.asarray(ghosts, dtype=np.int64)
    if g.size < 3:
        raise InputError(f"need at least 3 ghosts, got {g.size}")
    if np.any(np.diff(g) <= 0):
        raise InputError("ghost indices must be strictly increasing")
    d = np.diff(g)
    values, counts = np.unique(d, return_counts=True)
    mode = int(values[np.argmax(counts)])  # smallest value among equally common ones
    period = mode if counts.max() / d.size >= min_prevalence else None
    spurious = []
    if period is not None:
        for i in range(d.size - 1):
            if d[i] + d[i + 1] == period:
                spurious.append(i + 1)
    return GhostReport(g, d, period, spurious)


def adjust(series: Sequence[float], ghosts: Sequence[int], shift: float) -> np.ndarray:
    """Add ``shift`` at the ghost positions; everything else is copied."""
    s = as_series(series).copy()
    g = np.asarray(ghosts, dtype=np.int64)
    if g.size and (g.min() < 0 or g.max() >= s.size):
        raise InputError(f"ghost index out of range [0, {s.size - 1}]")
    s[np.unique(g)] += shift
    return s


def estimate_shift(cloud: PointCloud, candidates: Sequence[int], k: int = 10, epsilon: float = 30.0,
                   axis: int = -1) -> float:
    """Median offset carrying ghost images back onto the main component.

    For each candidate ``j`` with a two-component image of ``N_k(x_j)``, take
    the majority centroid minus the minority centroid along ``axis`` (the
    newest delay coordinate by default).  Adding the result to the ghost
    observations moves them toward the majority.
    """
    cand = np.asarray(candidates, dtype=np.int64)
    T = cloud.T
    cand = cand[(cand >= 0) & (cand < T - 1)]
    if cand.size == 0:
        raise InputError("no candidate has a successor")
    nb = knn_batch(cloud, cand, k)
    nb = nb[np.all(nb < T - 1, axis=1)]
    gaps = []
    if nb.size:
        images = cloud.points[nb + 1]
        for img, lab in zip(images, component_labels(images, epsilon)):
            small = _minority(lab)
            if small is not None:
                gaps.append(img[~small, axis].mean() - img[small, axis].mean())
    if not gaps:
        raise InputError("no candidate neighbourhood splits into two components")
    return float(np.median(gaps))


def determinism_check(cloud: PointCloud, candidates: Sequence[int], k: int = 10, epsilon: float = 30.0) -> int:
    """Number of candidates whose image neighbourhood is not one epsilon-component."""
    cand = np.asarray(candidates, dtype=np.int64)
    T = cloud.T
    cand = cand[(cand >= 0) & (cand < T - 1)]
    if cand.size == 0:
        return 0
    nb = knn_batch(cloud, cand, k)
    failures = 0
    for row in nb:
        row = row[row < T - 1]
        if row.size and np.unique(component_labels(cloud.points[row + 1][None], epsilon)[0]).size > 1:
            failures += 1
    return failures


@dataclass
class Surrogate:
    series: np.ndarray
    clean: np.ndarray
    injected: np.ndarray


def synth_surrogate(T: int = 20_000, period: int = 215, shift: float = 200.0, seed: int = 0,
                    low: float = 4500.0, high: float = 5500.0, burn_in: int = 1000) -> Surrogate:
    """A cache-miss-like series with a known periodic ghost.

    The base is the first coordinate of a Henon ``f0`` orbit (started from a
    seeded point near the origin) mapped affinely onto ``[low, high]``;
    ``shift`` is then subtracted at every index divisible by ``period``.
    """
    if period < 2:
        raise InputError(f"period must be at least 2, got {period}")
    if T < 10 * period:
        raise InputError(f"T={T} must be at least 10 periods ({10 * period})")
    rng = np.random.default_rng(seed)
    x0 = rng.uniform(-0.1, 0.1, size=2)
    traj = generate(IfsModel((HENON_F0,)), Explicit((0,) * (burn_in + T - 1)), T, x0, burn_in)
    x = traj.cloud.points[:, 0]
    clean = low + (x - x.min()) / (x.max() - x.min()) * (high - low)
    injected = np.arange(0, T, period, dtype=np.int64)
    series = clean.copy()
    series[injected] -= shift
    return Surrogate(series, clean, injected)


@dataclass
class GhostAnalysis:
    report: GhostReport
    candidates: np.ndarray  # cloud indices
    adjusted: np.ndarray
    failures: int


def analyze_ghosts(series: Sequence[float], cfg: EmbeddingConfig = EmbeddingConfig(1, 3), k: int = 10,
                   epsilon: float = 30.0, shift: float | None = None, min_support: int = 2,
                   workers: int = 1) -> GhostAnalysis:
    """Identify, characterise and remove a ghost, then re-check determinism."""
    s = as_series(series)
    cloud = delay_embed(s, cfg)
    cand = identify_candidates(cloud, k, epsilon, min_support, workers)
    ghosts = to_series_indices(cand, cfg)
    ghosts = ghosts[ghosts < s.size]
    if ghosts.size < 3:
        raise StructureError(f"only {ghosts.size} ghost candidates found")
    report = periodicity(ghosts)
    report.shift = estimate_shift(cloud, cand, k, epsilon) if shift is None else float(shift)
    adjusted = adjust(s, ghosts, report.shift)
    failures = determinism_check(delay_embed(adjusted, cfg), cand, k, epsilon)
    return GhostAnalysis(report, cand, adjusted, failures)
