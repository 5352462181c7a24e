"""Phase one: is the cloud IFS-generated, what epsilon, how many regimes.

The scale epsilon comes from the distribution of nearest-neighbour image
diameters: pairs iterated by the same continuous map stay close, pairs split
between maps jump apart, and the two populations leave an almost empty band
between them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InputError
from .geometry import PointCloud, count_components, knn_batch, mst_edge_lengths


@dataclass
class Histogram:
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def total(self) -> int:
        return int(self.counts.sum())


def histogram(values: Sequence[float], bins: int = 100, value_range: tuple[float, float] | None = None) -> Histogram:
    counts, edges = np.histogram(np.asarray(values, dtype=np.float64), bins=bins, range=value_range)
    return Histogram(edges, counts.astype(np.int64))


@dataclass
class GapReport:
    bimodal: bool
    gap_low: float | None = None
    gap_high: float | None = None
    epsilon: float | None = None

    @property
    def width(self) -> float | None:
        if not self.bimodal:
            return None
        return self.gap_high - self.gap_low


def nn_diameters(cloud: PointCloud, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Diameters of ``N_2(x_t)`` and of its shift image, over eligible ``t``.

    ``t`` is eligible when both ``x_t`` and its nearest neighbour have a
    successor.
    """
    T = cloud.T
    if T < 3:
        raise InputError(f"need at least 3 points, got {T}")
    ts = np.arange(T - 1)
    nb = knn_batch(cloud, ts, 2, workers=workers)[:, 1]
    ok = nb < T - 1
    if np.count_nonzero(ok) < 2:
        raise InputError("fewer than 2 eligible nearest-neighbour pairs")
    ts, nb = ts[ok], nb[ok]
    X = cloud.points
    return _pair_dist(X, ts, nb), _pair_dist(X, ts + 1, nb + 1)


def _pair_dist(X: np.ndarray, i: np.ndarray, j: np.ndarray) -> np.ndarray:
    diff = X[i] - X[j]
    acc = diff[:, 0] * diff[:, 0]
    for c in range(1, diff.shape[1]):
        acc = acc + diff[:, c] * diff[:, c]
    return np.sqrt(acc)


def find_gap(values: Sequence[float], *, trim: tuple[float, float] = (1.0, 99.0), min_mass: float = 0.02,
             spacing_factor: float = 5.0, density_ratio: float = 20.0, stray_fraction: float = 2e-4,
             flank_fraction: float = 0.01) -> GapReport:
    """Locate the empty band separating two populations of ``values``.

    Candidates are intervals between sorted values (after trimming to the
    ``trim`` percentiles) holding at most ``stray_fraction`` of the sample
    strictly inside.  A candidate counts when

    * it is wider than ``spacing_factor`` median spacings per enclosed step,
    * at least ``min_mass`` of the sample lies on each side, and
    * its mean spacing is ``density_ratio`` times that of the
      ``flank_fraction`` of values just outside it, on both sides.

    The widest such interval is reported; epsilon is its midpoint.
    """
    v = np.sort(np.asarray(values, dtype=np.float64).ravel())
    n = v.size
    if n < 100:
        raise InputError(f"need at least 100 values, got {n}")
    lo, hi = np.percentile(v, trim)
    w = v[(v >= lo) & (v <= hi)]
    nw = w.size
    below = int(np.searchsorted(v, lo, side="left"))
    above = n - int(np.searchsorted(v, hi, side="right"))
    med = float(np.median(np.diff(w))) if nw > 1 else 0.0
    M = max(10, math.ceil(flank_fraction * nw))
    need = math.ceil(min_mass * n)

    best = None  # (width, -i, i, j)
    for q in range(int(stray_fraction * n) + 1):
        i = np.arange(M, nw - q - 1 - M)
        if i.size == 0:
            break
        j = i + q + 1
        width = w[j] - w[i]
        left_sp = (w[i] - w[i - M]) / M
        right_sp = (w[j + M] - w[j]) / M
        gap_sp = width / (q + 1)
        ok = (
            (width > spacing_factor * med * (q + 1))
            & (gap_sp >= density_ratio * np.maximum(left_sp, right_sp))
            & (below + i + 1 >= need)
            & (nw - j + above >= need)
        )
        if not ok.any():
            continue
        cand = np.flatnonzero(ok)
        pick = cand[np.argmax(width[cand])]  # first maximum -> lowest i
        key = (float(width[pick]), -int(i[pick]))
        if best is None or key > best[:2]:
            best = (key[0], key[1], int(i[pick]), int(j[pick]))
    if best is None:
        return GapReport(False)
    gap_low, gap_high = float(w[best[2]]), float(w[best[3]])
    return GapReport(True, gap_low, gap_high, 0.5 * (gap_low + gap_high))


def image_mst_edges(cloud: PointCloud, k: int, workers: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """MST edge lengths of every eligible image ``sigma(N_k(x_t))``.

    Returns the eligible ``t`` and a ``(len(t), k-1)`` array.  ``t`` is
    eligible when every member of ``N_k(x_t)`` has a successor.
    """
    T = cloud.T
    if k < 2:
        raise InputError(f"k must be at least 2, got {k}")
    if T < k + 1:
        raise InputError(f"cloud of {T} points is too small for k={k}")
    ts = np.arange(T - 1)
    nb = knn_batch(cloud, ts, k, workers=workers)
    ok = np.all(nb < T - 1, axis=1)
    if not ok.any():
        raise InputError("no eligible neighbourhoods")
    images = cloud.points[nb[ok] + 1]
    return ts[ok], mst_edge_lengths(images, workers=workers)


def tally(counts: np.ndarray, k: int) -> np.ndarray:
    return np.bincount(counts, minlength=k + 1)[:k + 1]


def component_count_histogram(cloud: PointCloud, k: int = 5, epsilon: float = 0.03, workers: int = 1) -> np.ndarray:
    """``out[c]`` = number of eligible images with exactly ``c`` epsilon-components."""
    if not epsilon > 0:
        raise InputError(f"epsilon must be positive, got {epsilon}")
    _, edges = image_mst_edges(cloud, k, workers)
    return tally(count_components(edges, epsilon), k)


def prevalent_count(hist: np.ndarray, prevalence: float = 0.05) -> int:
    """Largest component count reached by at least ``prevalence`` of the images."""
    frac = hist / hist.sum()
    return int(np.flatnonzero(frac >= prevalence).max())


@dataclass
class RegimeCount:
    N: int | None
    persistent: bool
    per_epsilon: dict[float, int]
    histograms: dict[float, np.ndarray] = field(default_factory=dict)


def estimate_regime_count(cloud: PointCloud, k: int = 5, epsilon_grid: Sequence[float] = (0.02, 0.03, 0.04, 0.05),
                          prevalence: float = 0.05, workers: int = 1) -> RegimeCount:
    """Number of regimes, if the prevalent image component count is the same at every epsilon."""
    grid = [float(e) for e in epsilon_grid]
    if not grid:
        raise InputError("epsilon grid is empty")
    if any(not e > 0 for e in grid):
        raise InputError("epsilon values must be positive")
    _, edges = image_mst_edges(cloud, k, workers)
    hists = {e: tally(count_components(edges, e), k) for e in grid}
    per = {e: prevalent_count(h, prevalence) for e, h in hists.items()}
    values = set(per.values())
    persistent = len(values) == 1
    return RegimeCount(values.pop() if persistent else None, persistent, per, hists)


def default_grid(epsilon: float) -> list[float]:
    """Four-point grid around a chosen epsilon: 2/3, 1, 4/3 and 5/3 of it."""
    return [epsilon * r / 3 for r in (2, 3, 4, 5)]


@dataclass
class DetectionReport:
    domain_diameters: np.ndarray
    image_diameters: np.ndarray
    gap: GapReport
    epsilon: float | None
    regimes: RegimeCount | None

    @property
    def ifs_detected(self) -> bool:
        return self.regimes is not None and self.regimes.persistent and (self.regimes.N or 0) > 1


def detect(cloud: PointCloud, k: int = 5, epsilon: float | None = None, epsilon_grid: Sequence[float] | None = None,
           prevalence: float = 0.05, workers: int = 1) -> DetectionReport:
    """Run the whole detection phase.

    With ``epsilon=None`` the scale comes from :func:`find_gap`; when no gap
    exists the regime count is skipped and ``regimes`` is None.
    """
    domain, image = nn_diameters(cloud, workers)
    gap = find_gap(image)
    eps = epsilon if epsilon is not None else gap.epsilon
    regimes = None
    if eps is not None:
        grid = list(epsilon_grid) if epsilon_grid is not None else default_grid(eps)
        regimes = estimate_regime_count(cloud, k, grid, prevalence, workers)
    return DetectionReport(domain, image, gap, eps, regimes)
