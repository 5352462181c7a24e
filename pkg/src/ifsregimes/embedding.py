"""Delay-coordinate embedding and its two parameter heuristics.

Vectors are built with forward lags, ``(s_t, s_{t+tau}, ..., s_{t+(m-1)tau})``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.spatial import cKDTree

from .errors import DegenerateInputError, InputError
from .geometry import PointCloud


@dataclass(frozen=True)
class EmbeddingConfig:
    tau: int = 1
    m: int = 3

    def __post_init__(self):
        if self.tau < 1 or self.m < 1:
            raise InputError(f"tau and m must be positive integers, got tau={self.tau}, m={self.m}")

    @property
    def span(self) -> int:
        return (self.m - 1) * self.tau


def as_series(values: Sequence[float]) -> np.ndarray:
    s = np.asarray(values, dtype=np.float64).ravel()
    if s.size < 2:
        raise InputError(f"series needs at least 2 values, got {s.size}")
    if not np.all(np.isfinite(s)):
        raise InputError("series contains non-finite values")
    return s


def delay_matrix(s: np.ndarray, tau: int, m: int) -> np.ndarray:
    n = len(s) - (m - 1) * tau
    if n < 1:
        raise InputError(f"series of length {len(s)} is too short for tau={tau}, m={m}")
    return np.column_stack([s[i * tau:i * tau + n] for i in range(m)])


def delay_embed(series: Sequence[float], cfg: EmbeddingConfig) -> PointCloud:
    """Embed a scalar series; the result has ``len(series) - (m-1) tau`` points."""
    s = as_series(series)
    if cfg.span >= len(s):
        raise InputError(f"(m-1)*tau = {cfg.span} must be below the series length {len(s)}")
    return PointCloud(delay_matrix(s, cfg.tau, cfg.m))


def average_mutual_information(series: Sequence[float], lag: int, bins: int = 64) -> float:
    """Histogram estimate, in bits, of the mutual information between ``s_t`` and ``s_{t+lag}``.

    Both marginals share ``bins`` equal-width bins spanning the observed range
    of the whole series.
    """
    s = as_series(series)
    if not 0 <= lag < len(s):
        raise InputError(f"lag must lie in [0, {len(s) - 1}], got {lag}")
    if bins < 2:
        raise InputError(f"bins must be at least 2, got {bins}")
    lo, hi = s.min(), s.max()
    if lo == hi:
        raise DegenerateInputError("constant series has zero entropy")
    idx = np.minimum(((s - lo) / (hi - lo) * bins).astype(np.int64), bins - 1)
    a, b = idx[:len(s) - lag], idx[lag:]
    joint = np.bincount(a * bins + b, minlength=bins * bins).reshape(bins, bins) / a.size
    pa, pb = joint.sum(axis=1), joint.sum(axis=0)
    nz = joint > 0
    return float(np.sum(joint[nz] * np.log2(joint[nz] / np.outer(pa, pb)[nz])))


def ami_curve(series: Sequence[float], max_lag: int, bins: int = 64) -> np.ndarray:
    """AMI at lags ``0..max_lag``."""
    return np.array([average_mutual_information(series, lag, bins) for lag in range(max_lag + 1)])


def first_minimum(curve: Sequence[float]) -> int | None:
    """Smallest ``i`` with ``curve[i-1] > curve[i] <= curve[i+1]``; ``None`` if there is none."""
    c = list(curve)
    if len(c) < 3:
        raise InputError(f"curve needs at least 3 values, got {len(c)}")
    for i in range(1, len(c) - 1):
        if c[i - 1] > c[i] <= c[i + 1]:
            return i
    return None


def false_nearest_neighbors(series: Sequence[float], tau: int, m: int, r_tol: float = 15.0,
                            a_tol: float | None = 2.0) -> float:
    """Fraction of points whose nearest neighbour in dimension ``m`` is false.

    A neighbour pair at distance ``d`` is false when appending coordinate
    ``m + 1`` moves them apart by more than ``r_tol * d``, or, unless
    ``a_tol`` is None, when their ``(m+1)``-dimensional distance exceeds
    ``a_tol`` times the standard deviation of the series.
    """
    s = as_series(series)
    if tau < 1 or m < 1:
        raise InputError(f"tau and m must be positive, got tau={tau}, m={m}")
    n = len(s) - m * tau
    if n < 10:
        raise InputError(f"only {max(n, 0)} points embed in dimension {m + 1}; at least 10 needed")
    Y = delay_matrix(s, tau, m)[:n]
    extra = s[m * tau:m * tau + n]
    d, nb = cKDTree(Y).query(Y, k=2)
    d, nb = d[:, 1], nb[:, 1]
    gap = np.abs(extra - extra[nb])
    false = gap > r_tol * d
    if a_tol is not None:
        spread = s.std()
        if spread == 0:
            raise DegenerateInputError("constant series")
        false |= np.sqrt(d * d + gap * gap) > a_tol * spread
    return float(np.mean(false))


def fnn_curve(series: Sequence[float], tau: int, m_max: int, r_tol: float = 15.0,
              a_tol: float | None = 2.0) -> np.ndarray:
    """FNN fraction for ``m = 1..m_max``."""
    return np.array([false_nearest_neighbors(series, tau, m, r_tol, a_tol) for m in range(1, m_max + 1)])
