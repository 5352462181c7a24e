"""Planar quadratic IFS models and trajectory generation.

Every map has the form ``(x, y) -> (y + 1 - a (x - c)^2, b x)``.  The Henon
pair used throughout is ``f0 = (1.4, 0.3, 0)`` and ``f1 = (1.2, -0.2, 0.2)``.

Regime draws use numpy's ``default_rng`` (PCG64), seeded explicitly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence, Union

import numpy as np

from .errors import DivergenceError, InputError
from .geometry import PointCloud

ESCAPE_RADIUS = 1e6


@dataclass(frozen=True)
class MapSpec:
    a: float
    b: float
    c: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.a, self.b, self.c)):
            raise InputError(f"map parameters must be finite: {self}")


HENON_F0 = MapSpec(1.4, 0.3, 0.0)
HENON_F1 = MapSpec(1.2, -0.2, 0.2)
# third map for three-regime experiments; (1.3, 0.25, -0.2) makes the IFS escape
HENON_F2 = MapSpec(1.3, -0.25, 0.1)
F1_FIXED_POINT = (0.63986, -0.12797)


@dataclass(frozen=True)
class IfsModel:
    maps: tuple[MapSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "maps", tuple(self.maps))
        if len(self.maps) < 1:
            raise InputError("an IFS needs at least one map")

    @property
    def N(self) -> int:
        return len(self.maps)


def henon_ifs() -> IfsModel:
    return IfsModel((HENON_F0, HENON_F1))


@dataclass(frozen=True)
class Bernoulli:
    """i.i.d. regime draws with the given per-map probabilities."""

    probabilities: tuple[float, ...]
    seed: int

    def __post_init__(self):
        p = tuple(float(v) for v in self.probabilities)
        object.__setattr__(self, "probabilities", p)
        if any(v < 0 for v in p) or not math.isclose(sum(p), 1.0, abs_tol=1e-9):
            raise InputError(f"probabilities must be nonnegative and sum to 1: {p}")


@dataclass(frozen=True)
class Explicit:
    """A precomputed regime sequence, consumed burn-in first."""

    sequence: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "sequence", tuple(int(v) for v in self.sequence))
        if any(v < 0 for v in self.sequence):
            raise InputError("regime indices must be nonnegative")


@dataclass(frozen=True)
class Modular:
    """``n_j = table[j mod period]`` when present, else ``default``."""

    period: int
    table: dict = field(default_factory=dict)
    default: int = 0

    def __post_init__(self):
        if self.period < 1:
            raise InputError(f"period must be positive, got {self.period}")
        if any(not 0 <= r < self.period for r in self.table):
            raise InputError(f"residues must lie in [0, {self.period})")


RegimeRule = Union[Bernoulli, Explicit, Modular]

CACHE_RULE = Modular(215, {0: 1, 1: 2}, 0)


@dataclass
class LabeledTrajectory:
    """A trajectory with its regime sequence; ``regimes[t]`` maps ``x_t`` to ``x_{t+1}``."""

    cloud: PointCloud
    regimes: np.ndarray

    @property
    def T(self) -> int:
        return self.cloud.T


def step(spec: MapSpec, p: Sequence[float]) -> np.ndarray:
    """Apply one map to a planar point."""
    if len(p) != 2:
        raise InputError(f"maps act on 2-D points, got dimension {len(p)}")
    x, y = float(p[0]), float(p[1])
    u = x - spec.c
    out = np.array([y + 1.0 - spec.a * (u * u), spec.b * x])
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"non-finite image of {p} under {spec}")
    return out


def modular_regime(j: int, rule: Modular) -> int:
    return rule.table.get(j % rule.period, rule.default)


def regime_sequence(rule: RegimeRule, n: int, N: int) -> np.ndarray:
    """The first ``n`` regime indices the rule produces for an ``N``-map model."""
    if isinstance(rule, Bernoulli):
        if len(rule.probabilities) != N:
            raise InputError(f"{len(rule.probabilities)} probabilities for {N} maps")
        rng = np.random.default_rng(rule.seed)
        seq = rng.choice(N, size=n, p=np.asarray(rule.probabilities))
    elif isinstance(rule, Explicit):
        if len(rule.sequence) < n:
            raise InputError(f"explicit sequence has {len(rule.sequence)} entries, {n} needed")
        seq = np.asarray(rule.sequence[:n], dtype=np.int64)
    elif isinstance(rule, Modular):
        seq = np.array([modular_regime(j, rule) for j in range(n)], dtype=np.int64)
    else:
        raise InputError(f"unknown regime rule {rule!r}")
    seq = np.asarray(seq, dtype=np.int64)
    if seq.size and seq.max() >= N:
        raise InputError(f"regime index {int(seq.max())} out of range for {N} maps")
    return seq


def generate(model: IfsModel, rule: RegimeRule, T: int, x0: Sequence[float] = (0.0, 0.0),
             burn_in: int = 1000) -> LabeledTrajectory:
    """Iterate the IFS, discarding ``burn_in`` steps, and record ``T`` points.

    Raises :class:`DivergenceError` if any coordinate exceeds ``1e6``; the
    step reported counts from the first recorded point (negative inside
    burn-in).
    """
    if T < 2:
        raise InputError(f"T must be at least 2, got {T}")
    if burn_in < 0:
        raise InputError(f"burn_in must be nonnegative, got {burn_in}")
    x0 = np.asarray(x0, dtype=np.float64)
    if x0.shape != (2,) or not np.all(np.isfinite(x0)):
        raise InputError(f"x0 must be a finite planar point, got {x0}")
    seq = regime_sequence(rule, burn_in + T - 1, model.N)
    a = np.array([m.a for m in model.maps])
    b = np.array([m.b for m in model.maps])
    c = np.array([m.c for m in model.maps])

    pts = np.empty((T, 2))
    x, y = float(x0[0]), float(x0[1])
    for i in range(burn_in + T - 1):
        if i >= burn_in:
            pts[i - burn_in] = (x, y)
        n = seq[i]
        # same arithmetic as step() so replays are bit-exact
        u = x - float(c[n])
        x, y = y + 1.0 - float(a[n]) * (u * u), float(b[n]) * x
        if not (abs(x) <= ESCAPE_RADIUS and abs(y) <= ESCAPE_RADIUS):
            t = i - burn_in + 1
            raise DivergenceError(f"orbit escaped |coordinate| > {ESCAPE_RADIUS:g} at step {t}", step=t)
    pts[T - 1] = (x, y)
    return LabeledTrajectory(PointCloud(pts), seq[burn_in:].copy())


def iterate_map(spec: MapSpec, x0: Sequence[float], n: int) -> np.ndarray:
    """Apply a single map ``n`` times."""
    p = np.asarray(x0, dtype=np.float64)
    for _ in range(n):
        p = step(spec, p)
    return p
