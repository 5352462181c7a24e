import functools

import numpy as np
import pytest

from ifsregimes.ifs import HENON_F0, Bernoulli, Explicit, IfsModel, generate, henon_ifs
from ifsregimes.separation import separate

# Seeds whose Henon IFS orbits stay bounded for 31,000 steps; many seeds escape.
HENON_SEEDS = (2, 3, 9)


@functools.lru_cache(maxsize=None)
def henon_run(seed: int, T: int = 30_000):
    return generate(henon_ifs(), Bernoulli((0.5, 0.5), seed), T)


@functools.lru_cache(maxsize=None)
def f0_run(seed: int, T: int = 30_000):
    x0 = np.random.default_rng(seed).uniform(-0.1, 0.1, size=2)
    return generate(IfsModel((HENON_F0,)), Explicit((0,) * (1000 + T - 1)), T, x0)


@functools.lru_cache(maxsize=None)
def henon_separation(seed: int, start: int = 0):
    return separate(henon_run(seed).cloud, 0.03, 2, 40, 10_000, start=start)


_criteria: list[str] = []


@pytest.fixture
def criterion():
    """Record one summary line per acceptance criterion."""

    def record(number: int, title: str, ok: bool, detail: str) -> bool:
        _criteria.append(f"criterion {number} [{'PASS' if ok else 'FAIL'}] {title}: {detail}")
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _criteria:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_criteria):
            terminalreporter.write_line(line)
