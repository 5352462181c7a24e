"""Slow, independent reference implementations used to pin the fast code.

Pure Python loops over lists; nothing here touches scipy or the package's
own helpers.
"""
from __future__ import annotations

import math
from collections import deque


def dist(a, b) -> float:
    acc = 0.0
    for x, y in zip(a, b):
        acc += (x - y) * (x - y)
    return math.sqrt(acc)


def knn_sort(points, t, k):
    """``t`` first, then the rest ordered by (distance, index)."""
    others = sorted((dist(points[t], points[s]), s) for s in range(len(points)) if s != t)
    return [t] + [s for _, s in others[:k - 1]]


def bfs_components(points, members, eps):
    """Blocks of the graph ``d < eps`` on ``members``, via breadth-first search."""
    members = sorted(members)
    adj = {m: [n for n in members if n != m and dist(points[m], points[n]) < eps] for m in members}
    seen, blocks = set(), []
    for m in members:
        if m in seen:
            continue
        block, queue = [], deque([m])
        seen.add(m)
        while queue:
            u = queue.popleft()
            block.append(u)
            for v in adj[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        blocks.append(sorted(block))
    return blocks


def farthest_scan(points, J, start):
    """Exhaustive max-min selection with lowest-index tie-breaking."""
    chosen = [start]
    while len(chosen) < J:
        best, best_d = None, -1.0
        for s in range(len(points)):
            if s in chosen:
                continue
            d = min(dist(points[s], points[c]) for c in chosen)
            if d > best_d:
                best, best_d = s, d
        chosen.append(best)
    return chosen
