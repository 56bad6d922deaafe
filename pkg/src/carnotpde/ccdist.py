"""Upper estimate of the Carnot-Caratheodory distance by control-graph search.

States move along +/- the horizontal fields with a fixed step; every move
costs one step of control length. Dijkstra over the resulting graph (states
deduplicated on a rounding lattice) returns the cheapest move sequence whose
endpoint lands within the goal tolerance. The result is an upper
approximation of the true infimum over horizontal paths and is deterministic
for fixed inputs.
"""

from __future__ import annotations

import heapq
from typing import Sequence

import numpy as np

from .errors import NoPathError
from .structures import CarnotStructure, as_point, sigma_at


def default_box(a: np.ndarray, b: np.ndarray) -> list[tuple[float, float]]:
    """Axis-aligned box around both endpoints, padded by max(1, |a - b|)."""
    pad = max(1.0, float(np.linalg.norm(a - b)))
    return [(min(ai, bi) - pad, max(ai, bi) + pad) for ai, bi in zip(a, b)]


def cc_distance_estimate(
    s: CarnotStructure,
    a,
    b,
    resolution: float,
    box: Sequence[Sequence[float]] | None = None,
    goal_tol: float | None = None,
    max_nodes: int = 2_000_000,
) -> float:
    """Length of the cheapest discovered horizontal move sequence from a to b.

    resolution is the control step per move; the goal is accepted within
    resolution/2 by default. Raises NoPathError when the search exhausts the
    box or the node budget, which signals a box too small or a resolution too
    coarse.
    """
    if resolution <= 0.0:
        raise ValueError("resolution must be positive")
    start = as_point(a, s.n)
    goal = as_point(b, s.n)
    tol = resolution / 2.0 if goal_tol is None else float(goal_tol)
    if float(np.linalg.norm(start - goal)) <= tol:
        return 0.0
    if box is None:
        box = default_box(start, goal)
    lo = np.array([float(c[0]) for c in box])
    hi = np.array([float(c[1]) for c in box])
    if np.any(start < lo) or np.any(start > hi) or np.any(goal < lo) or np.any(goal > hi):
        raise ValueError("both endpoints must lie inside the bounding box")

    cell = resolution / 2.0
    tol2 = tol * tol

    def key(p: np.ndarray) -> tuple:
        return tuple(int(np.floor(c / cell)) for c in p)

    settled: set = set()
    heap: list = [(0.0, 0, start)]
    counter = 1
    popped = 0
    while heap:
        cost, _, state = heapq.heappop(heap)
        k = key(state)
        if k in settled:
            continue
        settled.add(k)
        popped += 1
        gap = state - goal
        if float(gap @ gap) <= tol2:
            return cost
        if popped >= max_nodes:
            raise NoPathError(
                f"node budget {max_nodes} exhausted at cost {cost:.4g}; "
                "enlarge the box or refine the resolution"
            )
        frame = sigma_at(s, state)
        for i in range(s.m):
            row = frame[i]
            for sign in (1.0, -1.0):
                nxt = state + (sign * resolution) * row
                if np.any(nxt < lo) or np.any(nxt > hi):
                    continue
                if key(nxt) in settled:
                    continue
                heapq.heappush(heap, (cost + resolution, counter, nxt))
                counter += 1
    raise NoPathError(
        "goal not reachable within the box at this resolution; "
        "enlarge the box or refine the resolution"
    )
