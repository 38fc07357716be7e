"""Cost grids and the grid-indexed knapsack shared by both dynamic programs.

A DP table row holds, for every grid index ``j``, the best (value, cost) pair
achievable within budget ``grid[j]``.  Pairs compare lexicographically:
higher value first, then lower cost.  Combining two rows places the sum of
cells ``a`` and ``b`` at the first index whose grid value covers
``grid[a] + grid[b]``; a running maximum then makes every row monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import InvalidInputError


def epsilon_grid(K: int, eps: float) -> list[int]:
    """Budgets ``0 < floor(eps) < floor(eps**2) < ... < K``, deduplicated.

    Each step advances by at least one so the grid is strictly increasing;
    ``eps == 1`` therefore yields every integer up to ``K``.
    """
    if eps < 1 or not math.isfinite(eps):
        raise InvalidInputError(f"epsilon must be a finite number >= 1, got {eps}")
    K = int(K)
    if K < 0:
        raise InvalidInputError("budget must be non-negative")
    grid = [0]
    power = 1.0
    while True:
        nxt = max(grid[-1] + 1, math.floor(power))
        if nxt >= K:
            break
        grid.append(nxt)
        power *= eps
    if K > 0:
        grid.append(K)
    return grid


@dataclass
class Row:
    """Best (value, cost) per grid index."""

    value: np.ndarray
    cost: np.ndarray

    @classmethod
    def zeros(cls, m: int) -> "Row":
        return cls(np.zeros(m, dtype=np.int64), np.zeros(m, dtype=np.int64))

    def cell(self, j: int) -> tuple[int, int]:
        return int(self.value[j]), int(self.cost[j])


def better(a: tuple[int, int], b: tuple[int, int]) -> bool:
    """Strictly better: more value, or equal value at lower cost."""
    return a[0] > b[0] or (a[0] == b[0] and a[1] < b[1])


def running_best(row: Row, *payload: np.ndarray) -> None:
    """Make ``row`` monotone in place; a cell no better than its predecessor copies it.

    Arrays in ``payload`` (per-index bookkeeping) are copied along.
    """
    for j in range(1, len(row.value)):
        if not better((row.value[j], row.cost[j]), (row.value[j - 1], row.cost[j - 1])):
            row.value[j] = row.value[j - 1]
            row.cost[j] = row.cost[j - 1]
            for arr in payload:
                arr[j] = arr[j - 1]


def merge(grid: np.ndarray, a: Row, b: Row) -> tuple[Row, np.ndarray, np.ndarray]:
    """Knapsack combination of two rows.

    Returns the combined row and, per index, the indices into ``a`` and ``b``
    that produced it.  Among equal (value, cost) candidates the one with the
    smaller index into ``a``, then ``b``, wins.
    """
    m = len(grid)
    ia, ib = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
    ia, ib = ia.ravel(), ib.ravel()
    target = np.searchsorted(grid, grid[ia] + grid[ib], side="left")
    ok = target < m
    ia, ib, target = ia[ok], ib[ok], target[ok]
    val = a.value[ia] + b.value[ib]
    cost = a.cost[ia] + b.cost[ib]
    order = np.lexsort((ib, ia, cost, -val, target))
    target_sorted = target[order]
    first = np.ones(len(order), dtype=bool)
    first[1:] = target_sorted[1:] != target_sorted[:-1]
    pick = order[first]
    out = Row.zeros(m)
    out.value[:] = -1
    alloc_a = np.zeros(m, dtype=np.int64)
    alloc_b = np.zeros(m, dtype=np.int64)
    t = target[pick]
    out.value[t] = val[pick]
    out.cost[t] = cost[pick]
    alloc_a[t] = ia[pick]
    alloc_b[t] = ib[pick]
    # index 0 is always reachable (0 + 0), so the scan below fills every gap
    running_best(out, alloc_a, alloc_b)
    return out, alloc_a, alloc_b


@dataclass
class Knapsack:
    """Sequential merge of several rows, with the trace needed to split a budget back."""

    row: Row
    trace: list[tuple[np.ndarray, np.ndarray]]

    def split(self, j: int) -> list[int]:
        """Grid index handed to each item (in input order) at budget index ``j``."""
        out = []
        for alloc_a, alloc_b in reversed(self.trace):
            out.append(int(alloc_b[j]))
            j = int(alloc_a[j])
        return out[::-1]


def knapsack(grid: np.ndarray, rows: list[Row]) -> Knapsack:
    acc = Row.zeros(len(grid))
    trace = []
    for r in rows:
        acc, alloc_a, alloc_b = merge(grid, acc, r)
        trace.append((alloc_a, alloc_b))
    return Knapsack(acc, trace)


def floor_index(grid: np.ndarray, budget: int) -> int:
    """Largest index whose grid value is at most ``budget`` (``budget >= 0``)."""
    return int(np.searchsorted(grid, budget, side="right")) - 1
