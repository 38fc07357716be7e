"""Best set of node-disjoint shortcuts under a total budget.

Nodes are processed bottom-up from the pivot's leaves.  For each node ``v``
and grid budget ``j`` two cases compete:

* ``H1``: no shortcut is rooted at ``v``; the budget is split among the
  children's best packings.
* ``H2``: the single-root optimum ``S[v, j']`` is used, and what is left is
  split among the cliques hanging just below it (``D(S)``).

``H[v, j]`` keeps the better of the two (``H1`` on ties), and the
allocations behind each cell allow the packing to be rebuilt.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InternalError
from ..junction_tree import JunctionTree
from .grid import Knapsack, Row, better, floor_index, knapsack
from .lrdp import DPStateSingle
from .shortcuts import ShortcutPotential


@dataclass
class _Case2:
    j_shortcut: int  # canonical grid index of the shortcut at this root
    below: tuple[int, ...]  # D(S)
    combo: Knapsack  # split of the remaining budget over D(S)
    rest: int  # index into combo's row


@dataclass
class DPStateMulti:
    grid: np.ndarray
    H: dict[int, Row]
    H1: dict[int, Row]
    H2: dict[int, Row]
    I: dict[int, np.ndarray]  # 1 where case H2 wins
    W1: dict[int, Knapsack]  # children split for case H1
    W2: dict[int, list[_Case2 | None]] = field(default_factory=dict)

    def value(self, root: int, j: int = -1) -> int:
        return int(self.H[root].value[j])


def below_shortcut(jt: JunctionTree, nodes) -> tuple[int, ...]:
    """Children of the shortcut's cliques that lie outside it."""
    inside = set(nodes)
    return tuple(sorted(c for u in inside for c in jt.children[u] if c not in inside))


def distinct_solutions(state: DPStateSingle) -> list[tuple[int, tuple[int, ...]]]:
    """(first grid index, antichain) for every non-empty optimum the root takes."""
    seen: dict[tuple[int, ...], int] = {}
    for j, chosen in enumerate(state.chosen):
        if chosen and chosen not in seen:
            seen[chosen] = j
    return [(j, c) for c, j in seen.items()]


def budp(jt: JunctionTree, singles: dict[int, DPStateSingle], grid) -> DPStateMulti:
    grid = np.asarray(grid, dtype=np.int64)
    m = len(grid)
    st = DPStateMulti(grid, {}, {}, {}, {}, {})
    for v in reversed(jt.preorder):
        kn1 = knapsack(grid, [st.H[c] for c in jt.children[v]])
        h1 = kn1.row
        h2 = Row.zeros(m)
        case2: list[_Case2 | None] = [None] * m
        single = singles.get(v)
        if single is not None:
            for j0, chosen in distinct_solutions(single):
                nodes = {u for x in chosen for u in single.stats.paths[x]}
                below = below_shortcut(jt, nodes)
                combo = knapsack(grid, [st.H[d] for d in below])
                own = single.P.cell(j0)
                for j in range(j0, m):
                    k = floor_index(grid, int(grid[j] - grid[j0]))
                    cand = (own[0] + int(combo.row.value[k]), own[1] + int(combo.row.cost[k]))
                    if better(cand, h2.cell(j)):
                        h2.value[j], h2.cost[j] = cand
                        case2[j] = _Case2(j0, below, combo, k)
        h = Row(h1.value.copy(), h1.cost.copy())
        flag = np.zeros(m, dtype=np.int8)
        for j in range(m):
            if case2[j] is not None and better(h2.cell(j), h1.cell(j)):
                h.value[j], h.cost[j] = h2.cell(j)
                flag[j] = 1
        st.H[v], st.H1[v], st.H2[v], st.I[v], st.W1[v], st.W2[v] = h, h1, h2, flag, kn1, case2
    return st


def reconstruct_multi(jt: JunctionTree, state: DPStateMulti, singles: dict[int, DPStateSingle],
                      shortcuts: dict[int, dict[int, ShortcutPotential | None]], j: int | None = None) -> list[ShortcutPotential]:
    """Rebuild the packing at the pivot for grid index ``j`` (default: the full budget).

    ``shortcuts[root][j]`` is the per-root reconstruction from the single-root DP.
    """
    if j is None:
        j = len(state.grid) - 1
    out: list[ShortcutPotential] = []

    def walk(v: int, j: int) -> None:
        if state.I[v][j]:
            c2 = state.W2[v][j]
            s = shortcuts[v][c2.j_shortcut]
            if s is None:
                raise InternalError(f"case marker at {v} points at an empty shortcut")
            out.append(s)
            for d, jd in zip(c2.below, c2.combo.split(c2.rest)):
                walk(d, jd)
        else:
            for c, jc in zip(jt.children[v], state.W1[v].split(j)):
                walk(c, jc)

    walk(jt.pivot, j)
    got = sum(s.dp_int for s in out)
    if got != state.value(jt.pivot, j):
        raise InternalError(f"packing re-evaluates to {got}, table says {state.value(jt.pivot, j)}")
    seen: set[int] = set()
    for s in out:
        if seen & s.node_set:
            raise InternalError("reconstructed shortcuts overlap")
        seen |= s.node_set
    return sorted(out, key=lambda s: (jt.dfs_labels[s.root], s.nodes))
