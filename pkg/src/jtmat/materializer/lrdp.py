"""Single best shortcut for a fixed root, by dynamic programming over its subtree.

For a root ``r_S`` every clique ``v`` strictly below it names a path
shortcut ``S_v`` covering ``path(parent(v), r_S)``, with benefit ``b_v`` and
cost ``w_v``.  A candidate shortcut is an antichain ``C`` of such nodes (no
member is an ancestor of another); its clique set is the union of their
paths, its objective is ``sum(b_v)`` and it is charged ``sum(w_v)``.  Choosing
``v`` means the cut passes through the separator between ``v`` and its parent.

The forward pass walks the subtree in DFS order and computes every
``(b_v, w_v)``; that is the only place the query log is consulted.  The
backward pass combines children bottom-up with the grid knapsack.  Benefits
are exact integers (log benefit times total frequency), so results match the
exhaustive oracle exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import InternalError
from ..junction_tree import JunctionTree
from .grid import Knapsack, Row, better, knapsack
from .shortcuts import LogProfile, ShortcutPotential, enumerate_cut


@dataclass
class PathShortcutStats:
    root: int
    b: dict[int, int]  # scaled benefit of S_v
    w: dict[int, int]  # cost of S_v
    paths: dict[int, tuple[int, ...]]


def path_stats(jt: JunctionTree, root: int, log: LogProfile) -> PathShortcutStats:
    b, w, paths = {}, {}, {}
    for v in jt.subtree(root)[1:]:
        nodes = tuple(sorted(jt.path(jt.parent[v], root)))
        _, scope, cost = enumerate_cut(jt, nodes)
        paths[v] = nodes
        w[v] = cost
        b[v] = log.benefit_int(frozenset(nodes), frozenset(scope))
    return PathShortcutStats(root, b, w, paths)


@dataclass
class DPStateSingle:
    root: int
    grid: np.ndarray
    stats: PathShortcutStats
    P: Row  # best objective per grid index for the root
    F: dict[int, Row]  # best within each node's subtree
    take: dict[int, np.ndarray]  # F[v][j] is the node itself rather than a combination below it
    combos: dict[int, Knapsack]  # children combinations, including the root's
    I: dict[int, np.ndarray] = field(default_factory=dict)
    chosen: list[tuple[int, ...]] = field(default_factory=list)  # antichain per grid index

    def value(self, j: int = -1) -> int:
        return int(self.P.value[j])


def lrdp(jt: JunctionTree, root: int, log: LogProfile, grid, stats: PathShortcutStats | None = None) -> DPStateSingle:
    grid = np.asarray(grid, dtype=np.int64)
    if stats is None:
        stats = path_stats(jt, root, log)
    m = len(grid)
    F: dict[int, Row] = {}
    take: dict[int, np.ndarray] = {}
    combos: dict[int, Knapsack] = {}
    for v in reversed(jt.subtree(root)):
        kn = knapsack(grid, [F[c] for c in jt.children[v]])
        combos[v] = kn
        if v == root:
            break
        row = Row(kn.row.value.copy(), kn.row.cost.copy())
        flag = np.zeros(m, dtype=bool)
        own = (stats.b[v], stats.w[v])
        if own[0] > 0:
            for j in np.nonzero(grid >= own[1])[0]:
                if not better(row.cell(j), own):
                    row.value[j], row.cost[j] = own
                    flag[j] = True
        F[v], take[v] = row, flag
    state = DPStateSingle(root, grid, stats, combos[root].row, F, take, combos)
    _trace(jt, state)
    return state


def _collect(jt: JunctionTree, state: DPStateSingle, v: int, j: int, out: list[int]) -> None:
    if v != state.root and state.take[v][j]:
        out.append(v)
        return
    for c, jc in zip(jt.children[v], state.combos[v].split(j)):
        _collect(jt, state, c, jc, out)


def _trace(jt: JunctionTree, state: DPStateSingle) -> None:
    """Fill I: the nodes on the root-to-cut paths of the optimum at each budget."""
    below = jt.subtree(state.root)[1:]
    m = len(state.grid)
    state.I = {v: np.zeros(m, dtype=np.int8) for v in below}
    state.chosen = []
    for j in range(m):
        chosen: list[int] = []
        _collect(jt, state, state.root, j, chosen)
        chosen.sort()
        state.chosen.append(tuple(chosen))
        for v in chosen:
            while v != state.root:
                state.I[v][j] = 1
                v = jt.parent[v]


def _cut_nodes(jt: JunctionTree, state: DPStateSingle, j: int) -> list[int]:
    """Bottom-most marked node of every marked root path."""
    marked = {v for v, col in state.I.items() if col[j]}
    for v in marked:
        if jt.parent[v] != state.root and jt.parent[v] not in marked:
            raise InternalError(f"indicator marks {v} but not its parent (root {state.root}, index {j})")
    return sorted(v for v in marked if not any(c in marked for c in jt.children[v]))


def reconstruct_single(jt: JunctionTree, state: DPStateSingle, log: LogProfile | None = None) -> dict[int, ShortcutPotential | None]:
    """Shortcut per grid index (``None`` where the optimum is empty).

    ``benefit`` is the shortcut's true log benefit when ``log`` is given;
    ``dp_value`` and ``dp_cost`` carry the DP objective and charge.
    """
    out: dict[int, ShortcutPotential | None] = {}
    made: dict[tuple[int, ...], ShortcutPotential] = {}
    total = log.total if log is not None and log.total else 1
    for j in range(len(state.grid)):
        cut_nodes = tuple(_cut_nodes(jt, state, j))
        value = sum(state.stats.b[v] for v in cut_nodes)
        dp_cost = sum(state.stats.w[v] for v in cut_nodes)
        if (value, dp_cost) != state.P.cell(j):
            raise InternalError(f"reconstruction at index {j} gives {(value, dp_cost)}, table says {state.P.cell(j)}")
        if not cut_nodes:
            out[j] = None
            continue
        if cut_nodes not in made:
            nodes = sorted({u for v in cut_nodes for u in state.stats.paths[v]})
            cut, scope, cost = enumerate_cut(jt, nodes)
            true_b = log.benefit_int(frozenset(nodes), frozenset(scope)) / total if log is not None else 0.0
            made[cut_nodes] = ShortcutPotential(
                0, state.root, tuple(nodes), cut, scope, cost,
                benefit=true_b, dp_value=value / total, dp_cost=dp_cost, cut_nodes=cut_nodes, dp_int=value,
            )
        out[j] = made[cut_nodes]
    return out
