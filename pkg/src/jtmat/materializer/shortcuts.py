"""Shortcut potentials: definition, cost, usefulness, benefit and materialization.

A shortcut is identified by a connected set of cliques ``V(S)``.  Its cut is
every separator with exactly one endpoint inside ``V(S)`` (including the one
above its root when the root is not the pivot), its scope ``X_S`` is the
union of the cut scopes, and its cost is the table size of that scope.

Benefits against a log are kept as exact integers scaled by the log's total
frequency (see :class:`LogProfile`); dividing by that total gives the
probability-weighted value.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Sequence

from ..errors import InvalidInputError
from ..factors import DiscreteFactor, Scope, make_scope, marginalize, normalize, product_all, table_size
from ..junction_tree import JunctionTree
from ..query_engine import QueryProfile


@dataclass(frozen=True, eq=False)
class ShortcutPotential:
    id: int
    root: int
    nodes: tuple[int, ...]
    cut: tuple[tuple[int, int], ...]
    scope: Scope
    cost: int
    benefit: float = 0.0
    dp_value: float = 0.0
    dp_cost: int = 0
    # bookkeeping from the optimizer: the antichain behind the shortcut and its exact scaled objective
    cut_nodes: tuple[int, ...] = ()
    dp_int: int = 0
    table: DiscreteFactor | None = field(default=None, repr=False)

    @cached_property
    def node_set(self) -> frozenset[int]:
        return frozenset(self.nodes)

    @cached_property
    def scope_set(self) -> frozenset[int]:
        return frozenset(self.scope)

    @property
    def ratio(self) -> float:
        return self.benefit / self.cost

    def with_id(self, new_id: int) -> "ShortcutPotential":
        return replace(self, id=new_id)


def enumerate_cut(jt: JunctionTree, nodes: Iterable[int]) -> tuple[tuple[tuple[int, int], ...], Scope, int]:
    """Cut separators, scope and cost of the shortcut over ``nodes``."""
    nodes = frozenset(nodes)
    if not nodes:
        raise InvalidInputError("a shortcut needs at least one clique")
    if any(not 0 <= u < jt.n for u in nodes):
        raise InvalidInputError(f"unknown clique in {sorted(nodes)}")
    start = min(nodes)
    seen, stack = {start}, [start]
    while stack:
        u = stack.pop()
        for w in jt.adjacency[u]:
            if w in nodes and w not in seen:
                seen.add(w)
                stack.append(w)
    if seen != nodes:
        raise InvalidInputError(f"cliques {sorted(nodes)} do not form a connected subtree")
    cut = sorted({(min(u, w), max(u, w)) for u in nodes for w in jt.adjacency[u] if w not in nodes})
    scope = make_scope(v for e in cut for v in jt.sep_scope(*e))
    return tuple(cut), scope, table_size(scope, jt.cards)


def subtree_root(jt: JunctionTree, nodes: Iterable[int]) -> int:
    return min(nodes, key=lambda u: (jt.depth[u], u))


def make_shortcut(jt: JunctionTree, nodes: Iterable[int], sid: int = 0, **extra) -> ShortcutPotential:
    nodes = tuple(sorted(set(nodes)))
    cut, scope, cost = enumerate_cut(jt, nodes)
    return ShortcutPotential(sid, subtree_root(jt, nodes), nodes, cut, scope, cost, **extra)


def usefulness(s: ShortcutPotential, q, jt: JunctionTree) -> bool:
    return QueryProfile(jt, q).useful(s)


def benefit_single(s: ShortcutPotential, q, jt: JunctionTree) -> int:
    profile = QueryProfile(jt, q)
    if not profile.useful(s):
        return 0
    return sum(profile.benefit_term(v) for v in s.nodes)


class LogProfile:
    """A query log prepared for evaluating many shortcuts.

    ``entries`` is a sequence of (query, frequency) pairs.  Each query's
    Steiner tree is built once, and an index from clique to the queries whose
    Steiner tree touches it lets a shortcut skip every query it cannot help.
    """

    def __init__(self, jt: JunctionTree, entries: Sequence[tuple[object, int]]):
        self.jt = jt
        self.items = [(QueryProfile(jt, q), int(f)) for q, f in entries]
        self.total = sum(f for _, f in self.items)
        self.by_node: dict[int, list[int]] = {u: [] for u in range(jt.n)}
        for i, (p, _) in enumerate(self.items):
            for u in p.nodes:
                self.by_node[u].append(i)
        self._cache: dict[tuple[frozenset, frozenset], int] = {}

    @classmethod
    def from_log(cls, jt: JunctionTree, log) -> "LogProfile":
        return cls(jt, [(e.query, e.frequency) for e in log.entries])

    def benefit_int(self, nodes: frozenset, scope: frozenset) -> int:
        """Sum over queries of f(q) * B(S, q): the log benefit times the total frequency."""
        key = (nodes, scope)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        touched = sorted({i for u in nodes for i in self.by_node[u]})
        total = 0
        for i in touched:
            p, f = self.items[i]
            if p.replacement(nodes, scope).useful:
                total += f * sum(p.benefit_term(v) for v in nodes)
        self._cache[key] = total
        return total

    def benefit(self, s: ShortcutPotential) -> float:
        return self.benefit_int(s.node_set, s.scope_set) / self.total if self.total else 0.0


def benefit_log(s: ShortcutPotential, log, jt: JunctionTree) -> float:
    """Probability-weighted benefit over a log (a QueryLog or a prepared LogProfile)."""
    profile = log if isinstance(log, LogProfile) else LogProfile.from_log(jt, log)
    return profile.benefit(s)


def materialize_table(jt: JunctionTree, s: ShortcutPotential) -> DiscreteFactor:
    """Joint distribution of the shortcut scope, by message passing inside the shortcut subtree."""
    inside = s.node_set
    keep_vars = set(s.scope)
    children = {u: [c for c in jt.children[u] if c in inside] for u in inside}
    order, stack = [], [s.root]
    while stack:
        u = stack.pop()
        order.append(u)
        stack.extend(children[u])
    msgs: dict[int, DiscreteFactor] = {}
    for u in reversed(order):
        table = jt.cliques[u].potential if u == s.root else jt.conditional[u]
        combined = product_all([table, *(msgs[c] for c in children[u])])
        keep = keep_vars & set(combined.scope)
        if u != s.root:
            keep |= set(jt.sep_scope(u, jt.parent[u]))
        msgs[u] = marginalize(combined, keep)
    return normalize(msgs[s.root])


def with_table(jt: JunctionTree, s: ShortcutPotential) -> ShortcutPotential:
    return replace(s, table=materialize_table(jt, s))
