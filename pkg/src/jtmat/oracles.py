"""Brute-force reference implementations used to check the optimized code.

Nothing here shares logic with the code it checks: joints are built with
``numpy.einsum`` rather than the factor algebra, Steiner trees and
replacement costs are recomputed from raw scopes, and the optimization
oracles enumerate every feasible solution.
"""

from __future__ import annotations

import itertools
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError
from .factors import DiscreteFactor
from .junction_tree import JunctionTree
from .network_io import BayesianNetwork

MAX_JOINT = 2 ** 20
MAX_SOSP_CLIQUES = 12
MAX_MOSP_CLIQUES = 10


# ------------------------------------------------------------ joints

def oracle_joint(bn: BayesianNetwork, variables: Iterable[int] | None = None,
                 max_states: int = MAX_JOINT) -> DiscreteFactor:
    """Explicit product of the CPTs of ``variables`` (default: all).

    ``variables`` must be closed under taking parents; the product is then
    their exact joint.
    """
    vids = sorted(range(len(bn.variables)) if variables is None else set(variables))
    for v in vids:
        if not set(bn.parents[v]) <= set(vids):
            raise InvalidInputError("variable set is not closed under parents")
    size = 1
    for v in vids:
        size *= bn.variables[v].cardinality
    if size > max_states:
        raise InvalidInputError(f"joint has {size} states; the oracle stops at {max_states}")
    letters = {v: _letter(i) for i, v in enumerate(vids)}
    operands = []
    for v in vids:
        cpt = bn.cpts[v]
        operands += [cpt.values, [letters[x] for x in cpt.scope]]
    values = np.einsum(*operands, [letters[v] for v in vids]) if vids else np.ones(())
    return DiscreteFactor(tuple(vids), tuple(bn.variables[v].cardinality for v in vids), values)


def _letter(i: int) -> int:
    # einsum's sublist form accepts integer labels up to 51
    if i >= 52:
        raise InvalidInputError("too many variables for the joint oracle")
    return i


def ancestral_closure(bn: BayesianNetwork, variables: Iterable[int]) -> set[int]:
    out, stack = set(), list(variables)
    while stack:
        v = stack.pop()
        if v not in out:
            out.add(v)
            stack.extend(bn.parents[v])
    return out


def oracle_marginal(bn: BayesianNetwork, variables: Iterable[int], max_states: int = MAX_JOINT) -> np.ndarray:
    """Joint marginal of ``variables`` (ascending id axes) by enumerating their ancestral closure."""
    keep = sorted(set(variables))
    joint = oracle_joint(bn, ancestral_closure(bn, keep), max_states)
    drop = tuple(i for i, v in enumerate(joint.scope) if v not in keep)
    vals = joint.values.sum(axis=drop) if drop else np.array(joint.values)
    return vals / vals.sum()


# ------------------------------------------------------------ costs and benefits, from scratch

def _tree_path(jt: JunctionTree, u: int, v: int) -> list[int]:
    prev = {u: None}
    frontier = [u]
    while v not in prev:
        nxt = []
        for x in frontier:
            for w in jt.adjacency[x]:
                if w not in prev:
                    prev[w] = x
                    nxt.append(w)
        frontier = nxt
    out = [v]
    while out[-1] != u:
        out.append(prev[out[-1]])
    return out[::-1]


def _steiner(jt: JunctionTree, q: Sequence[int]) -> tuple[set[int], int]:
    homes = []
    for w in q:
        holders = [c.id for c in jt.cliques if w in c.scope]
        homes.append(min(holders, key=lambda u: (jt.mu(u), u)))
    nodes = {homes[0]}
    for a, b in itertools.combinations(homes, 2):
        nodes |= set(_tree_path(jt, a, b))
    root = min(nodes, key=lambda u: len(_tree_path(jt, u, jt.pivot)))
    return nodes, root


def _simulate(jt: JunctionTree, q: set[int], nodes: dict, edges: list[tuple], root) -> tuple[int, set[int]]:
    """Message-passing cost on an explicit tree; ``nodes`` maps key -> scope, ``edges`` are (child, parent, sep)."""
    kids: dict = {k: [] for k in nodes}
    for c, p, sep in edges:
        kids[p].append((c, sep))

    def run(k):
        u = set(nodes[k])
        total = 0
        for c, sep in kids[k]:
            cost, msg = run_child(c, sep)
            total += cost
            u |= msg
        size = 1
        for x in u:
            size *= jt.cards[x]
        return total + (len(kids[k]) + 1) * size, u

    def run_child(c, sep):
        cost, u = run(c)
        return cost, set(sep) | (q & u)

    cost, u = run(root)
    return cost, u


def _cut_edges(jt: JunctionTree, vs: set[int]) -> list[tuple[int, int]]:
    return [s.endpoints for s in jt.separators if (s.endpoints[0] in vs) != (s.endpoints[1] in vs)]


def oracle_cost(jt: JunctionTree, vs: Iterable[int]) -> tuple[set[int], int]:
    vs = set(vs)
    scope: set[int] = set()
    for u, v in _cut_edges(jt, vs):
        scope |= set(jt.scope(u)) & set(jt.scope(v))
    size = 1
    for x in scope:
        size *= jt.cards[x]
    return scope, size


def oracle_benefit(jt: JunctionTree, vs: Iterable[int], q: Sequence[int]) -> int:
    """B(S, q) for the shortcut over clique set ``vs``, recomputed from first principles."""
    vs = set(vs)
    qs = set(q)
    tq, rq = _steiner(jt, q)
    parent = {u: (None if u == rq else _tree_path(jt, u, rq)[1]) for u in tq}
    sep = lambda a, b: set(jt.scope(a)) & set(jt.scope(b))  # noqa: E731
    cut = {frozenset(e) for e in _cut_edges(jt, vs)}

    # structural conditions, read literally: count cut separators on leaf-to-pivot paths
    leaves = [u for u in tq if not any(parent[w] == u for w in tq)]
    crossings = []
    for leaf in leaves:
        path = _tree_path(jt, leaf, rq)
        crossings.append(sum(frozenset(e) in cut for e in zip(path, path[1:])))
    if rq in vs:
        structural = any(c >= 1 for c in crossings)
    else:
        structural = any(c >= 2 for c in crossings)
    if not structural:
        return 0

    base_nodes = {u: jt.scope(u) for u in tq}
    base_edges = [(u, parent[u], sep(u, parent[u])) for u in tq if parent[u] is not None]
    base, _ = _simulate(jt, qs, base_nodes, base_edges, rq)

    xs, _ = oracle_cost(jt, vs)
    r = tq & vs
    red_nodes = {u: jt.scope(u) for u in tq - r}
    red_nodes["S"] = tuple(sorted(xs))
    red_edges = []
    for u in tq - r:
        p = parent[u]
        if p is None:
            continue
        red_edges.append((u, "S" if p in r else p, sep(u, p)))
    top = min(r, key=lambda u: len(_tree_path(jt, u, jt.pivot)))
    red_root = "S" if rq in r else rq
    if rq not in r:
        red_edges.append(("S", parent[top], sep(top, parent[top])))
    covered = set(xs).union(*(set(s) for k, s in red_nodes.items() if k != "S"))
    if not qs <= covered:
        return 0
    reduced, _ = _simulate(jt, qs, red_nodes, red_edges, red_root)
    if reduced >= base:
        return 0

    total = 0
    for v in vs:
        below = _below(jt, v)
        vars_below = set().union(*(set(jt.scope(u)) for u in below))
        term = jt.mu(v)
        for w in vars_below & qs:
            term *= jt.cards[w]
        total += term
    return total


def _below(jt: JunctionTree, v: int) -> set[int]:
    """Cliques whose path to the pivot passes through v (v included)."""
    return {u for u in range(jt.n) if v in _tree_path(jt, u, jt.pivot)}


def oracle_base_cost(jt: JunctionTree, q: Sequence[int]) -> int:
    tq, rq = _steiner(jt, q)
    parent = {u: (None if u == rq else _tree_path(jt, u, rq)[1]) for u in tq}
    nodes = {u: jt.scope(u) for u in tq}
    edges = [(u, parent[u], set(jt.scope(u)) & set(jt.scope(parent[u]))) for u in tq if parent[u] is not None]
    return _simulate(jt, set(q), nodes, edges, rq)[0]


def oracle_log_benefit(jt: JunctionTree, vs: Iterable[int], entries: Sequence[tuple[Sequence[int], int]]) -> int:
    """Frequency-weighted benefit sum (the integer the optimizers work with)."""
    vs = set(vs)
    return sum(f * oracle_benefit(jt, vs, q) for q, f in entries)


# ------------------------------------------------------------ optimization oracles

def _below_root(jt: JunctionTree, root: int) -> list[int]:
    return sorted(u for u in _below(jt, root) if u != root)


def oracle_sosp(jt: JunctionTree, root: int, K: int, entries) -> tuple[int, tuple[int, ...]]:
    """Best antichain below ``root`` under budget ``K``: (objective, antichain).

    Each node ``v`` contributes the benefit and cost of the path shortcut from
    its parent up to ``root``; ancestors and descendants may not both be chosen.
    Ties go to lower total cost, then to the lexicographically smaller antichain.
    """
    if jt.n > MAX_SOSP_CLIQUES:
        raise InvalidInputError(f"oracle limited to {MAX_SOSP_CLIQUES} cliques")
    cand = _below_root(jt, root)
    stats = {}
    for v in cand:
        path = set(_tree_path(jt, _tree_path(jt, v, root)[1], root))
        stats[v] = (oracle_log_benefit(jt, path, entries), oracle_cost(jt, path)[1])
    anc = {v: set(_tree_path(jt, v, root)[1:-1]) for v in cand}
    best = (0, 0, ())
    for k in range(1, len(cand) + 1):
        for combo in itertools.combinations(cand, k):
            if any(anc[a] & set(combo) for a in combo):
                continue
            cost = sum(stats[v][1] for v in combo)
            if cost > K:
                continue
            val = sum(stats[v][0] for v in combo)
            if (val, -cost) > (best[0], -best[1]):
                best = (val, cost, combo)
    return best[0], best[2] if best[0] > 0 else ()


def oracle_mosp(jt: JunctionTree, K: int, candidates: Sequence[tuple[Iterable[int], int, int]]) -> tuple[int, list[int]]:
    """Best node-disjoint family of candidates: (total objective, candidate indices).

    ``candidates`` holds (clique set, objective, charged cost) triples.
    """
    if jt.n > MAX_MOSP_CLIQUES:
        raise InvalidInputError(f"oracle limited to {MAX_MOSP_CLIQUES} cliques")
    cands = [(frozenset(n), int(v), int(c)) for n, v, c in candidates]
    best = [0, []]

    def search(start: int, used: frozenset, budget: int, value: int, picked: list[int]):
        if value > best[0]:
            best[0], best[1] = value, list(picked)
        for i in range(start, len(cands)):
            nodes, v, c = cands[i]
            if c <= budget and not (nodes & used):
                picked.append(i)
                search(i + 1, used | nodes, budget - c, value + v, picked)
                picked.pop()

    search(0, frozenset(), K, 0, [])
    return best[0], best[1]
