"""Junction-tree construction and Hugin calibration.

Pipeline: ``moralize`` -> ``triangulate`` (min-fill) -> ``build_clique_tree``
-> ``initialize_potentials`` -> ``calibrate``.  ``compile_network`` runs all of
it.  Graphs are plain ``dict[int, set[int]]`` adjacency maps over variable ids.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, replace
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InternalError, InvalidInputError, ParseError
from .factors import (
    DiscreteFactor,
    Scope,
    Variable,
    divide,
    make_scope,
    marginalize,
    normalize,
    product,
    product_all,
    table_size,
)
from .network_io import BayesianNetwork

TREE_FORMAT = "jtmat-tree v1"
Graph = dict[int, set[int]]


@dataclass(frozen=True)
class CliqueNode:
    id: int
    scope: Scope
    potential: DiscreteFactor

    @property
    def size(self) -> int:
        return self.potential.size


@dataclass(frozen=True)
class Separator:
    endpoints: tuple[int, int]
    scope: Scope
    potential: DiscreteFactor


def _edge(u: int, v: int) -> tuple[int, int]:
    return (u, v) if u < v else (v, u)


@dataclass(frozen=True, eq=False)
class JunctionTree:
    variables: tuple[Variable, ...]
    cliques: tuple[CliqueNode, ...]
    separators: tuple[Separator, ...]
    pivot: int
    calibrated: bool = False

    # ----------------------------------------------------------- structure

    @property
    def n(self) -> int:
        return len(self.cliques)

    @cached_property
    def cards(self) -> dict[int, int]:
        return {v.id: v.cardinality for v in self.variables}

    def scope(self, u: int) -> Scope:
        return self.cliques[u].scope

    def mu(self, u: int) -> int:
        """Table size of clique ``u``."""
        return self.cliques[u].size

    @cached_property
    def adjacency(self) -> dict[int, list[int]]:
        adj: dict[int, list[int]] = {c.id: [] for c in self.cliques}
        for s in self.separators:
            u, v = s.endpoints
            adj[u].append(v)
            adj[v].append(u)
        return {u: sorted(vs) for u, vs in adj.items()}

    @cached_property
    def _sep_index(self) -> dict[tuple[int, int], int]:
        return {_edge(*s.endpoints): i for i, s in enumerate(self.separators)}

    def separator(self, u: int, v: int) -> Separator:
        try:
            return self.separators[self._sep_index[_edge(u, v)]]
        except KeyError:
            raise InvalidInputError(f"cliques {u} and {v} are not adjacent") from None

    def sep_scope(self, u: int, v: int) -> Scope:
        return self.separator(u, v).scope

    @cached_property
    def parent(self) -> dict[int, int | None]:
        """Parent of every clique when the tree hangs from the pivot."""
        par: dict[int, int | None] = {self.pivot: None}
        for u in self.preorder:
            for w in self.adjacency[u]:
                if w not in par:
                    par[w] = u
        return par

    @cached_property
    def children(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {c.id: [] for c in self.cliques}
        for u in self.preorder:
            p = self.parent[u]
            if p is not None:
                out[p].append(u)
        return out

    @cached_property
    def preorder(self) -> list[int]:
        """Depth-first order from the pivot, children in ascending id."""
        order, seen, stack = [], {self.pivot}, [self.pivot]
        while stack:
            u = stack.pop()
            order.append(u)
            for w in reversed(self.adjacency[u]):
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        if len(order) != self.n:
            raise InternalError("junction tree is not connected")
        return order

    @cached_property
    def dfs_labels(self) -> dict[int, int]:
        return {u: i for i, u in enumerate(self.preorder)}

    @cached_property
    def depth(self) -> dict[int, int]:
        d = {self.pivot: 0}
        for u in self.preorder[1:]:
            d[u] = d[self.parent[u]] + 1
        return d

    def path(self, u: int, v: int) -> list[int]:
        """Cliques on the tree path from u to v, both ends included."""
        up, down = [u], [v]
        while up[-1] != down[-1]:
            if self.depth[up[-1]] >= self.depth[down[-1]]:
                up.append(self.parent[up[-1]])
            else:
                down.append(self.parent[down[-1]])
        return up + down[-2::-1]

    def subtree(self, u: int) -> list[int]:
        """Cliques in the subtree of ``u`` (pivot-rooted), ``u`` first, in preorder."""
        out, stack = [], [u]
        while stack:
            w = stack.pop()
            out.append(w)
            stack.extend(reversed(self.children[w]))
        return out

    @cached_property
    def subtree_vars(self) -> dict[int, frozenset[int]]:
        """Union of the clique scopes in each pivot-rooted subtree."""
        acc: dict[int, set[int]] = {}
        for u in reversed(self.preorder):
            s = set(self.scope(u))
            for c in self.children[u]:
                s |= acc[c]
            acc[u] = s
        return {u: frozenset(s) for u, s in acc.items()}

    @cached_property
    def home(self) -> dict[int, int]:
        """Home clique of every variable: smallest containing scope, ties by lowest id."""
        out: dict[int, int] = {}
        for c in sorted(self.cliques, key=lambda c: (c.size, c.id)):
            for v in c.scope:
                out.setdefault(v, c.id)
        return out

    @cached_property
    def conditional(self) -> dict[int, DiscreteFactor]:
        """Clique potential over its separator toward the pivot; the pivot keeps its joint.

        These are the tables a clique contributes when it sends a message
        during query answering.
        """
        out = {}
        for c in self.cliques:
            p = self.parent[c.id]
            if p is None:
                out[c.id] = c.potential
            else:
                out[c.id] = divide(c.potential, self.separator(c.id, p).potential)
        return out

    def eccentricities(self) -> dict[int, int]:
        return {c.id: max(_bfs_dist(self.adjacency, c.id).values()) for c in self.cliques}

    def summary(self) -> dict:
        ecc = self.eccentricities()
        return {
            "cliques": self.n,
            "diameter": max(ecc.values()),
            "treewidth": max(len(c.scope) for c in self.cliques) - 1,
            "pivot": self.pivot,
            "separator_total": self.separator_total(),
        }

    def separator_total(self) -> int:
        """Sum of separator table sizes; the unit in which budgets are quoted."""
        return sum(table_size(s.scope, self.cards) for s in self.separators)

    def var_id(self, name: str) -> int:
        for v in self.variables:
            if v.name == name:
                return v.id
        raise InvalidInputError(f"unknown variable {name!r}")

    def var_ids(self, names: Iterable[str]) -> Scope:
        return make_scope(self.var_id(n) for n in names)

    def var_names(self, ids: Iterable[int]) -> list[str]:
        return [self.variables[i].name for i in ids]

    def with_pivot(self, pivot: int) -> "JunctionTree":
        if not 0 <= pivot < self.n:
            raise InvalidInputError(f"no clique {pivot}")
        return replace(self, pivot=pivot)


def _bfs_dist(adj: Mapping[int, Sequence[int]], src: int) -> dict[int, int]:
    dist = {src: 0}
    queue = deque([src])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w not in dist:
                dist[w] = dist[u] + 1
                queue.append(w)
    return dist


# ------------------------------------------------------------ graph stages

def moralize(bn: BayesianNetwork) -> Graph:
    g: Graph = {v.id: set() for v in bn.variables}
    for child, ps in bn.parents.items():
        for p in ps:
            g[p].add(child)
            g[child].add(p)
        for a, b in combinations(ps, 2):
            g[a].add(b)
            g[b].add(a)
    return g


def _fill_count(g: Graph, v: int) -> int:
    nbrs = sorted(g[v])
    return sum(1 for a, b in combinations(nbrs, 2) if b not in g[a])


def triangulate(graph: Graph) -> tuple[Graph, list[int]]:
    """Min-fill elimination.

    Ties go to the vertex whose elimination clique is smallest, then to the
    lowest id.  Returns the chordal supergraph and the elimination order.
    """
    work = {v: set(ns) for v, ns in graph.items()}
    chordal = {v: set(ns) for v, ns in graph.items()}
    order: list[int] = []
    while work:
        v = min(work, key=lambda x: (_fill_count(work, x), len(work[x]), x))
        nbrs = sorted(work[v])
        for a, b in combinations(nbrs, 2):
            if b not in work[a]:
                work[a].add(b)
                work[b].add(a)
                chordal[a].add(b)
                chordal[b].add(a)
        for w in nbrs:
            work[w].discard(v)
        del work[v]
        order.append(v)
    return chordal, order


def is_perfect_elimination_order(graph: Graph, order: Sequence[int]) -> bool:
    pos = {v: i for i, v in enumerate(order)}
    for v in order:
        later = [w for w in graph[v] if pos[w] > pos[v]]
        for a, b in combinations(later, 2):
            if b not in graph[a]:
                return False
    return True


def _mcs_order(graph: Graph) -> list[int]:
    """Maximum cardinality search; its reverse is a perfect elimination order of a chordal graph."""
    weight = {v: 0 for v in graph}
    visited: list[int] = []
    left = set(graph)
    while left:
        v = min(left, key=lambda x: (-weight[x], x))
        visited.append(v)
        left.remove(v)
        for w in graph[v]:
            if w in left:
                weight[w] += 1
    return visited[::-1]


def maximal_cliques(graph: Graph, order: Sequence[int] | None = None) -> list[Scope]:
    if order is None:
        order = _mcs_order(graph)
    if not is_perfect_elimination_order(graph, order):
        raise InvalidInputError("graph is not chordal (or order is not a perfect elimination order)")
    pos = {v: i for i, v in enumerate(order)}
    candidates = {make_scope([v, *(w for w in graph[v] if pos[w] > pos[v])]) for v in order}
    sets = sorted(candidates, key=lambda s: (-len(s), s))
    kept: list[Scope] = []
    for s in sets:
        if not any(set(s) <= set(k) for k in kept):
            kept.append(s)
    return sorted(kept)


def _spanning_tree(cliques: Sequence[Scope]) -> list[tuple[int, int]]:
    """Maximum spanning tree of the clique graph (weight = shared variable count).

    Kruskal over all pairs, heavier first and lexicographically smaller
    endpoint pairs first among equals; zero-weight pairs join components.
    """
    n = len(cliques)
    sets = [set(c) for c in cliques]
    pairs = sorted(combinations(range(n), 2), key=lambda e: (-len(sets[e[0]] & sets[e[1]]), e))
    root = list(range(n))

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    edges = []
    for u, v in pairs:
        ru, rv = find(u), find(v)
        if ru != rv:
            root[max(ru, rv)] = min(ru, rv)
            edges.append((u, v))
            if len(edges) == n - 1:
                break
    return edges


def check_running_intersection(cliques: Sequence[Scope], edges: Sequence[tuple[int, int]]) -> bool:
    """Each variable's containing cliques must induce a connected subtree."""
    adj: dict[int, list[int]] = {i: [] for i in range(len(cliques))}
    for u, v in edges:
        adj[u].append(v)
        adj[v].append(u)
    holders: dict[int, set[int]] = {}
    for i, c in enumerate(cliques):
        for x in c:
            holders.setdefault(x, set()).add(i)
    for nodes in holders.values():
        start = next(iter(nodes))
        seen, stack = {start}, [start]
        while stack:
            u = stack.pop()
            for w in adj[u]:
                if w in nodes and w not in seen:
                    seen.add(w)
                    stack.append(w)
        if seen != nodes:
            return False
    return True


def choose_pivot(jt: JunctionTree) -> int:
    """Tree centre: minimum eccentricity, ties to the lowest id."""
    ecc = jt.eccentricities()
    return min(ecc, key=lambda u: (ecc[u], u))


def from_structure(variables: Sequence[Variable], cliques: Sequence[Scope], edges: Sequence[tuple[int, int]],
               pivot: int | None) -> JunctionTree:
    cards = {v.id: v.cardinality for v in variables}
    nodes = tuple(CliqueNode(i, c, DiscreteFactor.ones(c, cards)) for i, c in enumerate(cliques))
    seps = []
    for u, v in sorted(_edge(*e) for e in edges):
        scope = make_scope(set(cliques[u]) & set(cliques[v]))
        seps.append(Separator((u, v), scope, DiscreteFactor.ones(scope, cards)))
    jt = JunctionTree(tuple(variables), nodes, tuple(seps), 0)
    return jt.with_pivot(choose_pivot(jt) if pivot is None else pivot)


def build_clique_tree(graph: Graph, variables: Sequence[Variable], order: Sequence[int] | None = None) -> JunctionTree:
    """Clique tree of a chordal graph with all-ones potentials and the centre as pivot."""
    cliques = maximal_cliques(graph, order)
    edges = _spanning_tree(cliques)
    if not check_running_intersection(cliques, edges):
        raise InternalError("spanning tree violates the running-intersection property")
    return from_structure(variables, cliques, edges, None)


def assemble(bn: BayesianNetwork, cliques: Sequence[Iterable[str]], edges: Sequence[tuple[int, int]],
             pivot: int | None = None, calibrate_tree: bool = True) -> JunctionTree:
    """Build a tree with a hand-chosen structure (cliques by variable name, edges by clique index)."""
    scopes = [bn.ids(c) for c in cliques]
    if len(edges) != len(scopes) - 1:
        raise InvalidInputError("a tree over n cliques needs n-1 edges")
    if not check_running_intersection(scopes, edges):
        raise InvalidInputError("given structure violates the running-intersection property")
    jt = from_structure(bn.variables, scopes, edges, pivot)
    jt.preorder  # raises if the edges leave it disconnected
    jt = initialize_potentials(bn, jt)
    return calibrate(jt) if calibrate_tree else jt


# ------------------------------------------------------------ potentials

def initialize_potentials(bn: BayesianNetwork, jt: JunctionTree) -> JunctionTree:
    assigned: dict[int, list[DiscreteFactor]] = {c.id: [] for c in jt.cliques}
    by_size = sorted(jt.cliques, key=lambda c: (c.size, c.id))
    for vid in sorted(bn.cpts):
        cpt = bn.cpts[vid]
        target = next((c for c in by_size if set(cpt.scope) <= set(c.scope)), None)
        if target is None:
            raise InternalError(f"CPT of {bn.variables[vid].name!r} fits in no clique")
        assigned[target.id].append(cpt)
    cliques = tuple(
        replace(c, potential=product(DiscreteFactor.ones(c.scope, jt.cards), product_all(assigned[c.id])))
        for c in jt.cliques
    )
    seps = tuple(replace(s, potential=DiscreteFactor.ones(s.scope, jt.cards)) for s in jt.separators)
    return replace(jt, cliques=cliques, separators=seps, calibrated=False)


def _absorb(target: DiscreteFactor, new_sep: DiscreteFactor, old_sep: DiscreteFactor) -> DiscreteFactor:
    return product(target, divide(new_sep, old_sep))


def calibrate(jt: JunctionTree) -> JunctionTree:
    """Hugin collect/distribute around the pivot, then normalize to total mass one."""
    pots = {c.id: c.potential for c in jt.cliques}
    seps = {_edge(*s.endpoints): s.potential for s in jt.separators}
    for u in reversed(jt.preorder[1:]):
        p = jt.parent[u]
        key = _edge(u, p)
        new = marginalize(pots[u], seps[key].scope)
        pots[p] = _absorb(pots[p], new, seps[key])
        seps[key] = new
    for u in jt.preorder[1:]:
        p = jt.parent[u]
        key = _edge(u, p)
        new = marginalize(pots[p], seps[key].scope)
        pots[u] = _absorb(pots[u], new, seps[key])
        seps[key] = new
    z = pots[jt.pivot].total()
    scale = lambda f: DiscreteFactor(f.scope, f.cards, f.values / z)  # noqa: E731
    if not z > 0:
        normalize(pots[jt.pivot])  # raises the domain error
    cliques = tuple(replace(c, potential=scale(pots[c.id])) for c in jt.cliques)
    separators = tuple(replace(s, potential=scale(seps[_edge(*s.endpoints)])) for s in jt.separators)
    return replace(jt, cliques=cliques, separators=separators, calibrated=True)


def marginal(jt: JunctionTree, var: int | str) -> DiscreteFactor:
    if not jt.calibrated:
        raise InvalidInputError("tree is not calibrated")
    vid = jt.var_id(var) if isinstance(var, str) else var
    if vid not in jt.home:
        raise InvalidInputError(f"unknown variable {var!r}")
    return normalize(marginalize(jt.cliques[jt.home[vid]].potential, (vid,)))


def compile_network(bn: BayesianNetwork) -> JunctionTree:
    """Moralize, triangulate, build, initialize and calibrate."""
    chordal, order = triangulate(moralize(bn))
    jt = build_clique_tree(chordal, bn.variables, order)
    return calibrate(initialize_potentials(bn, jt))


# ------------------------------------------------------------ serialization

def to_document(jt: JunctionTree) -> dict:
    return {
        "format": TREE_FORMAT,
        "variables": [
            {"name": v.name, "cardinality": v.cardinality, "states": list(v.states)} for v in jt.variables
        ],
        "cliques": [
            {"id": c.id, "scope": list(c.scope), "values": [float(x) for x in c.potential.flat()]}
            for c in jt.cliques
        ],
        "separators": [
            {"endpoints": list(s.endpoints), "scope": list(s.scope), "values": [float(x) for x in s.potential.flat()]}
            for s in jt.separators
        ],
        "pivot": jt.pivot,
        "dfs_labels": {str(u): jt.dfs_labels[u] for u in sorted(jt.dfs_labels)},
        "calibrated": jt.calibrated,
    }


def from_document(doc: dict) -> JunctionTree:
    if not isinstance(doc, dict) or doc.get("format") != TREE_FORMAT:
        raise ParseError(f"not a {TREE_FORMAT} document")
    try:
        variables = tuple(
            Variable(i, d["name"], int(d["cardinality"]), tuple(d.get("states", ())))
            for i, d in enumerate(doc["variables"])
        )
        cards = {v.id: v.cardinality for v in variables}
        cliques = []
        for i, d in enumerate(doc["cliques"]):
            if d["id"] != i:
                raise ParseError("clique ids must be 0..n-1 in order")
            cliques.append(CliqueNode(i, tuple(d["scope"]), DiscreteFactor.from_flat(d["scope"], cards, d["values"])))
        seps = []
        for d in doc["separators"]:
            u, v = d["endpoints"]
            seps.append(Separator((u, v), tuple(d["scope"]), DiscreteFactor.from_flat(d["scope"], cards, d["values"])))
        jt = JunctionTree(variables, tuple(cliques), tuple(seps), int(doc["pivot"]), bool(doc["calibrated"]))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed {TREE_FORMAT} document: {exc}") from exc
    if not check_running_intersection([c.scope for c in jt.cliques], [s.endpoints for s in jt.separators]):
        raise ParseError("tree violates the running-intersection property")
    try:
        jt.preorder
    except InternalError as exc:
        raise ParseError(str(exc)) from None
    labels = doc.get("dfs_labels")
    if labels is not None and {int(k): v for k, v in labels.items()} != jt.dfs_labels:
        raise ParseError("stored DFS labels disagree with the tree structure")
    return jt


def dumps_tree(jt: JunctionTree) -> str:
    return json.dumps(to_document(jt), indent=1) + "\n"


def loads_tree(text: str) -> JunctionTree:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    return from_document(doc)


def load_tree(path) -> JunctionTree:
    return loads_tree(Path(path).read_text())


def save_tree(jt: JunctionTree, path) -> None:
    Path(path).write_text(dumps_tree(jt))


def trees_identical(a: JunctionTree, b: JunctionTree) -> bool:
    return (
        a.variables == b.variables
        and a.pivot == b.pivot
        and a.calibrated == b.calibrated
        and len(a.cliques) == len(b.cliques)
        and all(
            x.scope == y.scope and np.array_equal(x.potential.values, y.potential.values)
            for x, y in zip(a.cliques, b.cliques)
        )
        and [s.endpoints for s in a.separators] == [s.endpoints for s in b.separators]
        and all(np.array_equal(x.potential.values, y.potential.values) for x, y in zip(a.separators, b.separators))
    )
