"""Online query answering over a calibrated junction tree.

A query is answered on its Steiner tree: the smallest subtree joining the
home cliques of the query variables, rooted at the node closest to the
junction-tree pivot.  Every non-root node contributes its clique table
conditioned on the separator toward its parent, the root contributes its
joint, and messages flow leaves-first.  Each message keeps only the
separator it crosses plus whatever query variables it has picked up.

The cost of a node with ``k`` incoming messages over a combined scope ``U``
is ``(k + 1) * |U|``: ``k`` multiplications and one summing-out pass per
entry of the combined table.

Materialized shortcuts can stand in for part of the Steiner tree.
:class:`QueryProfile` holds the per-query data that makes checking a
candidate shortcut cheap; the offline optimizer evaluates millions of
(shortcut, query) pairs through it.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING, Hashable, Iterable, Mapping, Sequence

from .errors import InvalidInputError, ParseError, PreconditionError
from .factors import DiscreteFactor, Scope, divide, make_scope, marginalize, normalize, product_all
from .junction_tree import JunctionTree

if TYPE_CHECKING:
    from .materializer.shortcuts import ShortcutPotential

Key = Hashable  # clique id (int) or a stand-in label such as "S3"


@dataclass(frozen=True)
class Query:
    variables: Scope
    weight: int = 1

    def __post_init__(self):
        scope = make_scope(self.variables)
        if not scope:
            raise InvalidInputError("a query needs at least one variable")
        if self.weight < 1:
            raise InvalidInputError("query weight must be >= 1")
        object.__setattr__(self, "variables", scope)


def _size(scope: Iterable[int], cards: Mapping[int, int]) -> int:
    n = 1
    for v in scope:
        n *= cards[v]
    return n


def _as_scope(jt: JunctionTree, q) -> Scope:
    if isinstance(q, Query):
        q = q.variables
    scope = make_scope(q)
    if not scope:
        raise InvalidInputError("a query needs at least one variable")
    unknown = [v for v in scope if v not in jt.home]
    if unknown:
        raise InvalidInputError(f"unknown variable ids {unknown}")
    return scope


@dataclass(frozen=True, eq=False)
class SteinerTree:
    """A rooted tree of cliques and shortcut stand-ins to run message passing on.

    ``sep[k]`` is the scope a node's message crosses toward its parent
    (empty for the pivot).  ``standins`` maps stand-in keys to the shortcut
    they represent.
    """

    jt: JunctionTree
    query: Scope
    pivot: Key
    parent: dict
    scopes: dict
    sep: dict
    terminals: dict[int, int]
    standins: dict = field(default_factory=dict)

    @property
    def nodes(self) -> list:
        return sorted(self.parent, key=_key_order)

    @property
    def cliques(self) -> list[int]:
        return sorted(k for k in self.parent if k not in self.standins)

    @cached_property
    def children(self) -> dict:
        out: dict = {k: [] for k in self.parent}
        for k, p in self.parent.items():
            if p is not None:
                out[p].append(k)
        return {k: sorted(v, key=_key_order) for k, v in out.items()}

    @property
    def edges(self) -> list[tuple]:
        return [(k, p) for k, p in sorted(self.parent.items(), key=lambda kv: _key_order(kv[0])) if p is not None]

    def postorder(self) -> list:
        order, stack = [], [self.pivot]
        while stack:
            k = stack.pop()
            order.append(k)
            stack.extend(self.children[k])
        return order[::-1]

    def diameter(self) -> int:
        """Longest path length (edges) within the tree."""
        best = 0
        height: dict = {}
        for k in self.postorder():
            hs = sorted((height[c] + 1 for c in self.children[k]), reverse=True)
            height[k] = hs[0] if hs else 0
            best = max(best, sum(hs[:2]))
        return best


def _key_order(k) -> tuple:
    return (1, str(k)) if isinstance(k, str) else (0, k)


def steiner_tree(jt: JunctionTree, q) -> SteinerTree:
    q = _as_scope(jt, q)
    terminals = {w: jt.home[w] for w in q}
    homes = sorted(set(terminals.values()))
    # the node of the subtree closest to the pivot is the homes' common ancestor
    root = homes[0]
    for h in homes[1:]:
        path = jt.path(root, h)
        root = min(path, key=lambda u: jt.depth[u])
    nodes: set[int] = set()
    for h in homes:
        u = h
        while u not in nodes:
            nodes.add(u)
            if u == root:
                break
            u = jt.parent[u]
    parent = {u: (None if u == root else jt.parent[u]) for u in nodes}
    sep = {u: (() if u == root else jt.sep_scope(u, jt.parent[u])) for u in nodes}
    scopes = {u: jt.scope(u) for u in nodes}
    return SteinerTree(jt, q, root, parent, scopes, sep, terminals)


@dataclass
class QueryResult:
    answer: DiscreteFactor
    cost: int
    shortcuts_used: list = field(default_factory=list)


def _node_costs(st: SteinerTree) -> tuple[dict, dict]:
    """Per-node cost and outgoing message scope, from scopes alone."""
    cards = st.jt.cards
    q = set(st.query)
    msg: dict = {}
    cost: dict = {}
    for k in st.postorder():
        kids = st.children[k]
        u = set(st.scopes[k])
        for c in kids:
            u |= msg[c]
        cost[k] = (len(kids) + 1) * _size(u, cards)
        msg[k] = frozenset(st.sep[k]) | (q & u) if st.parent[k] is not None else frozenset(q & u)
    return cost, msg


def query_cost(st: SteinerTree, q=None) -> int:
    if q is not None and _as_scope(st.jt, q) != st.query:
        raise InvalidInputError("query does not match the Steiner tree")
    return sum(_node_costs(st)[0].values())


def _node_table(st: SteinerTree, k) -> DiscreteFactor:
    jt = st.jt
    s = st.standins.get(k)
    if s is None:
        return jt.cliques[k].potential if k == st.pivot else jt.conditional[k]
    if s.table is None:
        raise PreconditionError(f"shortcut {s.id} has no materialized table")
    if k == st.pivot:
        return s.table
    return divide(s.table, marginalize(s.table, st.sep[k]))


def message_passing(st: SteinerTree, q=None) -> QueryResult:
    if q is not None and _as_scope(st.jt, q) != st.query:
        raise InvalidInputError("query does not match the Steiner tree")
    query = set(st.query)
    msgs: dict = {}
    total = 0
    for k in st.postorder():
        kids = st.children[k]
        combined = product_all([_node_table(st, k), *(msgs[c] for c in kids)])
        total += (len(kids) + 1) * combined.size
        keep = query & set(combined.scope)
        if st.parent[k] is not None:
            keep |= set(st.sep[k])
        msgs[k] = marginalize(combined, keep)
    answer = msgs[st.pivot]
    if answer.scope != st.query:
        raise PreconditionError(f"reduced tree lost query variables: answer over {answer.scope}")
    used = [st.standins[k].id for k in sorted(st.standins, key=_key_order)]
    return QueryResult(normalize(answer), total, used)


# ------------------------------------------------------------ shortcut checks

@dataclass(frozen=True)
class Replacement:
    """Outcome of standing a shortcut in for part of a Steiner tree."""

    useful: bool
    base_cost: int
    reduced_cost: int
    replaced: frozenset  # T_q nodes that the stand-in absorbs


class QueryProfile:
    """Per-query data for evaluating many candidate shortcuts against one query."""

    def __init__(self, jt: JunctionTree, q):
        self.jt = jt
        self.st = steiner_tree(jt, q)
        self.q = frozenset(self.st.query)
        self.nodes = frozenset(self.st.parent)
        self.pivot = self.st.pivot
        self.cost, self.msg = _node_costs(self.st)
        self.base_cost = sum(self.cost.values())
        self.holders = {w: frozenset(u for u in self.nodes if w in jt.scope(u)) for w in self.q}
        self._terms: dict[int, int] | None = None

    def benefit_term(self, v: int) -> int:
        """mu(v) times the cardinalities of query variables below v in the pivot-rooted tree."""
        if self._terms is None:
            jt = self.jt
            self._terms = {
                u: jt.mu(u) * _size(self.q & jt.subtree_vars[u], jt.cards) for u in range(jt.n)
            }
        return self._terms[v]

    def replacement(self, nodes: frozenset, scope: frozenset) -> Replacement:
        """Check a shortcut with clique set ``nodes`` and scope ``scope`` against this query."""
        r = self.nodes & nodes
        if not r:
            return Replacement(False, self.base_cost, self.base_cost, r)
        children = self.st.children
        outside_kids = [x for v in r for x in children[v] if x not in nodes]
        if self.pivot in nodes:
            structural = len(r) < len(self.nodes)
        else:
            structural = bool(outside_kids)
        if not structural:
            return Replacement(False, self.base_cost, self.base_cost, r)
        for w in self.q - scope:
            if not (self.holders[w] - r):
                return Replacement(False, self.base_cost, self.base_cost, r)
        u = set(scope)
        for x in outside_kids:
            u |= self.msg[x]
        standin = (len(outside_kids) + 1) * _size(u, self.jt.cards)
        reduced = self.base_cost - sum(self.cost[v] for v in r) + standin
        return Replacement(reduced < self.base_cost, self.base_cost, reduced, r)

    def useful(self, s: "ShortcutPotential") -> bool:
        return self.replacement(s.node_set, s.scope_set).useful

    def savings(self, s: "ShortcutPotential") -> int:
        rep = self.replacement(s.node_set, s.scope_set)
        return rep.base_cost - rep.reduced_cost if rep.useful else 0


def reduce_with_shortcuts(st: SteinerTree, selected: Sequence["ShortcutPotential"]) -> SteinerTree:
    if not selected:
        return st
    if st.standins:
        raise PreconditionError("tree already carries stand-ins")
    jt = st.jt
    profile = QueryProfile(jt, st.query)
    seen: set[int] = set()
    for s in selected:
        if seen & s.node_set:
            raise PreconditionError(f"shortcut {s.id} overlaps another selected shortcut")
        seen |= s.node_set
        if not profile.useful(s):
            raise PreconditionError(f"shortcut {s.id} is not useful for query {list(st.query)}")

    parent = dict(st.parent)
    scopes = dict(st.scopes)
    sep = dict(st.sep)
    standins = {}
    pivot = st.pivot
    owner: dict[int, str] = {}
    for s in selected:
        key = f"S{s.id}"
        r = profile.nodes & s.node_set
        for v in r:
            owner[v] = key
            del parent[v], scopes[v], sep[v]
        standins[key] = s
        scopes[key] = s.scope
        if st.pivot in s.node_set:
            pivot = key
            parent[key] = None
            sep[key] = ()
        else:
            parent[key] = st.parent[s.root]
            sep[key] = jt.sep_scope(s.root, jt.parent[s.root])
    for k, p in list(parent.items()):
        if p in owner:
            parent[k] = owner[p]
    return SteinerTree(jt, st.query, pivot, parent, scopes, sep, st.terminals, standins)


def gwmin(weights: Mapping[Hashable, float], conflicts: Iterable[tuple]) -> list:
    """Greedy weighted independent set.

    Repeatedly takes the vertex maximizing ``w / (deg + 1)`` in the remaining
    graph (ties to the lower id) and deletes its closed neighbourhood.
    """
    adj: dict = {v: set() for v in weights}
    for a, b in conflicts:
        if a != b:
            adj[a].add(b)
            adj[b].add(a)
    alive = set(weights)
    chosen = []
    while alive:
        v = min(alive, key=lambda x: (-weights[x] / (len(adj[x] & alive) + 1), x))
        chosen.append(v)
        alive -= adj[v] | {v}
    return sorted(chosen)


def select_shortcuts_online(st: SteinerTree, q, catalog) -> list:
    profile = st if isinstance(st, QueryProfile) else QueryProfile(st.jt, st.query if q is None else q)
    useful = [s for s in catalog.shortcuts if profile.useful(s)]
    by_id = {s.id: s for s in useful}
    conflicts = [(a.id, b.id) for i, a in enumerate(useful) for b in useful[i + 1:] if a.node_set & b.node_set]
    return [by_id[i] for i in gwmin({s.id: s.ratio for s in useful}, conflicts)]


def answer(jt: JunctionTree, q, catalog=None) -> QueryResult:
    profile = QueryProfile(jt, q)
    chosen = select_shortcuts_online(profile, None, catalog) if catalog is not None else []
    return message_passing(reduce_with_shortcuts(profile.st, chosen))


# ------------------------------------------------------------ query files

def parse_query_lines(text: str) -> list[tuple[tuple[str, ...], int]]:
    """Parse lines of ``name,name,...[@count]``; blank lines and ``#`` comments are skipped."""
    out = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        body, _, count = line.partition("@")
        names = tuple(n.strip() for n in body.split(","))
        if any(not n for n in names):
            raise ParseError("empty variable name", lineno)
        try:
            c = int(count) if count else 1
        except ValueError:
            raise ParseError(f"bad count {count!r}", lineno) from None
        if c < 1:
            raise ParseError("count must be >= 1", lineno)
        out.append((names, c))
    return out


def format_query_lines(entries: Iterable[tuple[Sequence[str], int]]) -> str:
    return "".join(",".join(names) + (f"@{c}" if c != 1 else "") + "\n" for names, c in entries)


def load_queries(jt: JunctionTree, path) -> list[Query]:
    try:
        return [Query(jt.var_ids(names), c) for names, c in parse_query_lines(Path(path).read_text())]
    except InvalidInputError as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(str(exc)) from None
