"""Random instances and small hand-built networks shared by the tests."""

from __future__ import annotations

import numpy as np

from jtmat.factors import DiscreteFactor, Variable, make_scope
from jtmat.junction_tree import JunctionTree, from_structure
from jtmat.network_io import BayesianNetwork


def random_network(rng: np.random.Generator, n_vars: int, max_parents: int = 3, max_card: int = 2) -> BayesianNetwork:
    variables = [Variable(i, f"v{i}", int(rng.integers(2, max_card + 1))) for i in range(n_vars)]
    parents, cpts = {}, {}
    for i in range(n_vars):
        k = int(rng.integers(0, min(i, max_parents) + 1))
        ps = tuple(sorted(int(x) for x in rng.choice(i, size=k, replace=False))) if k else ()
        parents[i] = ps
        shape = [variables[p].cardinality for p in ps] + [variables[i].cardinality]
        rows = rng.dirichlet(np.ones(shape[-1]), size=int(np.prod(shape[:-1], dtype=int))).reshape(shape)
        order = list(ps) + [i]
        scope = make_scope(order)
        arr = np.transpose(rows, [order.index(v) for v in scope])
        cpts[i] = DiscreteFactor(scope, arr.shape, arr)
    return BayesianNetwork(variables, parents, cpts, "random")


def random_tree(rng: np.random.Generator, n_cliques: int, card: int = 2) -> JunctionTree:
    """A random clique tree (fresh variables per clique keep the running intersection)."""
    next_var = 0
    scopes = []
    edges = []
    for i in range(n_cliques):
        fresh = list(range(next_var, next_var + int(rng.integers(1, 3))))
        next_var += len(fresh)
        if i == 0:
            scopes.append(make_scope(fresh + [next_var]))
            next_var += 1
            continue
        p = int(rng.integers(0, i))
        shared = rng.choice(scopes[p], size=int(rng.integers(1, min(2, len(scopes[p])) + 1)), replace=False)
        scopes.append(make_scope([int(x) for x in shared] + fresh))
        edges.append((p, i))
    variables = [Variable(v, f"x{v}", card) for v in range(next_var)]
    return from_structure(variables, scopes, edges, None)


def random_entries(rng: np.random.Generator, jt: JunctionTree, n: int, max_size: int = 3):
    nv = len(jt.variables)
    out = []
    for _ in range(n):
        k = int(rng.integers(1, min(max_size, nv) + 1))
        q = tuple(sorted(int(x) for x in rng.choice(nv, size=k, replace=False)))
        out.append((q, int(rng.integers(1, 4))))
    return out


# The worked example: a tree bc (pivot) with branches ab-aj-jk and
# bc-ce, ce-ef, ce-egh, egh-gil.  h is given four states so that the
# shortcut over {egh, ce} actually pays off for q = {b, i, f}.
FIG_CARDS = {"a": 2, "b": 2, "c": 2, "e": 2, "f": 2, "g": 2, "h": 4, "i": 2, "j": 2, "k": 3, "l": 2}
FIG_PARENTS = {
    "b": (), "c": ("b",), "a": ("b",), "j": ("a",), "k": ("j",), "e": ("c",),
    "f": ("e",), "g": ("e",), "h": ("e", "g"), "i": ("g",), "l": ("g", "i"),
}
FIG_CLIQUES = [("b", "c"), ("a", "b"), ("a", "j"), ("j", "k"), ("c", "e"), ("e", "f"), ("e", "g", "h"), ("g", "i", "l")]
FIG_EDGES = [(0, 1), (1, 2), (2, 3), (0, 4), (4, 5), (4, 6), (6, 7)]
FIG_IDS = {"bc": 0, "ab": 1, "aj": 2, "jk": 3, "ce": 4, "ef": 5, "egh": 6, "gil": 7}


def figure_network(seed: int = 3) -> BayesianNetwork:
    rng = np.random.default_rng(seed)
    names = list(FIG_CARDS)
    variables = [Variable(i, n, FIG_CARDS[n]) for i, n in enumerate(names)]
    idx = {n: i for i, n in enumerate(names)}
    parents, cpts = {}, {}
    for n in names:
        ps = tuple(idx[p] for p in FIG_PARENTS[n])
        parents[idx[n]] = ps
        shape = [FIG_CARDS[FIG_PARENTS[n][k]] for k in range(len(ps))] + [FIG_CARDS[n]]
        rows = rng.dirichlet(np.ones(shape[-1]), size=int(np.prod(shape[:-1], dtype=int))).reshape(shape)
        order = list(ps) + [idx[n]]
        scope = make_scope(order)
        arr = np.transpose(rows, [order.index(v) for v in scope])
        cpts[idx[n]] = DiscreteFactor(scope, arr.shape, arr)
    return BayesianNetwork(variables, parents, cpts, "figure")


def figure_tree(bn: BayesianNetwork | None = None):
    from jtmat.junction_tree import assemble

    bn = bn or figure_network()
    return bn, assemble(bn, FIG_CLIQUES, FIG_EDGES)
