from dataclasses import replace
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import FIG_IDS, figure_tree, random_entries, random_network
from jtmat.errors import InvalidInputError, ParseError, PreconditionError
from jtmat.factors import Variable
from jtmat.junction_tree import assemble, compile_network, from_structure
from jtmat.materializer import Catalog, LogProfile, build_catalog, make_shortcut, with_table
from jtmat.network_io import bundled_network, parse_bif
from jtmat.oracles import _steiner, oracle_base_cost, oracle_marginal
from jtmat.query_engine import (
    Query,
    QueryProfile,
    answer,
    format_query_lines,
    gwmin,
    message_passing,
    parse_query_lines,
    query_cost,
    reduce_with_shortcuts,
    select_shortcuts_online,
    steiner_tree,
)

ABC = """
variable a { type discrete [ 2 ] { t, f }; }
variable b { type discrete [ 2 ] { t, f }; }
variable c { type discrete [ 2 ] { t, f }; }
probability ( a ) { table 0.6, 0.4; }
probability ( b | a ) { (t) 0.7, 0.3; (f) 0.1, 0.9; }
probability ( c | b ) { (t) 0.25, 0.75; (f) 0.5, 0.5; }
"""


def chain():
    bn = parse_bif(ABC)
    return bn, assemble(bn, [("a", "b"), ("b", "c")], [(0, 1)])


def shortcut(jt, names_or_ids, sid=0, benefit=1.0):
    s = make_shortcut(jt, names_or_ids, sid)
    return with_table(jt, replace(s, benefit=benefit))


def test_query_rejects_empty_and_unknown():
    _, jt = chain()
    with pytest.raises(InvalidInputError):
        Query(())
    with pytest.raises(InvalidInputError):
        answer(jt, Query((17,)))


def test_query_inside_one_clique():
    bn, jt = chain()
    res = answer(jt, Query(bn.ids("a")))
    # a lives in the single clique ab: one node, no messages in, table of size 4
    assert res.cost == 4
    assert np.allclose(res.answer.values, [0.6, 0.4])


def test_two_clique_path_cost_by_hand():
    bn, jt = chain()
    st_ = steiner_tree(jt, Query(bn.ids("ac")))
    assert st_.pivot == 0 and st_.nodes == [0, 1]
    # leaf bc: 1 * |{b,c}| = 4, sends over {b,c}; root ab: 2 * |{a,b,c}| = 16
    assert query_cost(st_) == 20
    res = message_passing(st_)
    assert res.cost == 20
    assert np.allclose(res.answer.values, oracle_marginal(bn, bn.ids("ac")), atol=1e-12)


def test_figure_steiner_tree():
    bn, jt = figure_tree()
    st_ = steiner_tree(jt, Query(bn.ids("bif")))
    assert st_.pivot == FIG_IDS["bc"]
    assert st_.nodes == [0, 4, 5, 6, 7]
    leaves = [k for k in st_.nodes if not st_.children[k]]
    assert leaves == [FIG_IDS["ef"], FIG_IDS["gil"]]
    assert st_.diameter() == 3


def test_figure_shortcut_reduces_cost_and_keeps_answer():
    bn, jt = figure_tree()
    q = Query(bn.ids("bif"))
    s = shortcut(jt, [FIG_IDS["ce"], FIG_IDS["egh"]])
    assert jt.var_names(s.scope) == ["c", "e", "g"]
    assert s.cost == 8
    profile = QueryProfile(jt, q)
    rep = profile.replacement(s.node_set, s.scope_set)
    assert rep.useful and rep.reduced_cost < rep.base_cost
    reduced = reduce_with_shortcuts(profile.st, [s])
    assert reduced.nodes == [0, 5, 7, "S0"]
    assert len(reduced.edges) == len(profile.st.edges) - 1
    base, fast = message_passing(profile.st), message_passing(reduced)
    assert fast.cost == rep.reduced_cost < base.cost == rep.base_cost
    assert np.allclose(fast.answer.values, base.answer.values, atol=1e-12)
    assert np.allclose(base.answer.values, oracle_marginal(bn, q.variables), atol=1e-12)


def test_reduction_rejects_useless_or_overlapping():
    bn, jt = figure_tree()
    st_ = steiner_tree(jt, Query(bn.ids("bif")))
    with pytest.raises(PreconditionError):
        reduce_with_shortcuts(st_, [shortcut(jt, [FIG_IDS["egh"], FIG_IDS["gil"]])])
    a = shortcut(jt, [FIG_IDS["ce"], FIG_IDS["egh"]], 0)
    b = shortcut(jt, [FIG_IDS["egh"], FIG_IDS["gil"]], 1)
    with pytest.raises(PreconditionError):
        reduce_with_shortcuts(st_, [a, b])


def test_disjoint_useful_catalog_is_used_in_full():
    bn, jt = figure_tree()
    q = Query(bn.ids("bifk"))
    cat = Catalog([shortcut(jt, [1, 2], 0), shortcut(jt, [4, 6], 1), shortcut(jt, [6, 7], 2)], "peanut", 100)
    chosen = select_shortcuts_online(steiner_tree(jt, q), q, cat)
    assert [s.id for s in chosen] == [0, 1]
    res = answer(jt, q, cat)
    assert res.shortcuts_used == [0, 1]
    assert res.cost < answer(jt, q).cost
    assert np.allclose(res.answer.values, oracle_marginal(bn, q.variables), atol=1e-12)


def test_gwmin_prefers_heavier_conflicting_vertex():
    assert gwmin({"x": 3.0, "y": 1.0}, [("x", "y")]) == ["x"]
    assert gwmin({0: 1.0, 1: 1.0}, [(0, 1)]) == [0]
    assert gwmin({0: 1.0, 1: 1.0, 2: 1.0}, []) == [0, 1, 2]


@settings(max_examples=80, deadline=None)
@given(st.lists(st.integers(1, 9), min_size=5, max_size=5),
       st.sets(st.sampled_from(list(combinations(range(5), 2)))))
def test_gwmin_independent_and_meets_degree_bound(ws, edges):
    weights = dict(enumerate(map(float, ws)))
    chosen = gwmin(weights, edges)
    assert not any((a, b) in edges or (b, a) in edges for a, b in combinations(chosen, 2))
    deg = {v: sum(v in e for e in edges) for v in weights}
    bound = sum(w / (deg[v] + 1) for v, w in weights.items())
    assert sum(weights[v] for v in chosen) >= bound - 1e-9
    # maximal: every vertex left out has a chosen neighbour
    for v in set(weights) - set(chosen):
        assert any((v, c) in edges or (c, v) in edges for c in chosen)


def test_steiner_cost_matches_explicit_simulation():
    bn = bundled_network("child")
    jt = compile_network(bn)
    rng = np.random.default_rng(5)
    for q, _ in random_entries(rng, jt, 40, max_size=5):
        nodes, root = _steiner(jt, q)
        st_ = steiner_tree(jt, q)
        assert set(st_.nodes) == nodes and st_.pivot == root
        assert query_cost(st_) == oracle_base_cost(jt, q)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 10_000))
def test_answers_exact_with_and_without_catalog(seed):
    rng = np.random.default_rng(seed)
    bn = random_network(rng, int(rng.integers(5, 11)), max_parents=2, max_card=3)
    jt = compile_network(bn)
    entries = random_entries(rng, jt, 12, max_size=3)
    K = int(rng.integers(0, 3 * jt.separator_total() + 1))
    mode = ["peanut", "peanut+"][seed % 2]
    cat = build_catalog(jt, LogProfile(jt, entries), K, 1.0, mode)
    assert cat.actual_budget <= K
    for q, _ in entries:
        base, fast = answer(jt, q), answer(jt, q, cat)
        assert fast.cost <= base.cost
        assert np.allclose(fast.answer.values, oracle_marginal(bn, q), atol=1e-9)
        assert np.allclose(base.answer.values, oracle_marginal(bn, q), atol=1e-9)


def test_missing_table_is_a_precondition_error():
    bn, jt = figure_tree()
    q = Query(bn.ids("bif"))
    bare = replace(make_shortcut(jt, [4, 6]), benefit=1.0)
    st_ = reduce_with_shortcuts(steiner_tree(jt, q), [bare])
    with pytest.raises(PreconditionError):
        message_passing(st_)


def test_pivot_can_be_absorbed_by_shortcut():
    vs = [Variable(i, f"x{i}", 2) for i in range(5)]
    jt = from_structure(vs, [(0, 1), (1, 2), (2, 3), (3, 4)], [(0, 1), (1, 2), (2, 3)], None)
    assert jt.pivot == 1
    profile = QueryProfile(jt, Query((0, 4)))
    s = make_shortcut(jt, [1, 2])
    assert profile.replacement(s.node_set, s.scope_set).useful
    reduced = reduce_with_shortcuts(profile.st, [replace(s, benefit=1.0)])
    assert reduced.pivot == "S0"


def test_query_file_roundtrip():
    text = "# header\na,b@3\n\nc  # trailing\n"
    entries = parse_query_lines(text)
    assert entries == [(("a", "b"), 3), (("c",), 1)]
    assert parse_query_lines(format_query_lines(entries)) == entries
    with pytest.raises(ParseError) as err:
        parse_query_lines("a\nb@0\n")
    assert err.value.line == 2
