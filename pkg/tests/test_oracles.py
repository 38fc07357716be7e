"""Sanity checks on the brute-force references the other tests lean on."""

import numpy as np
import pytest

from helpers import FIG_IDS, figure_network, figure_tree
from jtmat.errors import InvalidInputError
from jtmat.factors import Variable
from jtmat.junction_tree import from_structure
from jtmat.network_io import bundled_network
from jtmat.oracles import (
    ancestral_closure,
    oracle_base_cost,
    oracle_benefit,
    oracle_joint,
    oracle_marginal,
    oracle_mosp,
    oracle_sosp,
)


def test_joint_is_a_distribution():
    bn = figure_network()
    joint = oracle_joint(bn)
    assert joint.total() == pytest.approx(1.0, abs=1e-12)
    assert joint.values.shape == tuple(v.cardinality for v in bn.variables)


def test_joint_requires_parent_closure():
    bn = figure_network()
    with pytest.raises(InvalidInputError):
        oracle_joint(bn, bn.ids("f"))
    closed = ancestral_closure(bn, bn.ids("f"))
    assert closed == set(bn.ids("bcef"))
    assert oracle_joint(bn, closed).total() == pytest.approx(1.0)


def test_joint_guard_on_large_networks():
    with pytest.raises(InvalidInputError):
        oracle_joint(bundled_network("hailfinder"))


def test_marginal_of_root_is_its_cpt():
    bn = figure_network()
    b = bn.var("b").id
    assert np.allclose(oracle_marginal(bn, [b]), bn.cpts[b].values)


def test_base_cost_of_figure_query():
    bn, jt = figure_tree()
    assert oracle_base_cost(jt, bn.ids("bif")) == 156


def test_benefit_zero_when_shortcut_misses_query():
    bn, jt = figure_tree()
    assert oracle_benefit(jt, [FIG_IDS["ab"], FIG_IDS["aj"]], bn.ids("bif")) == 0


def _path(n):
    vs = [Variable(i, f"x{i}", 2) for i in range(n + 1)]
    return from_structure(vs, [(i, i + 1) for i in range(n)], [(i, i + 1) for i in range(n - 1)], 0)


def test_sosp_on_a_path():
    jt = _path(4)  # 0 - 1 - 2 - 3, pivot 0
    entries = [((0, 4), 1)]
    # from root 1, choosing clique 3 means the shortcut over {1, 2} with scope {x1, x3}
    val, chosen = oracle_sosp(jt, 1, 100, entries)
    assert val > 0 and chosen == (3,)
    assert oracle_sosp(jt, 1, 3, entries) == (0, ())
    # rooted at 0 the shortcut would swallow the only holder of x0
    assert oracle_sosp(jt, 0, 100, entries) == (0, ())


def test_mosp_hand_example():
    jt = _path(4)
    cands = [({0, 1}, 5, 3), ({1, 2}, 7, 3), ({2, 3}, 4, 2)]
    assert oracle_mosp(jt, 5, cands) == (9, [0, 2])
    assert oracle_mosp(jt, 3, cands) == (7, [1])
    assert oracle_mosp(jt, 1, cands) == (0, [])
