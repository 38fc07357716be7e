import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jtmat.errors import InvalidInputError, NumericalDomainError
from jtmat.factors import (
    DiscreteFactor,
    Variable,
    divide,
    make_scope,
    marginalize,
    normalize,
    product,
    table_size,
)


def F(scope, values, card=2):
    scope = tuple(scope)
    return DiscreteFactor(scope, (card,) * len(scope), np.asarray(values, dtype=float))


def brute_product(f, g):
    cards = {**f.card_map, **g.card_map}
    scope = make_scope(cards)
    out = np.zeros([cards[v] for v in scope])
    for assignment in itertools.product(*(range(cards[v]) for v in scope)):
        a = dict(zip(scope, assignment))
        out[assignment] = f.values[tuple(a[v] for v in f.scope)] * g.values[tuple(a[v] for v in g.scope)]
    return scope, out


def brute_marginal(f, keep):
    keep = make_scope(keep)
    out = np.zeros([f.cards[f.scope.index(v)] for v in keep])
    for assignment in itertools.product(*(range(c) for c in f.cards)):
        a = dict(zip(f.scope, assignment))
        out[tuple(a[v] for v in keep)] += f.values[assignment]
    return out


def test_variable_rejects_bad_cardinality():
    with pytest.raises(InvalidInputError):
        Variable(0, "x", 0)
    with pytest.raises(InvalidInputError):
        Variable(0, "x", 2, ("only",))


def test_factor_rejects_negative_or_nonfinite():
    with pytest.raises(InvalidInputError):
        F((0,), [0.5, -0.1])
    with pytest.raises(InvalidInputError):
        F((0,), [np.nan, 1.0])
    with pytest.raises(InvalidInputError):
        F((1, 0), [1, 2, 3, 4])


def test_layout_is_row_major_last_fastest():
    f = DiscreteFactor.from_flat((0, 1), {0: 2, 1: 3}, range(6))
    assert f.values[1, 0] == 3
    assert list(f.flat()) == [0, 1, 2, 3, 4, 5]


def test_product_identity():
    f = F((0, 1), [0.1, 0.2, 0.3, 0.4])
    assert product(f, DiscreteFactor.ones(f.scope, f.card_map)).allclose(f)


def test_product_same_scope_pointwise():
    out = product(F((0,), [0.2, 0.8]), F((0,), [0.5, 0.5]))
    assert np.allclose(out.values, [0.1, 0.4])


def test_product_disjoint_outer_matches_enumeration():
    f, g = F((0,), [0.2, 0.8]), F((1,), [0.3, 0.7])
    out = product(f, g)
    scope, expected = brute_product(f, g)
    assert out.scope == scope == (0, 1)
    for a, b in itertools.product(range(2), range(2)):
        assert out.values[a, b] == pytest.approx(f.values[a] * g.values[b], abs=1e-15)
    assert np.allclose(out.values, expected)


def test_product_cardinality_mismatch():
    f = DiscreteFactor((0,), (2,), [1, 1])
    g = DiscreteFactor((0,), (3,), [1, 1, 1])
    with pytest.raises(InvalidInputError):
        product(f, g)


def test_marginalize_basics():
    f = normalize(F((0, 1), [1, 2, 3, 4]))
    assert marginalize(f, f.scope).allclose(f)
    assert marginalize(f, ()).total() == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(InvalidInputError):
        marginalize(f, (7,))


def test_marginalize_outer_product_scales_by_other_mass():
    f, g = F((0,), [0.2, 0.8]), F((1,), [1.5, 2.5])
    out = marginalize(product(f, g), (0,))
    assert np.allclose(out.values, brute_marginal(product(f, g), (0,)))
    assert np.allclose(out.values, f.values * g.values.sum())


def test_divide_conventions():
    f = F((0, 1), [0.1, 0.2, 0.3, 0.4])
    assert divide(f, DiscreteFactor.ones((0,), {0: 2})).allclose(f)
    assert np.allclose(divide(f, f).values, 1.0)
    zero = divide(F((0,), [0.0, 0.6]), F((0,), [0.0, 0.3]))
    assert list(zero.values) == [0.0, 2.0]
    with pytest.raises(NumericalDomainError):
        divide(F((0,), [0.1, 0.6]), F((0,), [0.0, 0.3]))
    with pytest.raises(InvalidInputError):
        divide(F((0,), [1, 1]), F((1,), [1, 1]))


def test_normalize():
    assert np.allclose(normalize(F((0,), [2, 2])).values, [0.5, 0.5])
    assert np.allclose(normalize(F((0,), [1, 3])).values, [0.25, 0.75])
    f = normalize(F((0, 1), [1, 2, 3, 4]))
    assert normalize(f).allclose(f, atol=1e-12)
    with pytest.raises(NumericalDomainError):
        normalize(F((0,), [0, 0]))


def test_table_size():
    assert table_size((), {}) == 1
    assert table_size((0, 1), {0: 2, 1: 3}) == 6
    with pytest.raises(InvalidInputError):
        table_size((5,), {0: 2})


def test_table_size_of_worked_example_shortcut_scope():
    from helpers import FIG_CARDS, figure_network

    bn = figure_network()
    scope = bn.ids("ceg")
    assert table_size(scope, bn.cards) == FIG_CARDS["c"] * FIG_CARDS["e"] * FIG_CARDS["g"]


# ---------------------------------------------------------------- properties

@st.composite
def factors(draw, pool=(0, 1, 2, 3)):
    scope = tuple(sorted(draw(st.sets(st.sampled_from(pool), max_size=4))))
    vals = draw(st.lists(st.floats(0, 10, allow_nan=False), min_size=2 ** len(scope), max_size=2 ** len(scope)))
    return DiscreteFactor(scope, (2,) * len(scope), np.array(vals))


@settings(max_examples=60, deadline=None)
@given(factors(), factors())
def test_product_matches_brute_force_and_commutes(f, g):
    scope, expected = brute_product(f, g)
    fg, gf = product(f, g), product(g, f)
    assert fg.scope == scope
    assert np.allclose(fg.values, expected)
    assert fg.allclose(gf)


@settings(max_examples=40, deadline=None)
@given(factors(), factors(), factors())
def test_product_associative(f, g, h):
    assert product(product(f, g), h).allclose(product(f, product(g, h)), atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(factors(), st.data())
def test_marginalize_matches_brute_force_and_nests(f, data):
    keep2 = data.draw(st.sets(st.sampled_from(f.scope))) if f.scope else set()
    keep1 = data.draw(st.sets(st.sampled_from(sorted(keep2)))) if keep2 else set()
    assert np.allclose(marginalize(f, keep2).values, brute_marginal(f, keep2))
    assert marginalize(marginalize(f, keep2), keep1).allclose(marginalize(f, keep1), atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(factors(pool=(0, 1)), factors(pool=(2, 3)))
def test_marginal_of_disjoint_product(f, g):
    out = marginalize(product(f, g), f.scope)
    assert np.allclose(out.values, f.values * g.values.sum(), atol=1e-9)
