import math
from collections import Counter

import numpy as np
import pytest

from jtmat.errors import InvalidInputError
from jtmat.junction_tree import compile_network
from jtmat.network_io import bundled_network
from jtmat.query_engine import Query
from jtmat.workload import (
    estimate_probabilities,
    generate_skewed,
    generate_uniform,
    load_log,
    save_queries,
    split,
    variable_distances,
)


@pytest.fixture(scope="module")
def child():
    return compile_network(bundled_network("child"))


def test_probabilities_from_frequencies():
    log = estimate_probabilities([((0, 1), 3), ((2,), 1)])
    assert [e.probability for e in log.entries] == [0.75, 0.25]
    assert log.total == 4


def test_duplicates_are_merged_in_first_seen_order():
    log = estimate_probabilities([Query((2,)), Query((1, 0)), Query((0, 1), 2), Query((2,))])
    assert [e.query.variables for e in log.entries] == [(2,), (0, 1)]
    assert [e.frequency for e in log.entries] == [2, 3]
    assert sum(e.probability for e in log.entries) == pytest.approx(1.0)


def test_empty_or_bad_log_is_rejected():
    with pytest.raises(InvalidInputError):
        estimate_probabilities([])
    with pytest.raises(InvalidInputError):
        estimate_probabilities([((0,), 0)])


def test_generation_is_deterministic(child):
    a = generate_skewed(child, 200, seed=7)
    assert a == generate_skewed(child, 200, seed=7)
    assert a != generate_skewed(child, 200, seed=8)
    assert generate_uniform(child, 50, seed=1) == generate_uniform(child, 50, seed=1)


def test_sizes_stay_in_range(child):
    for q in generate_uniform(child, 500, (2, 4), seed=3):
        assert 2 <= len(q.variables) <= 4
        assert len(set(q.variables)) == len(q.variables)
    with pytest.raises(InvalidInputError):
        generate_uniform(child, 5, (3, 2))
    with pytest.raises(InvalidInputError):
        generate_uniform(child, 5, (1, 999))


def _chi2_critical(df, z=3.09):
    # Wilson-Hilferty approximation of the upper 0.999 quantile
    return df * (1 - 2 / (9 * df) + z * math.sqrt(2 / (9 * df))) ** 3


@pytest.mark.parametrize("kind", ["skewed", "uniform"])
def test_variable_frequencies_follow_weights(child, kind):
    n = 100_000
    gen = generate_skewed if kind == "skewed" else generate_uniform
    counts = Counter(q.variables[0] for q in gen(child, n, (1, 1), seed=11))
    dist = variable_distances(child)
    w = np.array([1.0 + dist[v.id] if kind == "skewed" else 1.0 for v in child.variables])
    expected = n * w / w.sum()
    observed = np.array([counts.get(v.id, 0) for v in child.variables])
    chi2 = float(((observed - expected) ** 2 / expected).sum())
    assert chi2 < _chi2_critical(len(w) - 1)


def test_skew_prefers_distant_variables(child):
    dist = variable_distances(child)
    counts = Counter(v for q in generate_skewed(child, 20_000, (1, 1), seed=4) for v in q.variables)
    near = [v for v, d in dist.items() if d == min(dist.values())]
    far = [v for v, d in dist.items() if d == max(dist.values())]
    assert np.mean([counts[v] for v in far]) > np.mean([counts[v] for v in near])


def test_split_keeps_order(child):
    qs = generate_skewed(child, 3000, seed=0)
    train, test = split(qs, 2000)
    assert len(train) == 2000 and len(test) == 1000
    assert train + test == qs
    with pytest.raises(InvalidInputError):
        split(qs, 3001)


def test_save_and_load_log(child, tmp_path):
    qs = generate_skewed(child, 100, seed=2)
    path = tmp_path / "log.txt"
    save_queries(child, qs, path)
    log = load_log(child, path)
    assert log.total == 100
    assert log == estimate_probabilities(qs)
