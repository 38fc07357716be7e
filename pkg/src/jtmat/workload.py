"""Query logs and synthetic workload generators."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError
from .junction_tree import JunctionTree, _bfs_dist
from .query_engine import Query, format_query_lines, load_queries

DEFAULT_SIZES = (1, 5)


@dataclass(frozen=True)
class LogEntry:
    query: Query
    frequency: int
    probability: float


@dataclass(frozen=True)
class QueryLog:
    entries: tuple[LogEntry, ...]

    @property
    def total(self) -> int:
        return sum(e.frequency for e in self.entries)

    def __len__(self) -> int:
        return len(self.entries)


def estimate_probabilities(entries: Iterable) -> QueryLog:
    """Merge duplicates and turn frequencies into probabilities.

    ``entries`` holds Query objects (their weight is the frequency) or
    (query, frequency) pairs.  Merged queries keep first-appearance order.
    """
    freq: dict[tuple[int, ...], int] = {}
    for e in entries:
        if isinstance(e, Query):
            q, f = e.variables, e.weight
        else:
            q, f = e
            q = q.variables if isinstance(q, Query) else Query(tuple(q)).variables
        if f < 1:
            raise InvalidInputError("frequencies must be >= 1")
        freq[q] = freq.get(q, 0) + int(f)
    if not freq:
        raise InvalidInputError("a query log needs at least one query")
    total = sum(freq.values())
    return QueryLog(tuple(LogEntry(Query(q, f), f, f / total) for q, f in freq.items()))


def variable_distances(jt: JunctionTree) -> dict[int, int]:
    """Tree distance from each variable's home clique to the pivot."""
    dist = _bfs_dist(jt.adjacency, jt.pivot)
    return {v.id: dist[jt.home[v.id]] for v in jt.variables}


def _generate(jt: JunctionTree, n: int, weights: np.ndarray, size_range: Sequence[int], seed: int) -> list[Query]:
    lo, hi = int(size_range[0]), int(size_range[1])
    nvars = len(jt.variables)
    if n < 1:
        raise InvalidInputError("need at least one query")
    if not 1 <= lo <= hi:
        raise InvalidInputError(f"bad size range {size_range}")
    if hi > nvars:
        raise InvalidInputError(f"query size {hi} exceeds the {nvars} variables available")
    rng = np.random.default_rng(seed)
    p = weights / weights.sum()
    out = []
    for _ in range(n):
        k = int(rng.integers(lo, hi + 1))
        picked = rng.choice(nvars, size=k, replace=False, p=p)
        out.append(Query(tuple(int(x) for x in picked)))
    return out


def generate_skewed(jt: JunctionTree, n: int, size_range: Sequence[int] = DEFAULT_SIZES, seed: int = 0) -> list[Query]:
    """Variables drawn with weight 1 + distance of their home clique from the pivot."""
    dist = variable_distances(jt)
    weights = np.array([1.0 + dist[v.id] for v in jt.variables])
    return _generate(jt, n, weights, size_range, seed)


def generate_uniform(jt: JunctionTree, n: int, size_range: Sequence[int] = DEFAULT_SIZES, seed: int = 0) -> list[Query]:
    return _generate(jt, n, np.ones(len(jt.variables)), size_range, seed)


def split(queries: Sequence[Query], n_train: int) -> tuple[list[Query], list[Query]]:
    """First ``n_train`` queries (in generation order) for training, the rest for testing."""
    if not 0 <= n_train <= len(queries):
        raise InvalidInputError("training size out of range")
    return list(queries[:n_train]), list(queries[n_train:])


def format_queries(jt: JunctionTree, queries: Iterable[Query]) -> str:
    return format_query_lines((jt.var_names(q.variables), q.weight) for q in queries)


def save_queries(jt: JunctionTree, queries: Iterable[Query], path) -> None:
    Path(path).write_text(format_queries(jt, queries))


def load_log(jt: JunctionTree, path) -> QueryLog:
    return estimate_probabilities(load_queries(jt, path))
