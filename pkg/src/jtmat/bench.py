"""Experiment harness: savings reports, robustness mixes, log-size sweeps, cost/time correlation.

All CSV output is deterministic for fixed inputs; wall-clock numbers are
returned to the caller (and printed by the CLI) but never written to CSV.
"""

from __future__ import annotations

import csv
import io
import statistics
import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import InternalError, InvalidInputError
from .junction_tree import JunctionTree
from .materializer import Catalog, LogProfile, build_catalog
from .query_engine import Query, QueryProfile, answer, message_passing, steiner_tree
from .workload import estimate_probabilities

ANSWER_TOL = 1e-9


def resolve_budget(jt: JunctionTree, budget: int | None = None, budget_bt: float | None = None) -> int:
    """Absolute budget in table entries, from either an absolute value or a multiple of the separator total."""
    if (budget is None) == (budget_bt is None):
        raise InvalidInputError("give exactly one of an absolute budget or a separator-total multiple")
    k = int(budget) if budget is not None else int(budget_bt * jt.separator_total())
    if k < 0:
        raise InvalidInputError("budget must be non-negative")
    return k


@dataclass(frozen=True)
class ExperimentConfig:
    network: str
    workload_kind: str = "skewed"
    n_queries: int = 3000
    n_train: int = 2000
    seed: int = 0
    budget: int | None = None
    budget_bt: float | None = None
    epsilon: float = 1.0
    mode: str = "peanut"
    out: str | None = None

    def __post_init__(self):
        if self.epsilon < 1:
            raise InvalidInputError("epsilon must be >= 1")
        if self.mode not in ("peanut", "peanut+", "none"):
            raise InvalidInputError(f"unknown mode {self.mode!r}")
        if self.workload_kind not in ("skewed", "uniform"):
            raise InvalidInputError(f"unknown workload kind {self.workload_kind!r}")


@dataclass
class QueryRecord:
    index: int
    query: str
    weight: int
    baseline_cost: int
    materialized_cost: int
    shortcuts_used: list[int]
    steiner_diameter: int

    @property
    def savings_pct(self) -> float:
        return 100.0 * (self.baseline_cost - self.materialized_cost) / self.baseline_cost


@dataclass
class SavingsReport:
    records: list[QueryRecord]
    target_budget: int
    actual_budget: int
    separator_total: int
    mode: str
    offline_seconds: float | None = field(default=None, compare=False)

    def mean_savings(self) -> float:
        return statistics.fmean(r.savings_pct for r in self.records) if self.records else 0.0

    def median_savings(self) -> float:
        return statistics.median(r.savings_pct for r in self.records) if self.records else 0.0

    def by_diameter(self) -> dict[int, list[QueryRecord]]:
        out: dict[int, list[QueryRecord]] = {}
        for r in self.records:
            out.setdefault(r.steiner_diameter, []).append(r)
        return dict(sorted(out.items()))

    def aggregates(self) -> list[tuple[str, str, str]]:
        rows = [
            ("queries", "all", str(len(self.records))),
            ("mode", "all", self.mode),
            ("mean_savings_pct", "all", _fmt(self.mean_savings())),
            ("median_savings_pct", "all", _fmt(self.median_savings())),
            ("mean_baseline_cost", "all", _fmt(_mean(r.baseline_cost for r in self.records))),
            ("mean_materialized_cost", "all", _fmt(_mean(r.materialized_cost for r in self.records))),
            ("target_budget", "all", str(self.target_budget)),
            ("actual_budget", "all", str(self.actual_budget)),
            ("separator_total", "all", str(self.separator_total)),
        ]
        for d, recs in self.by_diameter().items():
            rows.append(("queries", f"diameter={d}", str(len(recs))))
            rows.append(("mean_savings_pct", f"diameter={d}", _fmt(statistics.fmean(r.savings_pct for r in recs))))
        return rows

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "query", "weight", "baseline_cost", "materialized_cost", "savings_pct",
                    "shortcuts_used", "steiner_diameter"])
        for r in self.records:
            w.writerow([r.index, r.query, r.weight, r.baseline_cost, r.materialized_cost, _fmt(r.savings_pct),
                        " ".join(str(i) for i in r.shortcuts_used), r.steiner_diameter])
        buf.write("\n")
        w.writerow(["metric", "group", "value"])
        w.writerows(self.aggregates())
        return buf.getvalue()


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def _mean(xs) -> float:
    xs = list(xs)
    return statistics.fmean(xs) if xs else 0.0


def run_bench(jt: JunctionTree, catalog: Catalog | None, queries: Sequence[Query], check: bool = True) -> SavingsReport:
    """Answer every query with and without the catalog and record both costs."""
    records = []
    for i, q in enumerate(queries):
        base = answer(jt, q)
        mat = answer(jt, q, catalog) if catalog is not None else base
        if mat.cost > base.cost:
            raise InternalError(f"query {i}: shortcuts raised the cost from {base.cost} to {mat.cost}")
        if check and not np.allclose(base.answer.values, mat.answer.values, rtol=0.0, atol=ANSWER_TOL):
            raise InternalError(f"query {i}: answer changed under materialization")
        records.append(QueryRecord(
            i, ",".join(jt.var_names(q.variables)), q.weight, base.cost, mat.cost,
            list(mat.shortcuts_used), steiner_tree(jt, q).diameter(),
        ))
    cat = catalog or Catalog([], "none", 0)
    return SavingsReport(records, cat.target_budget, cat.actual_budget, jt.separator_total(), cat.mode)


def mean_cost(jt: JunctionTree, catalog: Catalog | None, queries: Sequence[Query]) -> float:
    return _mean(answer(jt, q, catalog).cost for q in queries)


def mix(a: Sequence[Query], b: Sequence[Query], lam: float) -> list[Query]:
    """``round(lam * n)`` queries from ``a`` followed by the rest from ``b`` (n = min length)."""
    if not 0.0 <= lam <= 1.0:
        raise InvalidInputError("lambda must lie in [0, 1]")
    n = min(len(a), len(b))
    k = int(round(lam * n))
    return list(a[:k]) + list(b[: n - k])


def robustness(jt: JunctionTree, catalogs: dict[str, Catalog | None], first: Sequence[Query],
               second: Sequence[Query], lambdas: Sequence[float]) -> list[tuple[float, str, float]]:
    """Average cost per method on mixtures of two test workloads."""
    rows = []
    for lam in lambdas:
        qs = mix(first, second, lam)
        for name, cat in catalogs.items():
            rows.append((float(lam), name, mean_cost(jt, cat, qs)))
    return rows


def robustness_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["lambda", "method", "mean_cost"])
    for lam, name, c in rows:
        w.writerow([f"{lam:g}", name, _fmt(c)])
    return buf.getvalue()


def log_size_sweep(jt: JunctionTree, train: Sequence[Query], test: Sequence[Query], sizes: Sequence[int],
                   K: int, eps: float = 1.0, mode: str = "peanut") -> list[tuple[int, float]]:
    """Mean savings on ``test`` when the catalog is built from the first ``s`` training queries."""
    out = []
    for s in sizes:
        cat = build_catalog(jt, estimate_probabilities(train[:s]), K, eps, mode)
        out.append((s, run_bench(jt, cat, test, check=False).mean_savings()))
    return out


def timed_build(jt: JunctionTree, log, K: int, eps: float, mode: str) -> tuple[Catalog, float]:
    start = time.perf_counter()
    profile = LogProfile.from_log(jt, log)
    cat = build_catalog(jt, profile, K, eps, mode)
    return cat, time.perf_counter() - start


def cost_time_correlation(jt: JunctionTree, queries: Sequence[Query], repeats: int = 5) -> tuple[float, list[tuple[int, float]]]:
    """Pearson correlation between the cost model and measured message-passing time (best of ``repeats``)."""
    pairs = []
    for q in queries:
        st = QueryProfile(jt, q).st
        best = float("inf")
        for _ in range(repeats):
            t0 = time.perf_counter()
            res = message_passing(st)
            best = min(best, time.perf_counter() - t0)
        pairs.append((res.cost, best))
    costs = np.array([c for c, _ in pairs], dtype=float)
    times = np.array([t for _, t in pairs])
    if costs.std() == 0 or times.std() == 0:
        return float("nan"), pairs
    return float(np.corrcoef(costs, times)[0, 1]), pairs
