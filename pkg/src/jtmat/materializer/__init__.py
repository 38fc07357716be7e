"""Offline shortcut selection and materialization.

``build_catalog`` is the end-to-end entry point: run the single-root DP at
every internal clique, then either pack node-disjoint optima bottom-up
(``peanut``) or greedily pack all per-root candidates by benefit/cost ratio
(``peanut+``), and finally compute each chosen shortcut's table.
"""

from __future__ import annotations

from ..junction_tree import JunctionTree
from .budp import DPStateMulti, budp, reconstruct_multi
from .catalog import Catalog, dumps_catalog, load_catalog, loads_catalog, save_catalog
from .greedy import dedupe, greedy_pack
from .grid import epsilon_grid
from .lrdp import DPStateSingle, PathShortcutStats, lrdp, path_stats, reconstruct_single
from .shortcuts import (
    LogProfile,
    ShortcutPotential,
    benefit_log,
    benefit_single,
    enumerate_cut,
    make_shortcut,
    materialize_table,
    usefulness,
    with_table,
)

__all__ = [
    "Catalog", "DPStateMulti", "DPStateSingle", "LogProfile", "PathShortcutStats", "ShortcutPotential",
    "benefit_log", "benefit_single", "budp", "build_catalog", "dedupe", "dumps_catalog", "enumerate_cut",
    "epsilon_grid", "greedy_pack", "load_catalog", "loads_catalog", "lrdp", "make_shortcut",
    "materialize_table", "path_stats", "reconstruct_multi", "reconstruct_single", "run_single_roots",
    "save_catalog", "usefulness", "with_table",
]


def internal_nodes(jt: JunctionTree) -> list[int]:
    return [u for u in jt.preorder if jt.children[u]]


def run_single_roots(jt: JunctionTree, log: LogProfile, grid) -> tuple[dict[int, DPStateSingle], dict[int, dict]]:
    singles, recon = {}, {}
    for r in internal_nodes(jt):
        singles[r] = lrdp(jt, r, log, grid)
        recon[r] = reconstruct_single(jt, singles[r], log)
    return singles, recon


def all_candidates(jt: JunctionTree, recon: dict[int, dict]) -> list[ShortcutPotential]:
    """Every distinct per-root optimum, numbered in (root DFS label, grid index) order."""
    out = []
    for r in sorted(recon, key=lambda u: jt.dfs_labels[u]):
        for j in sorted(recon[r]):
            s = recon[r][j]
            if s is not None:
                out.append(s)
    return [s.with_id(i) for i, s in enumerate(dedupe(out))]


def distinct_optima(jt: JunctionTree, recon: dict[int, dict]) -> list[ShortcutPotential]:
    """Every distinct per-root optimum as the disjoint DP sees it: one per (root, antichain).

    Unlike :func:`all_candidates`, two antichains that cover the same cliques
    stay separate, since their DP objectives can differ.
    """
    out: dict[tuple, ShortcutPotential] = {}
    for r in sorted(recon, key=lambda u: jt.dfs_labels[u]):
        for j in sorted(recon[r]):
            s = recon[r][j]
            if s is not None:
                out.setdefault((r, s.cut_nodes), s)
    return list(out.values())


def fit_budget(shortcuts: list[ShortcutPotential], K: int) -> list[ShortcutPotential]:
    """Drop worst-ratio shortcuts until the true table sizes fit in ``K``.

    The disjoint DP charges each shortcut the sum of its path costs, which
    can undercount the table of a shortcut with several branches.
    """
    kept = [s for s in shortcuts if s.benefit > 0]
    while sum(s.cost for s in kept) > K:
        worst = min(kept, key=lambda s: (s.ratio, -s.cost, -s.root, [-u for u in s.nodes]))
        kept.remove(worst)
    return kept


def build_catalog(jt: JunctionTree, log, K: int, eps: float = 1.0, mode: str = "peanut",
                  materialize: bool = True) -> Catalog:
    """Select and materialize shortcuts for ``log`` (a QueryLog or a prepared LogProfile)."""
    grid = epsilon_grid(K, eps)
    profile = log if isinstance(log, LogProfile) else LogProfile.from_log(jt, log)
    info = {"grid_points": len(grid), "separator_total": jt.separator_total()}
    if mode == "none" or K == 0:
        return Catalog([], mode, K, eps, info)
    singles, recon = run_single_roots(jt, profile, grid)
    if mode == "peanut":
        state = budp(jt, singles, grid)
        chosen = reconstruct_multi(jt, state, singles, recon)
        info["dp_objective"] = state.value(jt.pivot) / profile.total if profile.total else 0.0
        chosen = fit_budget(chosen, K)
    elif mode == "peanut+":
        chosen = greedy_pack(all_candidates(jt, recon), K)
    else:
        return Catalog([], mode, K, eps, info)
    chosen = [s.with_id(i) for i, s in enumerate(chosen)]
    if materialize:
        chosen = [with_table(jt, s) for s in chosen]
    return Catalog(chosen, mode, K, eps, info)
