"""Ratio-greedy packing of possibly overlapping shortcuts."""

from __future__ import annotations

from typing import Iterable

from .shortcuts import ShortcutPotential


def dedupe(candidates: Iterable[ShortcutPotential]) -> list[ShortcutPotential]:
    """Keep the first shortcut of every distinct cut (identical cuts mean identical clique sets)."""
    seen: set[tuple] = set()
    out = []
    for s in candidates:
        key = (s.cut, s.nodes)
        if key not in seen:
            seen.add(key)
            out.append(s)
    return out


def greedy_pack(candidates: Iterable[ShortcutPotential], K: int) -> list[ShortcutPotential]:
    """Scan by benefit/cost ratio (then lower cost, then lower id) and keep whatever still fits.

    Zero-benefit candidates are never taken.
    """
    pool = [s for s in dedupe(candidates) if s.benefit > 0]
    pool.sort(key=lambda s: (-s.ratio, s.cost, s.id))
    left = K
    picked = []
    for s in pool:
        if s.cost <= left:
            picked.append(s)
            left -= s.cost
    return picked
