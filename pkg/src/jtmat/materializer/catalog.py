"""Materialized shortcut catalogs and their ``jtmat-cat v1`` file format."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from ..errors import InvalidInputError, ParseError
from ..factors import DiscreteFactor
from ..junction_tree import JunctionTree
from .shortcuts import ShortcutPotential, enumerate_cut, subtree_root

CATALOG_FORMAT = "jtmat-cat v1"
MODES = ("peanut", "peanut+", "none")


@dataclass
class Catalog:
    shortcuts: list[ShortcutPotential]
    mode: str
    target_budget: int
    epsilon: float = 1.0
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.mode not in MODES:
            raise InvalidInputError(f"unknown mode {self.mode!r}")

    @property
    def actual_budget(self) -> int:
        return sum(s.cost for s in self.shortcuts)

    @property
    def disjoint(self) -> bool:
        seen: set[int] = set()
        for s in self.shortcuts:
            if seen & s.node_set:
                return False
            seen |= s.node_set
        return True

    def total_benefit(self) -> float:
        return sum(s.benefit for s in self.shortcuts)


def to_document(cat: Catalog) -> dict:
    return {
        "format": CATALOG_FORMAT,
        "mode": cat.mode,
        "target_budget": cat.target_budget,
        "actual_budget": cat.actual_budget,
        "epsilon": cat.epsilon,
        "info": cat.info,
        "shortcuts": [
            {
                "id": s.id,
                "root": s.root,
                "nodes": list(s.nodes),
                "cut": [list(e) for e in s.cut],
                "scope": list(s.scope),
                "cost": s.cost,
                "benefit": s.benefit,
                "dp_value": s.dp_value,
                "dp_cost": s.dp_cost,
                "table": None if s.table is None else [float(x) for x in s.table.flat()],
            }
            for s in cat.shortcuts
        ],
    }


def from_document(doc: dict, jt: JunctionTree | None = None) -> Catalog:
    """Parse a catalog; with ``jt`` the stored cut, scope and cost are checked against the tree."""
    if not isinstance(doc, dict) or doc.get("format") != CATALOG_FORMAT:
        raise ParseError(f"not a {CATALOG_FORMAT} document")
    try:
        shortcuts = []
        for d in doc["shortcuts"]:
            scope = tuple(d["scope"])
            table = None
            if d.get("table") is not None:
                if jt is None:
                    raise ParseError("a tree is needed to read shortcut tables")
                table = DiscreteFactor.from_flat(scope, jt.cards, d["table"])
            s = ShortcutPotential(
                int(d["id"]), int(d["root"]), tuple(d["nodes"]), tuple(tuple(e) for e in d["cut"]), scope,
                int(d["cost"]), float(d["benefit"]), float(d["dp_value"]), int(d.get("dp_cost", 0)), table=table,
            )
            if jt is not None:
                cut, sc, cost = enumerate_cut(jt, s.nodes)
                if (cut, sc, cost) != (s.cut, s.scope, s.cost) or subtree_root(jt, s.nodes) != s.root:
                    raise ParseError(f"shortcut {s.id} does not match the tree")
            shortcuts.append(s)
        cat = Catalog(shortcuts, doc["mode"], int(doc["target_budget"]), float(doc.get("epsilon", 1.0)),
                      dict(doc.get("info", {})))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ParseError):
            raise
        raise ParseError(f"malformed {CATALOG_FORMAT} document: {exc}") from exc
    return cat


def dumps_catalog(cat: Catalog) -> str:
    return json.dumps(to_document(cat), indent=1) + "\n"


def loads_catalog(text: str, jt: JunctionTree | None = None) -> Catalog:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    return from_document(doc, jt)


def load_catalog(path, jt: JunctionTree | None = None) -> Catalog:
    return loads_catalog(Path(path).read_text(), jt)


def save_catalog(cat: Catalog, path) -> None:
    Path(path).write_text(dumps_catalog(cat))
