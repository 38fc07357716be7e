"""Discrete Bayesian networks: BIF-subset parsing, validation and the native format.

The native format is a JSON document whose ``format`` field reads
``jtmat-net v1``.  CPTs are stored as flat lists in the canonical factor
layout (ascending variable id, row-major), and floats are written with
Python's shortest round-trip repr, so ``loads_native(dumps_native(bn))``
reproduces every table bit for bit.
"""

from __future__ import annotations

import itertools
import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

import numpy as np

from .errors import InvalidInputError, ParseError, ValidationError
from .factors import DiscreteFactor, Variable, make_scope

NATIVE_FORMAT = "jtmat-net v1"
ROW_TOLERANCE = 1e-6
_VALID_ROW_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Violation:
    kind: str
    variable: str | None
    detail: str

    def __str__(self):
        who = f" [{self.variable}]" if self.variable is not None else ""
        return f"{self.kind}{who}: {self.detail}"


@dataclass
class BayesianNetwork:
    variables: list[Variable]
    parents: dict[int, tuple[int, ...]]
    cpts: dict[int, DiscreteFactor]
    name: str = "unknown"
    _by_name: dict[str, Variable] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        self._by_name = {v.name: v for v in self.variables}

    @property
    def cards(self) -> dict[int, int]:
        return {v.id: v.cardinality for v in self.variables}

    def var(self, name: str) -> Variable:
        try:
            return self._by_name[name]
        except KeyError:
            raise InvalidInputError(f"unknown variable {name!r}") from None

    def ids(self, names) -> tuple[int, ...]:
        return make_scope(self.var(n).id for n in names)

    def names(self, ids) -> list[str]:
        return [self.variables[i].name for i in ids]

    @property
    def edges(self) -> list[tuple[int, int]]:
        return [(p, child) for child, ps in sorted(self.parents.items()) for p in ps]

    def max_in_degree(self) -> int:
        return max((len(ps) for ps in self.parents.values()), default=0)

    def structurally_equal(self, other: "BayesianNetwork") -> bool:
        if self.variables != other.variables or self.parents != other.parents:
            return False
        if self.cpts.keys() != other.cpts.keys():
            return False
        return all(
            self.cpts[k].scope == other.cpts[k].scope
            and np.array_equal(self.cpts[k].values, other.cpts[k].values)
            for k in self.cpts
        )


def _cpt_rows(bn: BayesianNetwork, vid: int) -> Iterator[tuple[tuple[int, ...], np.ndarray]]:
    """Yield (parent assignment, child distribution) pairs of one CPT."""
    cpt = bn.cpts[vid]
    parents = bn.parents.get(vid, ())
    axes = [cpt.scope.index(p) for p in parents] + [cpt.scope.index(vid)]
    table = np.transpose(cpt.values, axes)
    for assignment in itertools.product(*(range(bn.variables[p].cardinality) for p in parents)):
        yield assignment, table[assignment]


def validate(bn: BayesianNetwork) -> list[Violation]:
    out: list[Violation] = []
    ids = [v.id for v in bn.variables]
    if ids != list(range(len(ids))):
        out.append(Violation("ids", None, "variable ids must be 0..n-1 in declaration order"))
        return out
    names = [v.name for v in bn.variables]
    for dup in sorted({n for n in names if names.count(n) > 1}):
        out.append(Violation("duplicate-name", dup, "declared more than once"))

    for v in bn.variables:
        ps = bn.parents.get(v.id, ())
        if any(p not in range(len(ids)) for p in ps) or len(set(ps)) != len(ps) or v.id in ps:
            out.append(Violation("parents", v.name, f"bad parent list {ps}"))
            continue
        cpt = bn.cpts.get(v.id)
        if cpt is None:
            out.append(Violation("missing-cpt", v.name, "no probability table"))
            continue
        if cpt.scope != make_scope((v.id, *ps)):
            out.append(Violation("cpt-scope", v.name, f"table scope {cpt.scope} != variable plus parents"))
            continue
        if cpt.cards != tuple(bn.variables[i].cardinality for i in cpt.scope):
            out.append(Violation("cardinality", v.name, "table shape disagrees with declared cardinalities"))
            continue
        for assignment, row in _cpt_rows(bn, v.id):
            if abs(row.sum() - 1.0) > _VALID_ROW_TOLERANCE:
                label = ", ".join(bn.variables[p].name + "=" + str(a) for p, a in zip(ps, assignment))
                out.append(Violation("row-normalization", v.name, f"row ({label}) sums to {row.sum():.12g}"))

    extra = set(bn.cpts) - set(ids)
    for vid in sorted(extra):
        out.append(Violation("orphan-cpt", None, f"table for unknown variable id {vid}"))

    # Kahn's algorithm; leftovers sit on or behind a cycle
    indeg = {v: len(set(bn.parents.get(v, ()))) for v in ids}
    children: dict[int, list[int]] = {v: [] for v in ids}
    for child, ps in bn.parents.items():
        for p in set(ps):
            if p in children:
                children[p].append(child)
    ready = [v for v in ids if indeg[v] == 0]
    seen = 0
    while ready:
        v = ready.pop()
        seen += 1
        for c in children[v]:
            indeg[c] -= 1
            if indeg[c] == 0:
                ready.append(c)
    if seen < len(ids):
        stuck = [bn.variables[v].name for v in ids if indeg[v] > 0]
        out.append(Violation("acyclicity", None, f"cycle through {', '.join(stuck)}"))
    return out


def check(bn: BayesianNetwork) -> BayesianNetwork:
    problems = validate(bn)
    if problems:
        raise ValidationError(problems)
    return bn


# ---------------------------------------------------------------- BIF subset

_TOKEN = re.compile(r"//[^\n]*|/\*.*?\*/|[{}()\[\];,|]|[^\s{}()\[\];,|]+", re.S)


@dataclass
class _Tok:
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    toks = []
    line_starts = [0] + [m.end() for m in re.finditer("\n", text)]
    for m in _TOKEN.finditer(text):
        s = m.group()
        if s.startswith("//") or s.startswith("/*"):
            continue
        pos = m.start()
        line = _bisect(line_starts, pos)
        toks.append(_Tok(s, line + 1, pos - line_starts[line] + 1))
    return toks


def _bisect(starts: list[int], pos: int) -> int:
    lo, hi = 0, len(starts) - 1
    while lo < hi:
        mid = (lo + hi + 1) // 2
        if starts[mid] <= pos:
            lo = mid
        else:
            hi = mid - 1
    return lo


class _Cursor:
    def __init__(self, toks: list[_Tok]):
        self.toks = toks
        self.i = 0

    def peek(self) -> _Tok | None:
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self) -> _Tok:
        tok = self.peek()
        if tok is None:
            last = self.toks[-1] if self.toks else _Tok("", 1, 1)
            raise ParseError("unexpected end of input", last.line, last.col)
        self.i += 1
        return tok

    def expect(self, text: str) -> _Tok:
        tok = self.next()
        if tok.text != text:
            raise ParseError(f"expected {text!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def skip_statement(self):
        while self.next().text != ";":
            pass

    def skip_block(self):
        self.expect("{")
        depth = 1
        while depth:
            t = self.next().text
            depth += {"{": 1, "}": -1}.get(t, 0)


def _number(tok: _Tok) -> float:
    try:
        return float(tok.text)
    except ValueError:
        raise ParseError(f"expected a probability, found {tok.text!r}", tok.line, tok.col) from None


def _numbers_until_semicolon(cur: _Cursor) -> list[float]:
    vals = []
    while True:
        tok = cur.next()
        if tok.text == ";":
            return vals
        if tok.text == ",":
            continue
        vals.append(_number(tok))


def parse_bif(text: str) -> BayesianNetwork:
    """Parse the discrete subset of the Bayesian Interchange Format.

    Rows that miss unit mass by at most ``ROW_TOLERANCE`` are renormalized;
    larger deviations are collected and reported together.
    """
    cur = _Cursor(_tokenize(text))
    name = "unknown"
    decls: list[tuple[str, list[str], _Tok]] = []
    probs: list[tuple[str, list[str], _Tok, list]] = []

    while cur.peek() is not None:
        tok = cur.next()
        if tok.text == "network":
            name = cur.next().text
            cur.skip_block()
        elif tok.text == "variable":
            vname = cur.next().text
            cur.expect("{")
            states = None
            while (t := cur.next()).text != "}":
                if t.text == "type":
                    kind = cur.next()
                    if kind.text != "discrete":
                        raise ParseError(f"variable {vname!r} is not discrete", kind.line, kind.col)
                    cur.expect("[")
                    n_tok = cur.next()
                    cur.expect("]")
                    cur.expect("{")
                    states = []
                    while (s := cur.next()).text != "}":
                        if s.text != ",":
                            states.append(s.text)
                    cur.expect(";")
                    if not n_tok.text.isdigit() or int(n_tok.text) != len(states):
                        raise ParseError(
                            f"variable {vname!r} declares {n_tok.text} states but lists {len(states)}",
                            n_tok.line, n_tok.col,
                        )
                elif t.text == "property":
                    cur.skip_statement()
                else:
                    raise ParseError(f"unexpected {t.text!r} in variable block", t.line, t.col)
            if states is None:
                raise ParseError(f"variable {vname!r} has no type declaration", tok.line, tok.col)
            decls.append((vname, states, tok))
        elif tok.text == "probability":
            cur.expect("(")
            child = cur.next().text
            parents: list[str] = []
            t = cur.next()
            if t.text == "|":
                while (t := cur.next()).text != ")":
                    if t.text != ",":
                        parents.append(t.text)
            elif t.text != ")":
                raise ParseError(f"expected '|' or ')', found {t.text!r}", t.line, t.col)
            cur.expect("{")
            entries: list = []
            while (t := cur.next()).text != "}":
                if t.text == "table":
                    entries.append(("table", _numbers_until_semicolon(cur), t))
                elif t.text == "default":
                    entries.append(("default", _numbers_until_semicolon(cur), t))
                elif t.text == "(":
                    labels = []
                    while (s := cur.next()).text != ")":
                        if s.text != ",":
                            labels.append(s.text)
                    entries.append(("row", (labels, _numbers_until_semicolon(cur)), t))
                elif t.text == "property":
                    cur.skip_statement()
                else:
                    raise ParseError(f"unexpected {t.text!r} in probability block", t.line, t.col)
            probs.append((child, parents, tok, entries))
        else:
            raise ParseError(f"unexpected {tok.text!r} at top level", tok.line, tok.col)

    variables = [Variable(i, n, len(st), tuple(st)) for i, (n, st, _) in enumerate(decls)]
    by_name = {v.name: v for v in variables}
    if len(by_name) != len(variables):
        dup = next(n for n, _, _ in decls if sum(d[0] == n for d in decls) > 1)
        raise ParseError(f"variable {dup!r} declared twice")

    parents_of: dict[int, tuple[int, ...]] = {}
    cpts: dict[int, DiscreteFactor] = {}
    bad_rows: list[Violation] = []
    for child, pnames, tok, entries in probs:
        for n in [child, *pnames]:
            if n not in by_name:
                raise ParseError(f"probability block refers to undeclared variable {n!r}", tok.line, tok.col)
        cv = by_name[child]
        if cv.id in cpts:
            raise ParseError(f"second probability block for {child!r}", tok.line, tok.col)
        pvars = [by_name[n] for n in pnames]
        pcards = [p.cardinality for p in pvars]
        n_rows = int(np.prod(pcards, dtype=np.int64))
        # rows indexed by parent assignment (first parent slowest), columns by child state
        table = np.full((n_rows, cv.cardinality), np.nan)
        default = None
        for kind, payload, etok in entries:
            if kind == "table":
                if len(payload) != n_rows * cv.cardinality:
                    raise ParseError(
                        f"table for {child!r} has {len(payload)} entries, expected {n_rows * cv.cardinality}",
                        etok.line, etok.col,
                    )
                # BIF tables list the child's states slowest
                table[:] = np.asarray(payload).reshape(cv.cardinality, n_rows).T
            elif kind == "default":
                if len(payload) != cv.cardinality:
                    raise ParseError(f"default row of {child!r} has wrong arity", etok.line, etok.col)
                default = payload
            else:
                labels, nums = payload
                if len(labels) != len(pvars):
                    raise ParseError(f"row of {child!r} names {len(labels)} parent states", etok.line, etok.col)
                if len(nums) != cv.cardinality:
                    raise ParseError(
                        f"row of {child!r} has {len(nums)} probabilities, expected {cv.cardinality}",
                        etok.line, etok.col,
                    )
                idx = 0
                for p, lab in zip(pvars, labels):
                    if lab not in p.states:
                        raise ParseError(f"{lab!r} is not a state of {p.name!r}", etok.line, etok.col)
                    idx = idx * p.cardinality + p.states.index(lab)
                table[idx] = nums
        missing = np.isnan(table).any(axis=1)
        if missing.any():
            if default is None:
                raise ParseError(f"probability table of {child!r} is incomplete", tok.line, tok.col)
            table[missing] = default
        sums = table.sum(axis=1)
        for r, s in enumerate(sums):
            if abs(s - 1.0) > ROW_TOLERANCE:
                bad_rows.append(Violation("row-normalization", child, f"row {r} sums to {s:.12g}"))
        if np.any(table < 0):
            bad_rows.append(Violation("negative-entry", child, "negative probability"))
            continue
        table = table / sums[:, None]
        parents_of[cv.id] = tuple(p.id for p in pvars)
        cpts[cv.id] = _cpt_from_rows(cv, pvars, table)
    if bad_rows:
        raise ValidationError(bad_rows)
    for v in variables:
        parents_of.setdefault(v.id, ())
    return check(BayesianNetwork(variables, parents_of, cpts, name))


def _cpt_from_rows(child: Variable, parents: list[Variable], rows: np.ndarray) -> DiscreteFactor:
    order = [p.id for p in parents] + [child.id]
    arr = rows.reshape([p.cardinality for p in parents] + [child.cardinality])
    scope = make_scope(order)
    arr = np.transpose(arr, [order.index(v) for v in scope])
    return DiscreteFactor(scope, arr.shape, arr)


def load_bif(path) -> BayesianNetwork:
    bn = parse_bif(Path(path).read_text())
    if bn.name == "unknown":
        bn.name = Path(path).stem
    return bn


def dumps_bif(bn: BayesianNetwork) -> str:
    out = [f"network {bn.name} {{\n}}"]
    for v in bn.variables:
        states = v.states or tuple(f"s{i}" for i in range(v.cardinality))
        out.append(f"variable {v.name} {{\n  type discrete [ {v.cardinality} ] {{ {', '.join(states)} }};\n}}")
    for v in bn.variables:
        ps = bn.parents.get(v.id, ())
        if not ps:
            row = next(_cpt_rows(bn, v.id))[1]
            out.append(f"probability ( {v.name} ) {{\n  table {', '.join(repr(float(x)) for x in row)};\n}}")
            continue
        head = f"probability ( {v.name} | {', '.join(bn.variables[p].name for p in ps)} ) {{"
        lines = [head]
        for assignment, row in _cpt_rows(bn, v.id):
            labels = [
                (bn.variables[p].states or tuple(f"s{i}" for i in range(bn.variables[p].cardinality)))[a]
                for p, a in zip(ps, assignment)
            ]
            lines.append(f"  ({', '.join(labels)}) {', '.join(repr(float(x)) for x in row)};")
        lines.append("}")
        out.append("\n".join(lines))
    return "\n".join(out) + "\n"


# ---------------------------------------------------------------- native format

def to_native(bn: BayesianNetwork) -> dict:
    return {
        "format": NATIVE_FORMAT,
        "name": bn.name,
        "variables": [
            {"name": v.name, "cardinality": v.cardinality, "states": list(v.states)} for v in bn.variables
        ],
        "cpts": [
            {
                "variable": v.name,
                "parents": bn.names(bn.parents.get(v.id, ())),
                "scope": bn.names(bn.cpts[v.id].scope),
                "values": [float(x) for x in bn.cpts[v.id].flat()],
            }
            for v in bn.variables
        ],
    }


def from_native(doc: dict) -> BayesianNetwork:
    if not isinstance(doc, dict) or doc.get("format") != NATIVE_FORMAT:
        raise ParseError(f"not a {NATIVE_FORMAT} document")
    try:
        variables = [
            Variable(i, d["name"], int(d["cardinality"]), tuple(d.get("states", ())))
            for i, d in enumerate(doc["variables"])
        ]
        ids = {v.name: v.id for v in variables}
        cards = {v.id: v.cardinality for v in variables}
        parents: dict[int, tuple[int, ...]] = {v.id: () for v in variables}
        cpts = {}
        for entry in doc["cpts"]:
            vid = ids[entry["variable"]]
            parents[vid] = tuple(ids[p] for p in entry["parents"])
            scope = tuple(ids[n] for n in entry["scope"])
            cpts[vid] = DiscreteFactor.from_flat(scope, cards, entry["values"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"malformed {NATIVE_FORMAT} document: {exc}") from exc
    return check(BayesianNetwork(variables, parents, cpts, doc.get("name", "unknown")))


def dumps_native(bn: BayesianNetwork) -> str:
    return json.dumps(to_native(bn), indent=1) + "\n"


def loads_native(text: str) -> BayesianNetwork:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.lineno, exc.colno) from exc
    return from_native(doc)


def load_network(path) -> BayesianNetwork:
    """Load a network, picking the parser from the content (native JSON or BIF)."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return loads_native(text)
    return load_bif(path)


DATA_DIR = Path(__file__).parent / "data"
BUNDLED = {"child": "child.bif", "hepar2": "hepar2.bif", "hailfinder": "hailfinder.bif", "asia": "asia.bif"}


def bundled_network(name: str) -> BayesianNetwork:
    """One of the benchmark networks shipped with the package."""
    try:
        return load_bif(DATA_DIR / BUNDLED[name.lower()])
    except KeyError:
        raise InvalidInputError(f"no bundled network {name!r}; choose from {sorted(BUNDLED)}") from None
