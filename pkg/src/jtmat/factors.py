"""Dense discrete factors.

A factor is a non-negative table over a *scope*, a tuple of integer variable
ids kept in ascending order.  ``values`` is a numpy array whose axis ``i``
belongs to ``scope[i]``; flattened in C (row-major) order, the last variable
of the scope varies fastest.  That flat order is what every serializer in the
package writes, so equal factors always serialize to identical bytes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import InvalidInputError, NumericalDomainError

Scope = tuple[int, ...]


@dataclass(frozen=True)
class Variable:
    id: int
    name: str
    cardinality: int
    states: tuple[str, ...] = ()

    def __post_init__(self):
        if self.cardinality < 1:
            raise InvalidInputError(f"variable {self.name!r}: cardinality must be >= 1")
        if self.states and len(self.states) != self.cardinality:
            raise InvalidInputError(
                f"variable {self.name!r}: {len(self.states)} state names for cardinality {self.cardinality}"
            )


def make_scope(ids: Iterable[int]) -> Scope:
    """Canonical scope: sorted and duplicate-free."""
    return tuple(sorted(set(ids)))


def table_size(scope: Iterable[int], cards: Mapping[int, int]) -> int:
    size = 1
    for v in scope:
        try:
            size *= cards[v]
        except KeyError:
            raise InvalidInputError(f"no cardinality known for variable {v}") from None
    return size


@dataclass(frozen=True, eq=False)
class DiscreteFactor:
    scope: Scope
    cards: tuple[int, ...]
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        scope = tuple(int(v) for v in self.scope)
        if list(scope) != sorted(set(scope)):
            raise InvalidInputError(f"scope {scope} must be strictly ascending")
        cards = tuple(int(c) for c in self.cards)
        if len(cards) != len(scope) or any(c < 1 for c in cards):
            raise InvalidInputError(f"cards {cards} do not match scope {scope}")
        values = np.asarray(self.values, dtype=np.float64)
        if values.size != int(np.prod(cards, dtype=np.int64)):
            raise InvalidInputError(
                f"factor over {scope} needs {int(np.prod(cards))} entries, got {values.size}"
            )
        values = values.reshape(cards)
        if not np.all(np.isfinite(values)) or np.any(values < 0):
            raise InvalidInputError("factor entries must be finite and non-negative")
        if values.flags.writeable:
            values = values.copy()
            values.flags.writeable = False
        object.__setattr__(self, "scope", scope)
        object.__setattr__(self, "cards", cards)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_flat(cls, scope: Sequence[int], cards: Mapping[int, int], flat) -> "DiscreteFactor":
        scope = tuple(scope)
        return cls(scope, tuple(cards[v] for v in scope), np.asarray(flat, dtype=np.float64))

    @classmethod
    def ones(cls, scope: Iterable[int], cards: Mapping[int, int]) -> "DiscreteFactor":
        scope = make_scope(scope)
        shape = tuple(cards[v] for v in scope)
        return cls(scope, shape, np.ones(shape))

    @property
    def size(self) -> int:
        return self.values.size

    @property
    def card_map(self) -> dict[int, int]:
        return dict(zip(self.scope, self.cards))

    def flat(self) -> np.ndarray:
        return self.values.reshape(-1)

    def total(self) -> float:
        return float(self.values.sum())

    def allclose(self, other: "DiscreteFactor", atol: float = 1e-12) -> bool:
        return (
            self.scope == other.scope
            and self.cards == other.cards
            and bool(np.allclose(self.values, other.values, rtol=0.0, atol=atol))
        )

    def __mul__(self, other: "DiscreteFactor") -> "DiscreteFactor":
        return product(self, other)

    def __repr__(self) -> str:
        return f"DiscreteFactor(scope={self.scope}, cards={self.cards})"


def _merged_cards(factors: Sequence[DiscreteFactor]) -> dict[int, int]:
    cards: dict[int, int] = {}
    for f in factors:
        for v, c in zip(f.scope, f.cards):
            if cards.setdefault(v, c) != c:
                raise InvalidInputError(
                    f"variable {v} has cardinality {cards[v]} in one factor and {c} in another"
                )
    return cards


def _expand(f: DiscreteFactor, scope: Scope) -> np.ndarray:
    # both scopes are sorted, so f's axes already appear in the target order
    own = set(f.scope)
    shape = [f.cards[f.scope.index(v)] if v in own else 1 for v in scope]
    return f.values.reshape(shape)


def product(f: DiscreteFactor, g: DiscreteFactor) -> DiscreteFactor:
    cards = _merged_cards([f, g])
    scope = make_scope(cards)
    values = _expand(f, scope) * _expand(g, scope)
    return DiscreteFactor(scope, tuple(cards[v] for v in scope), values)


def product_all(factors: Sequence[DiscreteFactor]) -> DiscreteFactor:
    """Product of several factors (unit scalar for an empty list)."""
    if not factors:
        return DiscreteFactor((), (), np.ones(()))
    return reduce(product, factors)


def marginalize(f: DiscreteFactor, keep: Iterable[int]) -> DiscreteFactor:
    keep = make_scope(keep)
    missing = set(keep) - set(f.scope)
    if missing:
        raise InvalidInputError(f"cannot keep {sorted(missing)}: not in factor scope {f.scope}")
    drop = tuple(i for i, v in enumerate(f.scope) if v not in keep)
    values = f.values.sum(axis=drop) if drop else f.values
    return DiscreteFactor(keep, tuple(f.cards[f.scope.index(v)] for v in keep), values)


def divide(f: DiscreteFactor, g: DiscreteFactor) -> DiscreteFactor:
    """Entrywise f / g with g's scope inside f's; 0/0 is taken as 0."""
    if not set(g.scope) <= set(f.scope):
        raise InvalidInputError(f"divisor scope {g.scope} is not inside {f.scope}")
    _merged_cards([f, g])
    denom = np.broadcast_to(_expand(g, f.scope), f.values.shape)
    zero = denom == 0
    if np.any(f.values[zero] > 0):
        raise NumericalDomainError("division of a positive entry by zero")
    with np.errstate(divide="ignore", invalid="ignore"):
        values = np.where(zero, 0.0, f.values / np.where(zero, 1.0, denom))
    return DiscreteFactor(f.scope, f.cards, values)


def normalize(f: DiscreteFactor) -> DiscreteFactor:
    total = f.values.sum()
    if not total > 0:
        raise NumericalDomainError(f"cannot normalize factor over {f.scope}: total mass is {total}")
    return DiscreteFactor(f.scope, f.cards, f.values / total)
