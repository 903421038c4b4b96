"""Exact probability tables over observed outcomes, optionally conditioned on inputs."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import CardinalityMismatch, UnknownParty

NORMALIZATION_TOL = 1e-10
NEGATIVITY_TOL = 1e-12

EventValue = int | Sequence[int]


def _as_values(value: EventValue, card: int) -> list[int]:
    values = [int(value)] if np.isscalar(value) else [int(v) for v in value]
    for v in values:
        if not 0 <= v < card:
            raise CardinalityMismatch(f"outcome {v} outside alphabet of size {card}")
    return values


@dataclass(frozen=True, eq=False)
class Behavior:
    """Joint table ``P(parties | conditions)``.

    ``table`` has one axis per party (in order) followed by one axis per
    conditioning variable. For every assignment of the conditions the party
    axes sum to one.
    """

    parties: tuple[str, ...]
    cards: tuple[int, ...]
    table: np.ndarray
    conditions: tuple[str, ...] = ()
    condition_cards: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "parties", tuple(self.parties))
        object.__setattr__(self, "cards", tuple(int(c) for c in self.cards))
        object.__setattr__(self, "conditions", tuple(self.conditions))
        object.__setattr__(self, "condition_cards", tuple(int(c) for c in self.condition_cards))
        table = np.array(self.table, dtype=float)
        expected = self.cards + self.condition_cards
        if table.shape != expected:
            raise CardinalityMismatch(f"table shape {table.shape} does not match cards {expected}")
        names = self.parties + self.conditions
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate variable names in {names}")
        if table.size and table.min() < -NEGATIVITY_TOL:
            raise ValueError(f"negative probability {table.min():.3e}")
        sums = table.sum(axis=tuple(range(len(self.parties))))
        if not np.allclose(sums, 1.0, rtol=0.0, atol=NORMALIZATION_TOL):
            worst = float(np.max(np.abs(sums - 1.0)))
            raise ValueError(f"table not normalized (max deviation {worst:.3e})")
        table.setflags(write=False)
        object.__setattr__(self, "table", table)

    # -- lookups -----------------------------------------------------------

    def axis(self, name: str) -> int:
        names = self.parties + self.conditions
        try:
            return names.index(name)
        except ValueError:
            raise UnknownParty(name) from None

    def card(self, name: str) -> int:
        return (self.cards + self.condition_cards)[self.axis(name)]

    def marginal(self, parties: Sequence[str]) -> "Behavior":
        """Marginal over ``parties`` (in the given order); conditions are kept."""
        parties = tuple(parties)
        keep = [self.axis(p) for p in parties]
        if any(k >= len(self.parties) for k in keep):
            raise UnknownParty(f"{parties} includes a conditioning variable")
        drop = tuple(i for i in range(len(self.parties)) if i not in keep)
        reduced = self.table.sum(axis=drop)
        remaining = [i for i in range(len(self.parties)) if i not in drop]
        order = [remaining.index(k) for k in keep]
        order += list(range(len(remaining), reduced.ndim))
        return Behavior(
            parties,
            tuple(self.cards[k] for k in keep),
            np.transpose(reduced, order),
            self.conditions,
            self.condition_cards,
        )

    def prob(self, event: Mapping[str, EventValue]) -> float:
        """Probability of ``event``; parties missing from it are summed over.

        Conditioning variables must be pinned to a single value when the
        behavior has any.
        """
        index: list = [slice(None)] * self.table.ndim
        for name, value in event.items():
            ax = self.axis(name)
            values = _as_values(value, self.card(name))
            if ax >= len(self.parties) and len(values) != 1:
                raise ValueError(f"conditioning variable {name!r} needs a single value")
            index[ax] = values
        for ax in range(len(self.parties), self.table.ndim):
            if isinstance(index[ax], slice):
                raise ValueError(f"conditioning variable {self.conditions[ax - len(self.parties)]!r} not fixed")
        sub = self.table
        # fancy-index one axis at a time so value lists combine as a product
        for ax, sel in enumerate(index):
            if not isinstance(sel, slice):
                sub = np.take(sub, sel, axis=ax)
        return float(sub.sum())

    # -- transformations ---------------------------------------------------

    def reorder(self, parties: Sequence[str]) -> "Behavior":
        if sorted(parties) != sorted(self.parties):
            raise UnknownParty(f"{parties} is not a permutation of {self.parties}")
        return self.marginal(parties)

    def rename(self, mapping: Mapping[str, str]) -> "Behavior":
        return Behavior(
            tuple(mapping.get(p, p) for p in self.parties),
            self.cards,
            self.table,
            tuple(mapping.get(c, c) for c in self.conditions),
            self.condition_cards,
        )

    def permute_outcomes(self, perms: Mapping[str, Sequence[int]]) -> "Behavior":
        """Relabel outcomes: new label ``perm[k]`` carries the mass of old label ``k``."""
        table = np.array(self.table)
        for name, perm in perms.items():
            ax = self.axis(name)
            inverse = np.argsort(np.asarray(perm))
            table = np.take(table, inverse, axis=ax)
        return Behavior(self.parties, self.cards, table, self.conditions, self.condition_cards)

    def allclose(self, other: "Behavior", atol: float = 1e-10) -> bool:
        if self.parties != other.parties or self.conditions != other.conditions:
            return False
        if self.table.shape != other.table.shape:
            return False
        return bool(np.max(np.abs(self.table - other.table), initial=0.0) <= atol)

    def max_abs_diff(self, other: "Behavior") -> float:
        aligned = other.reorder(self.parties) if set(other.parties) == set(self.parties) else other
        return float(np.max(np.abs(self.table - aligned.table), initial=0.0))

    # -- serialization -----------------------------------------------------

    def rows(self) -> Iterator[tuple[tuple[int, ...], float]]:
        for idx in product(*(range(c) for c in self.cards + self.condition_cards)):
            yield idx, float(self.table[idx])

    def to_csv(self, fh: io.TextIOBase | None = None) -> str:
        """Write ``a,b,c,...,p`` rows; returns the text when ``fh`` is None."""
        buf = io.StringIO() if fh is None else fh
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow([n.lower() for n in self.parties + self.conditions] + ["p"])
        for idx, p in self.rows():
            writer.writerow(list(idx) + [format(p, ".17g")])
        return buf.getvalue() if fh is None else ""

    @classmethod
    def from_csv(
        cls, text: str, cards: Sequence[int], n_conditions: int = 0, names: Sequence[str] | None = None
    ) -> "Behavior":
        reader = csv.reader(io.StringIO(text))
        header = next(reader)
        cols = header[:-1]
        table = np.zeros(tuple(cards))
        for row in reader:
            if not row:
                continue
            idx = tuple(int(v) for v in row[:-1])
            table[idx] = float(row[-1])
        names = list(names) if names is not None else cols
        n_parties = len(cols) - n_conditions
        return cls(
            tuple(names[:n_parties]),
            tuple(cards[:n_parties]),
            table,
            tuple(names[n_parties:]),
            tuple(cards[n_parties:]),
        )

    def to_json(self) -> dict:
        return {
            "parties": list(self.parties),
            "cards": list(self.cards),
            "conditions": list(self.conditions),
            "condition_cards": list(self.condition_cards),
            "table": self.table.tolist(),
        }

    @classmethod
    def from_json(cls, data: Mapping) -> "Behavior":
        return cls(
            tuple(data["parties"]),
            tuple(data["cards"]),
            np.asarray(data["table"], dtype=float),
            tuple(data.get("conditions", ())),
            tuple(data.get("condition_cards", ())),
        )


def uniform_behavior(parties: Iterable[str], cards: Iterable[int]) -> Behavior:
    parties, cards = tuple(parties), tuple(cards)
    return Behavior(parties, cards, np.full(cards, 1.0 / float(np.prod(cards))))


def product_behavior(*factors: Behavior) -> Behavior:
    """Independent joint of unconditioned behaviors."""
    table = np.ones(())
    parties: tuple[str, ...] = ()
    cards: tuple[int, ...] = ()
    for f in factors:
        if f.conditions:
            raise ValueError("product_behavior only accepts unconditioned behaviors")
        table = np.multiply.outer(table, f.table)
        parties += f.parties
        cards += f.cards
    return Behavior(parties, cards, table)
