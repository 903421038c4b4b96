"""Polynomial witnesses over probability atoms of named behaviors."""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

from ..behavior import Behavior
from ..errors import UnknownAtomReference
from .lp import LinearProgram
from .solver import FeasibilityVerdict

COEF_TOL = 1e-12


@dataclass(frozen=True, order=True)
class Atom:
    """``P_table(event)``; an event value may be a set of outcomes, which is summed over."""

    table: str
    event: tuple[tuple[str, tuple[int, ...]], ...]

    @classmethod
    def of(cls, table: str, event: Mapping[str, int | Sequence[int]]) -> "Atom":
        items = []
        for party, value in event.items():
            values = (int(value),) if np.isscalar(value) else tuple(sorted(int(v) for v in value))
            items.append((str(party), values))
        return cls(str(table), tuple(sorted(items)))

    def to_json(self) -> dict:
        return {
            "table": self.table,
            "event": {p: (v[0] if len(v) == 1 else list(v)) for p, v in self.event},
        }


@dataclass(frozen=True)
class Term:
    coef: float
    atoms: tuple[Atom, ...]


def _resolve_party(behavior: Behavior, name: str, table: str) -> str:
    if name in behavior.parties:
        return name
    matches = [p for p in behavior.parties if p.lower() == name.lower()]
    if len(matches) == 1:
        return matches[0]
    raise UnknownAtomReference(f"table {table!r} has no party {name!r}")


@dataclass(frozen=True, eq=False)
class WitnessPolynomial:
    terms: tuple[Term, ...]

    def __post_init__(self) -> None:
        merged: dict[tuple[Atom, ...], float] = {}
        for t in self.terms:
            key = tuple(sorted(t.atoms))
            merged[key] = merged.get(key, 0.0) + float(t.coef)
        kept = tuple(Term(c, k) for k, c in merged.items() if abs(c) >= COEF_TOL)
        object.__setattr__(self, "terms", kept)

    @classmethod
    def from_terms(cls, terms: Iterable[tuple[float, Iterable[tuple[str, Mapping]]]]) -> "WitnessPolynomial":
        return cls(tuple(Term(c, tuple(Atom.of(t, e) for t, e in atoms)) for c, atoms in terms))

    @property
    def tables(self) -> set[str]:
        return {a.table for t in self.terms for a in t.atoms}

    def scaled(self, factor: float) -> "WitnessPolynomial":
        return WitnessPolynomial(tuple(Term(t.coef * factor, t.atoms) for t in self.terms))

    def __add__(self, other: "WitnessPolynomial") -> "WitnessPolynomial":
        return WitnessPolynomial(self.terms + other.terms)

    def to_json(self) -> dict:
        return {"terms": [{"coef": t.coef, "atoms": [a.to_json() for a in t.atoms]} for t in self.terms]}

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)

    @classmethod
    def from_json(cls, data: Mapping[str, Any]) -> "WitnessPolynomial":
        return cls.from_terms((t["coef"], ((a["table"], a["event"]) for a in t["atoms"])) for t in data["terms"])

    def compile(self, shapes: Mapping[str, tuple[tuple[str, ...], tuple[int, ...]]]) -> "CompiledWitness":
        """Vectorized evaluator for tables with the given ``(parties, cards)`` layouts."""
        atom_ids: dict[Atom, int] = {}
        for t in self.terms:
            for a in t.atoms:
                atom_ids.setdefault(a, len(atom_ids))
        selectors: dict[str, list[tuple[int, np.ndarray]]] = {}
        for atom, k in atom_ids.items():
            if atom.table not in shapes:
                raise UnknownAtomReference(f"unknown table {atom.table!r}")
            parties, cards = shapes[atom.table]
            mask = np.ones(cards, dtype=bool)
            for name, values in atom.event:
                if name in parties:
                    party = name
                else:
                    lowered = [p for p in parties if p.lower() == name.lower()]
                    if len(lowered) != 1:
                        raise UnknownAtomReference(f"table {atom.table!r} has no party {name!r}")
                    party = lowered[0]
                ax = parties.index(party)
                keep = np.zeros(cards[ax], dtype=bool)
                if any(v >= cards[ax] or v < 0 for v in values):
                    raise UnknownAtomReference(f"outcome {values} outside the alphabet of {party!r}")
                keep[list(values)] = True
                shape = [1] * len(cards)
                shape[ax] = cards[ax]
                mask &= keep.reshape(shape)
            selectors.setdefault(atom.table, []).append((k, np.flatnonzero(mask.reshape(-1))))
        mats = {}
        for table, entries in selectors.items():
            size = int(np.prod(shapes[table][1]))
            rows = np.concatenate([np.full(len(idx), k) for k, idx in entries])
            cols = np.concatenate([idx for _, idx in entries])
            mats[table] = sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(len(atom_ids), size))
        width = max((len(t.atoms) for t in self.terms), default=0)
        index = np.full((len(self.terms), width), len(atom_ids), dtype=int)  # padding points at constant 1
        for i, t in enumerate(self.terms):
            index[i, : len(t.atoms)] = [atom_ids[a] for a in t.atoms]
        coefs = np.array([t.coef for t in self.terms])
        return CompiledWitness(mats, index, coefs, len(atom_ids))


@dataclass(frozen=True, eq=False)
class CompiledWitness:
    selectors: Mapping[str, sp.csr_matrix]
    index: np.ndarray
    coefs: np.ndarray
    n_atoms: int

    def evaluate_batch(self, tables: Mapping[str, np.ndarray]) -> np.ndarray:
        """``tables[name]`` has shape ``(batch, *cards)``; returns one value per batch entry."""
        batch = None
        values = None
        for name, sel in self.selectors.items():
            if name not in tables:
                raise UnknownAtomReference(f"missing table {name!r}")
            flat = np.asarray(tables[name]).reshape(len(tables[name]), -1)
            batch = flat.shape[0]
            part = (sel @ flat.T).T  # (batch, n_atoms)
            values = part if values is None else values + part
        if values is None:
            batch = len(next(iter(tables.values()))) if tables else 1
            values = np.zeros((batch, self.n_atoms))
        padded = np.concatenate([values, np.ones((batch, 1))], axis=1)
        if self.index.shape[1] == 0:
            return np.full(batch, self.coefs.sum())
        products = np.prod(padded[:, self.index], axis=2)
        return products @ self.coefs


def evaluate_witness(w: WitnessPolynomial, knowns: Mapping[str, Behavior]) -> float:
    total = 0.0
    for t in w.terms:
        value = t.coef
        for atom in t.atoms:
            if atom.table not in knowns:
                raise UnknownAtomReference(f"unknown table {atom.table!r}")
            behavior = knowns[atom.table]
            event = {_resolve_party(behavior, p, atom.table): list(v) for p, v in atom.event}
            try:
                value *= behavior.prob(event)
            except Exception as exc:  # out-of-range outcomes and the like
                raise UnknownAtomReference(str(exc)) from exc
        total += value
    return float(total)


def extract_witness(verdict: FeasibilityVerdict, lp: LinearProgram) -> WitnessPolynomial:
    """``W(P) = sum_r y_r b_r(P)`` read off a Farkas certificate ``y``.

    Every right-hand side is a product of known-table probabilities (or the
    constant 1 of the normalization row; symmetry rows contribute nothing), so
    ``W`` is a polynomial in the known tables. For data with a classical model
    on the inflation, ``b(P) = A q`` with ``q >= 0`` and ``W = (A^T y) q >= 0``;
    on the certified data ``W = b^T y < 0``.
    """
    if not verdict.infeasible or verdict.certificate is None:
        raise ValueError("extract_witness needs an infeasible verdict with a certificate")
    y = verdict.certificate
    if len(y) != lp.shape[0]:
        raise ValueError("certificate length does not match the LP")
    terms = []
    for r in np.flatnonzero(np.abs(y) >= COEF_TOL):
        if r == lp.norm_row:
            terms.append(Term(float(y[r]), ()))
        elif lp.template.row_family(int(r)) != "sym":
            terms.append(Term(float(y[r]), tuple(Atom.of(t, e) for t, e in lp.rhs_atoms(int(r)))))
    return WitnessPolynomial(tuple(terms))


def rgb4_reference_witness() -> WitnessPolynomial:
    """Compact RGB4 witness over ``obs`` and ``int`` (the gamma -> A split); nonnegative classically."""
    obs, int_ = "obs", "int"
    a3 = (obs, {"A": 3})
    a3_c12 = (obs, {"A": 3, "C": [1, 2]})
    i_32_01 = (int_, {"A": 3, "B": 2, "C": [0, 1]})
    i_322 = (int_, {"A": 3, "B": 2, "C": 2})
    return WitnessPolynomial.from_terms(
        [
            (1.0, [a3_c12]),
            (-1.0, [i_32_01]),
            (-1.0, [(int_, {"A": 3, "B": 0, "C": [1, 2]})]),
            (1.0, [(obs, {"B": 2}), a3, a3]),
            (1.0, [a3, (obs, {"A": [0, 2], "B": 0, "C": [1, 3]})]),
            (-2.0, [i_322]),
            (-1.0, [(obs, {"A": [0, 2]}), a3_c12]),
            (1.0, [i_32_01]),
            (2.0, [i_322]),
            (-1.0, [a3, i_32_01]),
            (-2.0, [a3, i_322]),
            (1.0, [a3, (obs, {"A": [0, 2], "B": [0, 2], "C": [0, 2]})]),
        ]
    )
