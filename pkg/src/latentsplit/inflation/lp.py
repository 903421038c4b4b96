"""Inflation linear programs.

The unknown is a joint distribution ``q`` over the outcomes of every inflated
observed node. Rows fix its marginals on expressible node sets: sets whose
connected blocks (nodes linked through shared latent copies) each map
injectively onto nodes of some known table, so that the marginal must equal
the product of the corresponding known marginals. Copy-exchange symmetries add
rows ``q(x) = q(sigma x)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np
import scipy.sparse as sp

from ..behavior import Behavior
from ..errors import CardinalityMismatch, UnknownBehaviorReference, WiringInconsistent
from .graph import InflationGraph

DEFAULT_MAX_SET_SIZE = 4


@dataclass(frozen=True, eq=False)
class KnownTable:
    """A behavior together with the joint-DAG node each of its parties stands for."""

    behavior: Behavior
    nodes: tuple[str, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "nodes", tuple(self.nodes))
        if len(self.nodes) != len(self.behavior.parties):
            raise WiringInconsistent("one joint node per behavior party is required")
        if self.behavior.conditions:
            raise WiringInconsistent("known tables must be unconditioned")


@dataclass(frozen=True)
class ExpressibleSet:
    nodes: tuple[int, ...]
    blocks: tuple[tuple[tuple[int, ...], str], ...]  # (node indices, known table name)


def _blocks(infl: InflationGraph, subset: Sequence[int]) -> list[list[int]]:
    parent = {i: i for i in subset}

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in combinations(subset, 2):
        if set(infl.nodes[i].sources) & set(infl.nodes[j].sources):
            parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in subset:
        groups.setdefault(find(i), []).append(i)
    return list(groups.values())


def _block_table(infl: InflationGraph, block: Sequence[int], known: Mapping[str, tuple[str, ...]]) -> str | None:
    originals = [infl.nodes[i].original for i in block]
    if len(set(originals)) != len(originals):
        return None
    copies: dict[str, int] = {}
    for i in block:
        for lam, k in infl.nodes[i].sources:
            if copies.setdefault(lam, k) != k:
                return None
    for name, nodes in known.items():
        if set(originals) <= set(nodes):
            return name
    return None


def expressible_sets(
    infl: InflationGraph,
    known: Mapping[str, Sequence[str]],
    max_size: int | None = DEFAULT_MAX_SET_SIZE,
    maximal_only: bool = True,
) -> list[ExpressibleSet]:
    """Expressible node sets of size at most ``max_size`` (None: unbounded).

    With ``maximal_only`` only sets not strictly contained in another
    enumerated set are kept; their rows imply those of every subset.
    """
    known = {k: tuple(v) for k, v in known.items()}
    n = len(infl.nodes)
    limit = n if max_size is None else min(n, max_size)
    found: list[ExpressibleSet] = []
    for r in range(1, limit + 1):
        for subset in combinations(range(n), r):
            blocks = []
            for block in _blocks(infl, subset):
                table = _block_table(infl, block, known)
                if table is None:
                    break
                blocks.append((tuple(sorted(block)), table))
            else:
                found.append(ExpressibleSet(subset, tuple(sorted(blocks))))
    if not maximal_only:
        return found
    sets = [set(e.nodes) for e in found]
    return [e for e, s in zip(found, sets) if not any(s < t for t in sets)]


@dataclass(frozen=True, eq=False)
class LpTemplate:
    """Constraint matrix of an inflation LP; right-hand sides are filled per instance."""

    infl: InflationGraph
    known_nodes: Mapping[str, tuple[str, ...]]
    sets: tuple[ExpressibleSet, ...]
    A: sp.csr_matrix
    offsets: tuple[int, ...]  # first row of each set
    norm_row: int
    n_symmetry_rows: int
    symmetry: tuple[tuple[int, ...], ...] = field(default=())

    @property
    def shape(self) -> tuple[int, int]:
        return self.A.shape

    def set_of_row(self, r: int) -> int | None:
        if r >= self.norm_row:
            return None
        return int(np.searchsorted(self.offsets, r, side="right") - 1)

    def row_family(self, r: int) -> str:
        if r == self.norm_row:
            return "norm"
        if r > self.norm_row:
            return "sym"
        s = self.sets[self.set_of_row(r)]
        if len(s.blocks) == 1 and {self.infl.nodes[i].original for i in s.nodes} == set(
            self.known_nodes[s.blocks[0][1]]
        ) and all(k == 0 for i in s.nodes for _, k in self.infl.nodes[i].sources):
            return "known"
        return "inj"

    def row_name(self, r: int) -> str:
        if r == self.norm_row:
            return "norm"
        if r > self.norm_row:
            return f"sym{r - self.norm_row - 1}"
        k = self.set_of_row(r)
        s = self.sets[k]
        local = r - self.offsets[k]
        cards = [self.infl.cards[i] for i in s.nodes]
        outcome = np.unravel_index(local, cards)
        label = ",".join(f"{self.infl.nodes[i].name}={int(v)}" for i, v in zip(s.nodes, outcome))
        return f"{self.row_family(r)}[{label}]"

    def row_outcome(self, r: int) -> tuple[ExpressibleSet, tuple[int, ...]] | None:
        k = self.set_of_row(r)
        if k is None:
            return None
        s = self.sets[k]
        cards = [self.infl.cards[i] for i in s.nodes]
        return s, tuple(int(v) for v in np.unravel_index(r - self.offsets[k], cards))

    def rhs(self, knowns: Mapping[str, KnownTable]) -> np.ndarray:
        infl = self.infl
        for name, nodes in self.known_nodes.items():
            if name not in knowns:
                raise UnknownBehaviorReference(name)
            table = knowns[name]
            if table.nodes != nodes:
                raise WiringInconsistent(f"table {name!r} maps to {table.nodes}, template expects {nodes}")
            for node, card in zip(nodes, table.behavior.cards):
                if infl.joint.card(node) != card:
                    raise CardinalityMismatch(f"table {name!r}: node {node!r} has card {card}")
        parts = []
        for s in self.sets:
            vals = np.ones(())
            axes: list[int] = []
            for block, name in s.blocks:
                table = knowns[name]
                parties = [table.behavior.parties[table.nodes.index(infl.nodes[i].original)] for i in block]
                vals = np.multiply.outer(vals, table.behavior.marginal(parties).table)
                axes.extend(block)
            order = np.argsort(axes)
            parts.append(np.transpose(vals, order).reshape(-1))
        parts.append(np.ones(1))
        parts.append(np.zeros(self.n_symmetry_rows))
        return np.concatenate(parts)


def _projection_rows(cards: Sequence[int], subset: Sequence[int]) -> sp.csr_matrix:
    n_vars = int(np.prod(cards, dtype=np.int64))
    digits = np.indices(cards).reshape(len(cards), -1)
    sub_cards = [cards[i] for i in subset]
    rows = np.ravel_multi_index(tuple(digits[list(subset)]), sub_cards)
    n_rows = int(np.prod(sub_cards, dtype=np.int64))
    return sp.csr_matrix((np.ones(n_vars), (rows, np.arange(n_vars))), shape=(n_rows, n_vars))


def _symmetry_rows(cards: Sequence[int], perms: Iterable[Sequence[int]]) -> sp.csr_matrix:
    n = len(cards)
    n_vars = int(np.prod(cards, dtype=np.int64))
    digits = np.indices(cards).reshape(n, -1)
    pairs = []
    for perm in perms:
        # the image assignment puts node i's outcome on node perm[i]
        moved = np.empty_like(digits)
        moved[list(perm)] = digits
        image = np.ravel_multi_index(tuple(moved), cards)
        src = np.arange(n_vars)
        mask = image != src
        pairs.append(np.stack([np.minimum(src[mask], image[mask]), np.maximum(src[mask], image[mask])], axis=1))
    if not pairs:
        return sp.csr_matrix((0, n_vars))
    uniq = np.unique(np.concatenate(pairs), axis=0)
    m = len(uniq)
    data = np.r_[np.ones(m), -np.ones(m)]
    rows = np.r_[np.arange(m), np.arange(m)]
    cols = np.r_[uniq[:, 0], uniq[:, 1]]
    return sp.csr_matrix((data, (rows, cols)), shape=(m, n_vars))


def _known_sets(infl: InflationGraph, known: Mapping[str, tuple[str, ...]]) -> list[ExpressibleSet]:
    """Copy-0 images of each known table: the direct marginal constraints on ``q``."""
    out = []
    for name, nodes in known.items():
        subset = tuple(
            i
            for i, node in enumerate(infl.nodes)
            if node.original in nodes and all(k == 0 for _, k in node.sources)
        )
        if sorted(infl.nodes[i].original for i in subset) != sorted(nodes):
            continue
        blocks = _blocks(infl, subset)
        if len(blocks) == 1 and _block_table(infl, subset, {name: nodes}) == name:
            out.append(ExpressibleSet(subset, ((subset, name),)))
    return out


@lru_cache(maxsize=16)
def _template(
    infl: InflationGraph,
    known_key: tuple[tuple[str, tuple[str, ...]], ...],
    symmetry: bool,
    max_size: int | None,
) -> LpTemplate:
    known = dict(known_key)
    sets = _known_sets(infl, known) + expressible_sets(infl, known, max_size)
    cards = infl.cards
    blocks = []
    offsets = []
    row = 0
    for s in sets:
        offsets.append(row)
        m = _projection_rows(cards, s.nodes)
        blocks.append(m)
        row += m.shape[0]
    norm_row = row
    blocks.append(sp.csr_matrix(np.ones((1, infl.n_variables))))
    perms = tuple(infl.symmetries()) if symmetry else ()
    sym = _symmetry_rows(cards, perms)
    blocks.append(sym)
    A = sp.vstack(blocks, format="csr")
    return LpTemplate(infl, known, tuple(sets), A, tuple(offsets), norm_row, sym.shape[0], perms)


def lp_template(
    infl: InflationGraph,
    known_nodes: Mapping[str, Sequence[str]],
    *,
    symmetry: bool = True,
    max_size: int | None = DEFAULT_MAX_SET_SIZE,
) -> LpTemplate:
    for name, nodes in known_nodes.items():
        missing = [n for n in nodes if not infl.joint.is_party(n)]
        if missing:
            raise UnknownBehaviorReference(f"table {name!r} references unknown joint nodes {missing}")
    key = tuple((name, tuple(nodes)) for name, nodes in known_nodes.items())
    return _template(infl, key, symmetry, max_size)


@dataclass(frozen=True, eq=False)
class LinearProgram:
    """Feasibility problem ``A q = b, q >= 0``."""

    template: LpTemplate
    b: np.ndarray
    knowns: Mapping[str, KnownTable]

    @property
    def A(self) -> sp.csr_matrix:
        return self.template.A

    @property
    def shape(self) -> tuple[int, int]:
        return self.template.shape

    @property
    def norm_row(self) -> int:
        return self.template.norm_row

    def row_names(self) -> list[str]:
        return [self.template.row_name(r) for r in range(self.shape[0])]

    def rows_of_family(self, family: str) -> np.ndarray:
        return np.array([r for r in range(self.shape[0]) if self.template.row_family(r) == family], dtype=int)

    def residual(self, x: np.ndarray) -> float:
        return float(np.max(np.abs(self.A @ x - self.b), initial=0.0))

    def rhs_atoms(self, r: int) -> list[tuple[str, dict[str, int]]]:
        """The right-hand side of row ``r`` as a product of known-table probabilities."""
        hit = self.template.row_outcome(r)
        if hit is None:
            return []
        s, outcome = hit
        value = dict(zip(s.nodes, outcome))
        infl = self.template.infl
        atoms = []
        for block, name in s.blocks:
            table = self.knowns[name]
            event = {
                table.behavior.parties[table.nodes.index(infl.nodes[i].original)]: value[i] for i in block
            }
            atoms.append((name, event))
        return atoms

    def to_text(self, fh: TextIO | None = None) -> str:
        """Plain-text standard form, one ``E <name> : <coef> x<j> ... = <rhs>`` line per row."""
        lines = [f"# variables {self.shape[1]}", f"# rows {self.shape[0]}"]
        A = self.A.tocsr()
        names = self.row_names()
        for r in range(A.shape[0]):
            lo, hi = A.indptr[r], A.indptr[r + 1]
            coeffs = " ".join(f"{A.data[k]:+.17g} x{A.indices[k]}" for k in range(lo, hi))
            lines.append(f"E {names[r].replace(' ', '_')} : {coeffs} = {self.b[r]:.17g}")
        text = "\n".join(lines) + "\n"
        if fh is not None:
            fh.write(text)
        return text


def parse_lp_text(text: str) -> tuple[sp.csr_matrix, np.ndarray, list[str]]:
    """Inverse of :meth:`LinearProgram.to_text` (without the template metadata)."""
    n_vars = None
    data, rows, cols, b, names = [], [], [], [], []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 2 and parts[0] == "variables":
                n_vars = int(parts[1])
            continue
        if not line.startswith("E "):
            raise ValueError(f"unrecognized line: {line[:40]!r}")
        head, rest = line[2:].split(" : ", 1)
        lhs, rhs = rest.rsplit("=", 1)
        tokens = lhs.split()
        r = len(names)
        for coef, var in zip(tokens[::2], tokens[1::2]):
            data.append(float(coef))
            rows.append(r)
            cols.append(int(var[1:]))
        b.append(float(rhs))
        names.append(head.strip())
    if n_vars is None:
        n_vars = max(cols) + 1 if cols else 0
    A = sp.csr_matrix((data, (rows, cols)), shape=(len(names), n_vars))
    return A, np.array(b), names


def build_lp(
    infl: InflationGraph,
    known: Mapping[str, KnownTable],
    *,
    symmetry: bool = True,
    max_size: int | None = DEFAULT_MAX_SET_SIZE,
) -> LinearProgram:
    template = lp_template(infl, {k: v.nodes for k, v in known.items()}, symmetry=symmetry, max_size=max_size)
    return LinearProgram(template, template.rhs(known), dict(known))
