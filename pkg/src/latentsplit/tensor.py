"""Dense multipartite states, measurements and Born-rule evaluation.

Operators are plain complex ``numpy`` arrays. A :class:`SubsystemLayout`
attaches a label and a dimension to every tensor factor so that partial traces
and measurements can address subsystems by name rather than by position.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from string import ascii_letters
from typing import Iterable, Mapping, Sequence

import numpy as np

from .behavior import Behavior
from .errors import LayoutMismatch, UnknownLabel

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-12
PSD_TOL = 1e-10
COMPLETENESS_TOL = 1e-10
CLAMP_TOL = 1e-14


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


def min_eigenvalue(m: np.ndarray) -> float:
    m = np.asarray(m, dtype=complex)
    return float(np.linalg.eigvalsh((m + m.conj().T) / 2).min())


@dataclass(frozen=True)
class SubsystemLayout:
    """Ordered ``(label, dim)`` slots of a tensor-product Hilbert space."""

    slots: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        slots = tuple((str(label), int(dim)) for label, dim in self.slots)
        labels = [s[0] for s in slots]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate slot labels: {labels}")
        if any(d < 1 for _, d in slots):
            raise ValueError("slot dimensions must be >= 1")
        object.__setattr__(self, "slots", slots)

    @classmethod
    def of(cls, labels: Iterable[str], dims: Iterable[int] | int = 2) -> "SubsystemLayout":
        labels = list(labels)
        dims = [dims] * len(labels) if isinstance(dims, int) else list(dims)
        return cls(tuple(zip(labels, dims)))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(s[0] for s in self.slots)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(s[1] for s in self.slots)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims, dtype=int))

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UnknownLabel(label) from None

    def dim(self, label: str) -> int:
        return self.dims[self.index(label)]

    def subset(self, labels: Iterable[str]) -> "SubsystemLayout":
        return SubsystemLayout(tuple((lab, self.dim(lab)) for lab in labels))

    def relabel(self, mapping: Mapping[str, str]) -> "SubsystemLayout":
        return SubsystemLayout(tuple((mapping.get(lab, lab), d) for lab, d in self.slots))

    def __add__(self, other: "SubsystemLayout") -> "SubsystemLayout":
        return SubsystemLayout(self.slots + other.slots)


@dataclass(frozen=True, eq=False)
class DensityOperator:
    layout: SubsystemLayout
    matrix: np.ndarray
    validate: bool = field(default=False, repr=False)

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        d = self.layout.total_dim
        if m.shape != (d, d):
            raise LayoutMismatch(f"matrix shape {m.shape} does not match layout dimension {d}")
        if not is_hermitian(m):
            raise ValueError("density operator is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise ValueError(f"density operator trace {tr!r} != 1")
        if self.validate and min_eigenvalue(m) < -PSD_TOL:
            raise ValueError(f"density operator has negative eigenvalue {min_eigenvalue(m):.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    # -- constructors ------------------------------------------------------

    @classmethod
    def from_ket(cls, layout: SubsystemLayout, ket: Sequence[complex]) -> "DensityOperator":
        psi = np.asarray(ket, dtype=complex).reshape(-1)
        psi = psi / np.linalg.norm(psi)
        return cls(layout, np.outer(psi, psi.conj()))

    @classmethod
    def maximally_mixed(cls, layout: SubsystemLayout) -> "DensityOperator":
        d = layout.total_dim
        return cls(layout, np.eye(d) / d)

    @classmethod
    def diagonal(cls, layout: SubsystemLayout, probs: Sequence[float]) -> "DensityOperator":
        """Classical distribution over the computational basis of ``layout``."""
        return cls(layout, np.diag(np.asarray(probs, dtype=float)))

    # -- views -------------------------------------------------------------

    @property
    def dims(self) -> tuple[int, ...]:
        return self.layout.dims

    def tensor(self) -> np.ndarray:
        """Matrix reshaped to ``dims + dims`` (ket indices, then bra indices)."""
        return self.matrix.reshape(self.dims + self.dims)

    def relabel(self, mapping: Mapping[str, str]) -> "DensityOperator":
        return DensityOperator(self.layout.relabel(mapping), self.matrix)

    def permute(self, labels: Sequence[str]) -> "DensityOperator":
        """Reorder tensor factors to follow ``labels``."""
        labels = list(labels)
        if sorted(labels) != sorted(self.layout.labels):
            raise LayoutMismatch(f"{labels} is not a permutation of {self.layout.labels}")
        order = [self.layout.index(lab) for lab in labels]
        n = len(order)
        t = np.transpose(self.tensor(), order + [o + n for o in order])
        layout = self.layout.subset(labels)
        d = layout.total_dim
        return DensityOperator(layout, t.reshape(d, d))

    def is_positive(self, tol: float = PSD_TOL) -> bool:
        return min_eigenvalue(self.matrix) >= -tol


def tensor_product(*ops: DensityOperator) -> DensityOperator:
    layout = SubsystemLayout(())
    matrix = np.ones((1, 1), dtype=complex)
    for op in ops:
        layout = layout + op.layout
        matrix = np.kron(matrix, op.matrix)
    return DensityOperator(layout, matrix)


def partial_trace(op: DensityOperator, over: Iterable[str]) -> DensityOperator:
    """Trace out the slots named in ``over``; remaining slots keep their order."""
    over = set(over)
    for lab in over:
        op.layout.index(lab)
    keep = [lab for lab in op.layout.labels if lab not in over]
    n = len(op.layout.labels)
    letters = ascii_letters
    if 2 * n > len(letters):
        raise LayoutMismatch("too many subsystems for dense partial trace")
    ket = list(letters[:n])
    bra = list(letters[n : 2 * n])
    for i, lab in enumerate(op.layout.labels):
        if lab in over:
            bra[i] = ket[i]
    out = [ket[op.layout.index(lab)] for lab in keep] + [bra[op.layout.index(lab)] for lab in keep]
    t = np.einsum("".join(ket + bra) + "->" + "".join(out), op.tensor())
    layout = op.layout.subset(keep)
    d = layout.total_dim
    m = t.reshape(d, d)
    return DensityOperator(layout, (m + m.conj().T) / 2)


def reduced_state(op: DensityOperator, keep: Iterable[str]) -> DensityOperator:
    keep = list(keep)
    traced = [lab for lab in op.layout.labels if lab not in keep]
    return partial_trace(op, traced).permute(keep)


def depolarize(op: DensityOperator, visibility: float) -> DensityOperator:
    """``v * rho + (1 - v) * I / d``."""
    d = op.layout.total_dim
    return DensityOperator(op.layout, visibility * op.matrix + (1.0 - visibility) * np.eye(d) / d)


@dataclass(frozen=True, eq=False)
class Povm:
    """Measurement on the slots of ``layout``.

    ``elements`` has shape ``setting_shape + (n_outcomes, d, d)``; an empty
    ``setting_shape`` is an unconditioned measurement.
    """

    layout: SubsystemLayout
    elements: np.ndarray
    n_settings_axes: int = 0

    def __post_init__(self) -> None:
        e = np.array(self.elements, dtype=complex)
        d = self.layout.total_dim
        if e.ndim != self.n_settings_axes + 3 or e.shape[-2:] != (d, d):
            raise LayoutMismatch(
                f"POVM elements of shape {e.shape} do not fit layout dimension {d} "
                f"with {self.n_settings_axes} setting axes"
            )
        flat = e.reshape((-1,) + e.shape[-3:])
        for setting in flat:
            for el in setting:
                if not is_hermitian(el, 1e-10):
                    raise ValueError("POVM element is not Hermitian")
                if d > 0 and min_eigenvalue(el) < -PSD_TOL:
                    raise ValueError("POVM element is not positive semidefinite")
            if np.max(np.abs(setting.sum(axis=0) - np.eye(d)), initial=0.0) > COMPLETENESS_TOL:
                raise ValueError("POVM elements do not sum to the identity")
        e.setflags(write=False)
        object.__setattr__(self, "elements", e)

    @property
    def setting_shape(self) -> tuple[int, ...]:
        return self.elements.shape[: self.n_settings_axes]

    @property
    def n_outcomes(self) -> int:
        return self.elements.shape[self.n_settings_axes]

    @classmethod
    def projective(cls, layout: SubsystemLayout, vectors: Sequence[Sequence[complex]]) -> "Povm":
        """Rank-one projectors onto the given (orthonormal) vectors, in outcome order."""
        vs = [np.asarray(v, dtype=complex).reshape(-1) for v in vectors]
        return cls(layout, np.array([np.outer(v, v.conj()) for v in vs]))

    @classmethod
    def conditioned(cls, layout: SubsystemLayout, per_setting: Sequence["Povm"]) -> "Povm":
        """Stack unconditioned POVMs into one measurement indexed by a single setting."""
        return cls(layout, np.array([p.elements for p in per_setting]), n_settings_axes=1)

    def relabel(self, mapping: Mapping[str, str]) -> "Povm":
        return Povm(self.layout.relabel(mapping), self.elements, self.n_settings_axes)

    def element_tensor(self) -> np.ndarray:
        """Elements reshaped to ``setting_shape + (n_out,) + dims + dims``."""
        dims = self.layout.dims
        return self.elements.reshape(self.elements.shape[:-2] + dims + dims)


def born_rule(
    state: DensityOperator,
    measurements: Mapping[str, Povm],
    *,
    settings: Mapping[str, Sequence[str]] | None = None,
    inputs: Sequence[tuple[str, int]] = (),
    trace_out: Iterable[str] = (),
) -> Behavior:
    """Joint outcome table ``Tr(rho  (x)_j E_j)`` for the parties in ``measurements``.

    ``settings[party]`` names the variables (other parties or ``inputs``)
    whose values select that party's POVM, one per setting axis. The result
    is conditioned on ``inputs``. Slots listed in ``trace_out`` are left
    unmeasured; every other state slot must belong to exactly one party.
    """
    settings = dict(settings or {})
    trace_out = set(trace_out)
    parties = list(measurements)
    input_names = [name for name, _ in inputs]

    owner: dict[str, str] = {}
    for party, povm in measurements.items():
        for lab in povm.layout.labels:
            if lab in owner:
                raise LayoutMismatch(f"slot {lab!r} measured by both {owner[lab]!r} and {party!r}")
            owner[lab] = party
            if lab not in state.layout.labels:
                raise LayoutMismatch(f"party {party!r} measures unknown slot {lab!r}")
            if state.layout.dim(lab) != povm.layout.dim(lab):
                raise LayoutMismatch(f"dimension mismatch on slot {lab!r}")
    uncovered = set(state.layout.labels) - set(owner) - trace_out
    if uncovered:
        raise LayoutMismatch(f"state slots {sorted(uncovered)} are not measured by any party")
    if set(owner) & trace_out:
        raise LayoutMismatch("a slot cannot be both measured and traced out")

    n_slots = len(state.layout.labels)
    letters = iter(ascii_letters)
    try:
        ket = [next(letters) for _ in range(n_slots)]
        bra = [next(letters) for _ in range(n_slots)]
        var_letter = {name: next(letters) for name in parties + input_names}
    except StopIteration:
        raise LayoutMismatch("network too large for dense Born-rule evaluation") from None
    for i, lab in enumerate(state.layout.labels):
        if lab in trace_out:
            bra[i] = ket[i]

    cards = {name: card for name, card in inputs}
    for party, povm in measurements.items():
        cards[party] = povm.n_outcomes

    operands: list[np.ndarray] = [state.tensor()]
    subscripts = ["".join(ket + bra)]
    for party, povm in measurements.items():
        parents = list(settings.get(party, ()))
        if len(parents) != povm.n_settings_axes:
            raise LayoutMismatch(
                f"party {party!r} has {povm.n_settings_axes} setting axes but {len(parents)} setting variables"
            )
        for name, size in zip(parents, povm.setting_shape):
            if name not in var_letter:
                raise LayoutMismatch(f"unknown setting variable {name!r} for party {party!r}")
            if name in cards and cards[name] != size:
                raise LayoutMismatch(f"setting {name!r} of {party!r} expects {size} values, variable has {cards[name]}")
        idx = [state.layout.index(lab) for lab in povm.layout.labels]
        # Tr(rho E) = sum rho[k, b] E[b, k]: rows of E carry bra letters.
        sub = [var_letter[p] for p in parents] + [var_letter[party]]
        sub += [bra[i] for i in idx] + [ket[i] for i in idx]
        operands.append(povm.element_tensor())
        subscripts.append("".join(sub))
    used = set("".join(subscripts))
    for name in input_names:
        if var_letter[name] not in used:
            operands.append(np.ones(cards[name]))
            subscripts.append(var_letter[name])
    out = "".join(var_letter[n] for n in parties + input_names)
    expr = ",".join(subscripts) + "->" + out
    table = np.einsum(expr, *operands, optimize=True)

    if np.max(np.abs(table.imag), initial=0.0) > 1e-10:
        raise LayoutMismatch("Born-rule probabilities have a non-negligible imaginary part")
    table = np.array(table.real)
    table[np.abs(table) < CLAMP_TOL] = 0.0
    if table.size and table.min() < -1e-12:
        raise ValueError(f"negative probability {table.min():.3e}; check positivity of inputs")
    table = np.clip(table, 0.0, None)
    return Behavior(
        tuple(parties),
        tuple(cards[p] for p in parties),
        table,
        tuple(input_names),
        tuple(cards[n] for n in input_names),
    )
