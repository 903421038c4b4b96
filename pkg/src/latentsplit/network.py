"""Two-layer causal networks and their classical and quantum behaviors.

A network has latent sources (no parents), observed parties and, optionally,
exogenous observed inputs. Sources point to parties; parties and inputs may
point to parties. A quantum strategy attaches one density operator to every
source, with one slot per child, and one POVM to every party, acting on the
slots it receives and selected by the values of its observed parents.
"""

from __future__ import annotations

from dataclasses import dataclass
from string import ascii_letters
from typing import Any, Mapping, Sequence

import numpy as np

from .behavior import Behavior
from .errors import LayoutMismatch, ModelMismatch, UnknownParty
from .tensor import DensityOperator, Povm, SubsystemLayout, born_rule, tensor_product


def slot_label(source: str, party: str) -> str:
    """Label of the subsystem that ``source`` sends to ``party``."""
    return f"{source}:{party}"


@dataclass(frozen=True)
class CausalNetwork:
    observed: tuple[tuple[str, int], ...]
    latent: tuple[str, ...]
    edges: tuple[tuple[str, str], ...]
    inputs: tuple[tuple[str, int], ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "observed", tuple((str(n), int(c)) for n, c in self.observed))
        object.__setattr__(self, "latent", tuple(str(n) for n in self.latent))
        object.__setattr__(self, "edges", tuple((str(u), str(v)) for u, v in self.edges))
        object.__setattr__(self, "inputs", tuple((str(n), int(c)) for n, c in self.inputs))
        names = self.parties + self.latent + self.input_names
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate node names in {names}")
        if len(set(self.edges)) != len(self.edges):
            raise ValueError("duplicate edges")
        for u, v in self.edges:
            if u not in names or v not in names:
                raise UnknownParty(f"edge {u}->{v} references an unknown node")
            if v in self.latent:
                raise ValueError(f"latent node {v!r} cannot have parents")
            if v in self.input_names:
                raise ValueError(f"input {v!r} cannot have parents")
        for lam in self.latent:
            if not self.children(lam):
                raise ValueError(f"latent node {lam!r} has no children")
        self.topological_order()

    # -- structure ---------------------------------------------------------

    @property
    def parties(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.observed)

    @property
    def input_names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.inputs)

    def card(self, name: str) -> int:
        for n, c in self.observed + self.inputs:
            if n == name:
                return c
        raise UnknownParty(name)

    def is_party(self, name: str) -> bool:
        return name in self.parties

    def has_edge(self, u: str, v: str) -> bool:
        return (u, v) in self.edges

    def children(self, node: str) -> tuple[str, ...]:
        kids = {v for u, v in self.edges if u == node}
        return tuple(p for p in self.parties if p in kids)

    def latent_parents(self, party: str) -> tuple[str, ...]:
        pa = {u for u, v in self.edges if v == party}
        return tuple(lam for lam in self.latent if lam in pa)

    def observed_parents(self, party: str) -> tuple[str, ...]:
        """Inputs first, then parties, each in declaration order."""
        pa = {u for u, v in self.edges if v == party}
        return tuple(n for n in self.input_names + self.parties if n in pa)

    def party_parents(self, party: str) -> tuple[str, ...]:
        pa = {u for u, v in self.edges if v == party}
        return tuple(n for n in self.parties if n in pa)

    def parents(self, party: str) -> tuple[str, ...]:
        return self.latent_parents(party) + self.observed_parents(party)

    def topological_order(self) -> tuple[str, ...]:
        """Parties ordered so that observed parents precede their children."""
        order: list[str] = []
        pending = list(self.parties)
        while pending:
            ready = [p for p in pending if all(q in order for q in self.party_parents(p))]
            if not ready:
                raise ValueError(f"observed edges among {pending} form a cycle")
            order.extend(ready)
            pending = [p for p in pending if p not in ready]
        return tuple(order)

    def slots(self, party: str) -> tuple[str, ...]:
        return tuple(slot_label(lam, party) for lam in self.latent_parents(party))

    # -- edits -------------------------------------------------------------

    def replace(
        self,
        *,
        latent: Sequence[str] | None = None,
        edges: Sequence[tuple[str, str]] | None = None,
    ) -> "CausalNetwork":
        return CausalNetwork(
            self.observed,
            tuple(self.latent if latent is None else latent),
            tuple(self.edges if edges is None else edges),
            self.inputs,
        )

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        data: dict[str, Any] = {
            "observed": [{"name": n, "card": c} for n, c in self.observed],
            "latent": list(self.latent),
            "edges": [list(e) for e in self.edges],
        }
        if self.inputs:
            data["inputs"] = [{"name": n, "card": c} for n, c in self.inputs]
        return data

    @classmethod
    def from_json(cls, data: Mapping) -> "CausalNetwork":
        return cls(
            tuple((o["name"], o["card"]) for o in data["observed"]),
            tuple(data["latent"]),
            tuple(tuple(e) for e in data["edges"]),
            tuple((o["name"], o["card"]) for o in data.get("inputs", ())),
        )


def triangle_network(card: int = 2) -> CausalNetwork:
    """A, B, C with sources gamma (A, B), alpha (B, C) and beta (A, C)."""
    return CausalNetwork(
        (("A", card), ("B", card), ("C", card)),
        ("alpha", "beta", "gamma"),
        (("beta", "A"), ("gamma", "A"), ("gamma", "B"), ("alpha", "B"), ("alpha", "C"), ("beta", "C")),
    )


def bell_network(card: int = 2) -> CausalNetwork:
    return CausalNetwork((("A", card), ("B", card)), ("lambda",), (("lambda", "A"), ("lambda", "B")))


def instrumental_network(n_inputs: int = 2, card: int = 2) -> CausalNetwork:
    """Input X -> A -> B with a source shared by A and B."""
    return CausalNetwork(
        (("A", card), ("B", card)),
        ("rho",),
        (("rho", "A"), ("rho", "B"), ("X", "A"), ("A", "B")),
        inputs=(("X", n_inputs),),
    )


def uc_network(card: int = 2) -> CausalNetwork:
    """Unrelated confounders: B -> A, B -> C, gamma shared by A, B and alpha by B, C."""
    return CausalNetwork(
        (("A", card), ("B", card), ("C", card)),
        ("gamma", "alpha"),
        (("gamma", "A"), ("gamma", "B"), ("alpha", "B"), ("alpha", "C"), ("B", "A"), ("B", "C")),
    )


# -- classical models ------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ClassicalModel:
    """Source distributions ``p(lambda)`` and response tables ``p(a | parents)``.

    ``responses[party]`` has one axis per parent, in the order given by
    :meth:`CausalNetwork.parents`, followed by the party's outcome axis.
    """

    sources: Mapping[str, np.ndarray]
    responses: Mapping[str, np.ndarray]

    def __post_init__(self) -> None:
        sources = {k: np.asarray(v, dtype=float) for k, v in self.sources.items()}
        responses = {k: np.asarray(v, dtype=float) for k, v in self.responses.items()}
        for name, p in sources.items():
            if p.ndim != 1 or p.min() < -1e-12 or abs(p.sum() - 1.0) > 1e-12:
                raise ModelMismatch(f"source {name!r} is not a probability vector")
        for name, r in responses.items():
            if r.min() < -1e-12 or not np.allclose(r.sum(axis=-1), 1.0, rtol=0, atol=1e-12):
                raise ModelMismatch(f"response table of {name!r} is not stochastic")
        object.__setattr__(self, "sources", sources)
        object.__setattr__(self, "responses", responses)


def classical_behavior(net: CausalNetwork, model: ClassicalModel) -> Behavior:
    """Sum over all latent values of the product of causal parameters."""
    if set(model.sources) != set(net.latent):
        raise ModelMismatch(f"model sources {sorted(model.sources)} != network latents {sorted(net.latent)}")
    if set(model.responses) != set(net.parties):
        raise ModelMismatch(f"model responses {sorted(model.responses)} != parties {sorted(net.parties)}")
    names = list(net.latent) + list(net.parties) + list(net.input_names)
    if len(names) > len(ascii_letters):
        raise ModelMismatch("network too large")
    letter = dict(zip(names, ascii_letters))
    size = {lam: len(model.sources[lam]) for lam in net.latent}
    size.update({n: net.card(n) for n in net.parties + net.input_names})
    operands: list[np.ndarray] = []
    subs: list[str] = []
    for lam in net.latent:
        operands.append(model.sources[lam])
        subs.append(letter[lam])
    for party in net.parties:
        parents = net.parents(party)
        r = model.responses[party]
        expected = tuple(size[p] for p in parents) + (net.card(party),)
        if r.shape != expected:
            raise ModelMismatch(f"response table of {party!r} has shape {r.shape}, expected {expected}")
        operands.append(r)
        subs.append("".join(letter[p] for p in parents) + letter[party])
    for name in net.input_names:
        if letter[name] not in "".join(subs):
            operands.append(np.ones(size[name]))
            subs.append(letter[name])
    out = "".join(letter[n] for n in net.parties + net.input_names)
    table = np.einsum(",".join(subs) + "->" + out, *operands, optimize=True)
    return Behavior(
        net.parties,
        tuple(net.card(p) for p in net.parties),
        np.clip(table, 0.0, None),
        net.input_names,
        tuple(net.card(n) for n in net.input_names),
    )


# -- quantum strategies ----------------------------------------------------


@dataclass(frozen=True, eq=False)
class QuantumStrategy:
    network: CausalNetwork
    states: Mapping[str, DensityOperator]
    povms: Mapping[str, Povm]

    def __post_init__(self) -> None:
        net = self.network
        object.__setattr__(self, "states", dict(self.states))
        object.__setattr__(self, "povms", dict(self.povms))
        if set(self.states) != set(net.latent):
            raise LayoutMismatch(f"states given for {sorted(self.states)}, network latents {sorted(net.latent)}")
        if set(self.povms) != set(net.parties):
            raise LayoutMismatch(f"POVMs given for {sorted(self.povms)}, parties {sorted(net.parties)}")
        for lam, rho in self.states.items():
            expected = {slot_label(lam, ch) for ch in net.children(lam)}
            if set(rho.layout.labels) != expected:
                raise LayoutMismatch(f"state of {lam!r} has slots {rho.layout.labels}, expected {sorted(expected)}")
        for party, povm in self.povms.items():
            expected = set(net.slots(party))
            if set(povm.layout.labels) != expected:
                raise LayoutMismatch(f"POVM of {party!r} acts on {povm.layout.labels}, expected {sorted(expected)}")
            for lab in povm.layout.labels:
                lam = lab.split(":", 1)[0]
                if self.states[lam].layout.dim(lab) != povm.layout.dim(lab):
                    raise LayoutMismatch(f"dimension mismatch on slot {lab!r}")
            setting_vars = net.observed_parents(party)
            if povm.setting_shape != tuple(net.card(v) for v in setting_vars):
                raise LayoutMismatch(
                    f"POVM of {party!r} has settings {povm.setting_shape}, observed parents {setting_vars}"
                )
            if povm.n_outcomes != net.card(party):
                raise LayoutMismatch(f"POVM of {party!r} has {povm.n_outcomes} outcomes, card {net.card(party)}")

    def global_state(self) -> DensityOperator:
        return tensor_product(*(self.states[lam] for lam in self.network.latent))

    def settings(self) -> dict[str, tuple[str, ...]]:
        return {p: self.network.observed_parents(p) for p in self.network.parties}


def quantum_behavior(strategy: QuantumStrategy) -> Behavior:
    net = strategy.network
    return born_rule(
        strategy.global_state(),
        strategy.povms,
        settings=strategy.settings(),
        inputs=net.inputs,
    )


def pearl_do_quantum(strategy: QuantumStrategy, target: str) -> Behavior:
    """``P(rest | inputs, do(target))``: the target's POVM becomes the identity.

    The forced value enters as an extra conditioning variable (last axis) and
    feeds the target's observed children as their setting.
    """
    net = strategy.network
    if not net.is_party(target):
        raise UnknownParty(target)
    povms = {p: m for p, m in strategy.povms.items() if p != target}
    settings = {p: net.observed_parents(p) for p in povms}
    return born_rule(
        strategy.global_state(),
        povms,
        settings=settings,
        inputs=net.inputs + ((target, net.card(target)),),
        trace_out=net.slots(target),
    )


# -- JSON ------------------------------------------------------------------


def _complex_to_json(a: np.ndarray) -> Any:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def _complex_from_json(data: Any) -> np.ndarray:
    a = np.asarray(data, dtype=float)
    if a.shape[-1] != 2:
        raise ValueError("complex literals must be [re, im] pairs")
    return a[..., 0] + 1j * a[..., 1]


def _layout_from_json(data: Mapping) -> SubsystemLayout:
    slots = list(data["slots"])
    dims = data.get("dims", [2] * len(slots))
    return SubsystemLayout.of(slots, dims)


def state_from_json(data: Mapping) -> DensityOperator:
    layout = _layout_from_json(data)
    if "ket" in data:
        return DensityOperator.from_ket(layout, _complex_from_json(data["ket"]))
    if "probs" in data:
        return DensityOperator.diagonal(layout, data["probs"])
    return DensityOperator(layout, _complex_from_json(data["matrix"]))


def povm_from_json(data: Mapping) -> Povm:
    layout = _layout_from_json(data)
    elements = _complex_from_json(data["elements"])
    return Povm(layout, elements, n_settings_axes=elements.ndim - 3)


def strategy_to_json(strategy: QuantumStrategy) -> dict:
    data = strategy.network.to_json()
    data["states"] = {
        lam: {"slots": list(rho.layout.labels), "dims": list(rho.layout.dims), "matrix": _complex_to_json(rho.matrix)}
        for lam, rho in strategy.states.items()
    }
    data["povms"] = {
        p: {"slots": list(m.layout.labels), "dims": list(m.layout.dims), "elements": _complex_to_json(m.elements)}
        for p, m in strategy.povms.items()
    }
    return data


def strategy_from_json(data: Mapping) -> QuantumStrategy:
    net = CausalNetwork.from_json(data)
    states = {lam: state_from_json(s) for lam, s in data["states"].items()}
    povms = {p: povm_from_json(m) for p, m in data["povms"].items()}
    return QuantumStrategy(net, states, povms)


def embed_classical(net: CausalNetwork, model: ClassicalModel) -> QuantumStrategy:
    """Diagonal quantum strategy reproducing ``classical_behavior(net, model)``.

    Each source sends perfectly correlated copies of its value to its children;
    each party measures in the computational basis and samples its response.
    """
    states = {}
    for lam in net.latent:
        p = model.sources[lam]
        kids = net.children(lam)
        k = len(p)
        diag = np.zeros((k,) * len(kids))
        for v in range(k):
            diag[(v,) * len(kids)] = p[v]
        layout = SubsystemLayout.of([slot_label(lam, ch) for ch in kids], k)
        states[lam] = DensityOperator.diagonal(layout, diag.reshape(-1))
    povms = {}
    for party in net.parties:
        lat = net.latent_parents(party)
        obs = net.observed_parents(party)
        r = model.responses[party]
        dims = [len(model.sources[lam]) for lam in lat]
        n_lat = len(lat)
        # response axes: latent parents, observed parents, outcome
        moved = np.moveaxis(r, list(range(n_lat)), list(range(len(obs) + 1, len(obs) + 1 + n_lat)))
        d = int(np.prod(dims, dtype=int))
        flat = moved.reshape(moved.shape[: len(obs) + 1] + (d,))
        elements = np.zeros(flat.shape + (d,), dtype=complex)
        idx = np.arange(d)
        elements[..., idx, idx] = flat
        povms[party] = Povm(SubsystemLayout.of(net.slots(party), dims), elements, n_settings_axes=len(obs))
    return QuantumStrategy(net, states, povms)
