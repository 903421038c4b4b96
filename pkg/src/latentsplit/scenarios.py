"""Strategy factories: RGB4 family, binary Fritz strategy, do-recovery demos, random models."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .behavior import Behavior
from .errors import ParamOutOfRange
from .network import (
    CausalNetwork,
    ClassicalModel,
    QuantumStrategy,
    instrumental_network,
    quantum_behavior,
    slot_label,
    triangle_network,
    uc_network,
)
from .splitting import interventional_behavior
from .tensor import DensityOperator, Povm, SubsystemLayout, depolarize, kron

SQRT2 = np.sqrt(2.0)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
IDENTITY2 = np.eye(2, dtype=complex)
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / SQRT2


def _check_unit(name: str, value: float) -> float:
    value = float(value)
    if not 0.0 <= value <= 1.0 or not np.isfinite(value):
        raise ParamOutOfRange(f"{name}={value!r} outside [0, 1]")
    return value


def binary_projectors(observable: np.ndarray) -> np.ndarray:
    """``[(I + O)/2, (I - O)/2]``: outcome 0 is the +1 eigenvalue."""
    return np.array([(IDENTITY2 + observable) / 2, (IDENTITY2 - observable) / 2])


# -- RGB4 ------------------------------------------------------------------

# (source, first slot party, second slot party) and the slot order of each party.
RGB4_SOURCES = (("gamma", "B", "A"), ("alpha", "C", "B"), ("beta", "A", "C"))
RGB4_PARTY_SLOTS = {"A": ("beta", "gamma"), "B": ("gamma", "alpha"), "C": ("alpha", "beta")}


@dataclass(frozen=True)
class Rgb4Params:
    u: float
    lambda0: float = float(np.sqrt(2.0 / 3.0))
    visibilities: tuple[float, float, float] = (1.0, 1.0, 1.0)  # (v_alpha, v_beta, v_gamma)

    def __post_init__(self) -> None:
        _check_unit("u", self.u)
        if not 0.0 < self.lambda0 < 1.0:
            raise ParamOutOfRange(f"lambda0={self.lambda0!r} outside (0, 1)")
        if len(self.visibilities) != 3:
            raise ParamOutOfRange("visibilities must be (v_alpha, v_beta, v_gamma)")
        for name, v in zip(("v_alpha", "v_beta", "v_gamma"), self.visibilities):
            _check_unit(name, v)
        object.__setattr__(self, "visibilities", tuple(float(v) for v in self.visibilities))

    @property
    def lambda1(self) -> float:
        return float(np.sqrt(1.0 - self.lambda0**2))

    @property
    def v(self) -> float:
        return float(np.sqrt(max(0.0, 1.0 - self.u**2)))

    def with_visibilities(self, v_alpha: float, v_beta: float, v_gamma: float) -> "Rgb4Params":
        return Rgb4Params(self.u, self.lambda0, (v_alpha, v_beta, v_gamma))


def rgb4_basis(u: float) -> np.ndarray:
    """Rows are |00>, u|01>+v|10>, v|01>-u|10>, |11> for outcomes 0..3."""
    u = _check_unit("u", u)
    v = np.sqrt(max(0.0, 1.0 - u * u))
    return np.array([[1, 0, 0, 0], [0, u, v, 0], [0, v, -u, 0], [0, 0, 0, 1]], dtype=complex)


def rgb4_strategy(p: Rgb4Params) -> QuantumStrategy:
    net = triangle_network(4)
    vis = dict(zip(("alpha", "beta", "gamma"), p.visibilities))
    ket = np.array([0.0, p.lambda0, p.lambda1, 0.0])
    states = {}
    for src, first, second in RGB4_SOURCES:
        layout = SubsystemLayout.of([slot_label(src, first), slot_label(src, second)])
        states[src] = depolarize(DensityOperator.from_ket(layout, ket), vis[src])
    basis = rgb4_basis(p.u)
    povms = {
        party: Povm.projective(SubsystemLayout.of([slot_label(s, party) for s in srcs]), basis)
        for party, srcs in RGB4_PARTY_SLOTS.items()
    }
    return QuantumStrategy(net, states, povms)


RGB4_SPLIT = (("gamma", "A"),)


def rgb4_tables(p: Rgb4Params) -> tuple[Behavior, Behavior]:
    """``(P_obs, P_int)`` with the interventional table from splitting gamma -> A."""
    strategy = rgb4_strategy(p)
    return quantum_behavior(strategy), interventional_behavior(strategy, RGB4_SPLIT)


# -- Fritz -----------------------------------------------------------------


@dataclass(frozen=True)
class FritzParams:
    epsilon: float
    visibility: float = 1.0

    def __post_init__(self) -> None:
        _check_unit("epsilon", self.epsilon)
        _check_unit("visibility", self.visibility)


def fritz_strategy(p: FritzParams) -> QuantumStrategy:
    """Alice's setting is beta, Bob's is alpha; Charlie outputs ``alpha * beta``.

    With the shared state (|00>+|11>)/sqrt(2), Alice measuring sigma_x / sigma_z
    for beta = 0 / 1 and Bob (sigma_z - sigma_x)/sqrt(2) / (sigma_z + sigma_x)/sqrt(2)
    for alpha = 0 / 1 gives <A0 B0> = -1/sqrt(2) and +1/sqrt(2) otherwise.
    """
    eps = p.epsilon
    net = triangle_network(2)
    bit = np.array([1.0 - eps, 0.0, 0.0, eps])  # perfectly correlated copies
    states = {
        "alpha": DensityOperator.diagonal(SubsystemLayout.of(["alpha:B", "alpha:C"]), bit),
        "beta": DensityOperator.diagonal(SubsystemLayout.of(["beta:A", "beta:C"]), bit),
        "gamma": depolarize(DensityOperator.from_ket(SubsystemLayout.of(["gamma:A", "gamma:B"]), PHI_PLUS), p.visibility),
    }
    proj0, proj1 = np.diag([1.0, 0.0]), np.diag([0.0, 1.0])
    alice = [binary_projectors(PAULI_X), binary_projectors(PAULI_Z)]
    bob = [binary_projectors((PAULI_Z - PAULI_X) / SQRT2), binary_projectors((PAULI_Z + PAULI_X) / SQRT2)]
    a_el = np.array([kron(proj0, alice[0][k]) + kron(proj1, alice[1][k]) for k in range(2)])
    b_el = np.array([kron(bob[0][k], proj0) + kron(bob[1][k], proj1) for k in range(2)])
    and_gate = np.diag([0.0, 0.0, 0.0, 1.0])
    c_el = np.array([np.eye(4) - and_gate, and_gate])
    povms = {
        "A": Povm(SubsystemLayout.of(["beta:A", "gamma:A"]), a_el),
        "B": Povm(SubsystemLayout.of(["gamma:B", "alpha:B"]), b_el),
        "C": Povm(SubsystemLayout.of(["alpha:C", "beta:C"]), c_el),
    }
    return QuantumStrategy(net, states, povms)


FRITZ_SPLITS = {
    "beta": (("beta", "A"),),
    "alpha": (("alpha", "B"),),
    "alphabeta": (("beta", "A"), ("alpha", "B")),
}


@dataclass(frozen=True, eq=False)
class FritzTables:
    obs: Behavior
    int_alpha: Behavior
    int_beta: Behavior
    int_alphabeta: Behavior

    def as_dict(self) -> dict[str, Behavior]:
        return {"obs": self.obs, "int_alpha": self.int_alpha, "int_beta": self.int_beta, "int_alphabeta": self.int_alphabeta}

    def __iter__(self):
        return iter((self.obs, self.int_alpha, self.int_beta, self.int_alphabeta))


def fritz_tables(p: FritzParams) -> FritzTables:
    strategy = fritz_strategy(p)
    return FritzTables(
        quantum_behavior(strategy),
        interventional_behavior(strategy, FRITZ_SPLITS["alpha"]),
        interventional_behavior(strategy, FRITZ_SPLITS["beta"]),
        interventional_behavior(strategy, FRITZ_SPLITS["alphabeta"]),
    )


# -- do-recovery demo scenarios ------------------------------------------


def instrumental_default() -> QuantumStrategy:
    """Maximally entangled pair; A measures sigma_z / sigma_x by x, B's CHSH pair is selected by a."""
    net = instrumental_network(2, 2)
    rho = DensityOperator.from_ket(SubsystemLayout.of(["rho:A", "rho:B"]), PHI_PLUS)
    a_el = np.array([binary_projectors(PAULI_Z), binary_projectors(PAULI_X)])
    b_el = np.array([binary_projectors((PAULI_Z + PAULI_X) / SQRT2), binary_projectors((PAULI_Z - PAULI_X) / SQRT2)])
    povms = {
        "A": Povm(SubsystemLayout.of(["rho:A"]), a_el, n_settings_axes=1),
        "B": Povm(SubsystemLayout.of(["rho:B"]), b_el, n_settings_axes=1),
    }
    return QuantumStrategy(net, {"rho": rho}, povms)


def instrumental_product() -> QuantumStrategy:
    """Same measurements on a product source."""
    base = instrumental_default()
    rho = DensityOperator.diagonal(SubsystemLayout.of(["rho:A", "rho:B"]), [0.3, 0.2, 0.3, 0.2])
    return QuantumStrategy(base.network, {"rho": rho}, base.povms)


def uc_default() -> QuantumStrategy:
    """B holds one half of two entangled pairs and measures their joint parity."""
    net = uc_network(2)
    states = {
        "gamma": DensityOperator.from_ket(SubsystemLayout.of(["gamma:A", "gamma:B"]), PHI_PLUS),
        "alpha": DensityOperator.from_ket(SubsystemLayout.of(["alpha:B", "alpha:C"]), PHI_PLUS),
    }
    mixed = 0.5 * (kron(PAULI_Z, PAULI_Z) + kron(PAULI_X, PAULI_X))
    b_obs = (mixed + mixed.conj().T) / 2
    w, vecs = np.linalg.eigh(b_obs)
    plus = vecs[:, w > 0] @ vecs[:, w > 0].conj().T
    b_el = np.array([plus, np.eye(4) - plus])
    a_el = np.array([binary_projectors(PAULI_Z), binary_projectors((PAULI_Z + PAULI_X) / SQRT2)])
    c_el = np.array([binary_projectors(PAULI_X), binary_projectors((PAULI_Z - PAULI_X) / SQRT2)])
    povms = {
        "A": Povm(SubsystemLayout.of(["gamma:A"]), a_el, n_settings_axes=1),
        "B": Povm(SubsystemLayout.of(["gamma:B", "alpha:B"]), b_el),
        "C": Povm(SubsystemLayout.of(["alpha:C"]), c_el, n_settings_axes=1),
    }
    return QuantumStrategy(net, states, povms)


# -- random models ---------------------------------------------------------


def random_density(layout: SubsystemLayout, rng: np.random.Generator, rank: int | None = None) -> DensityOperator:
    d = layout.total_dim
    g = rng.normal(size=(d, rank or d)) + 1j * rng.normal(size=(d, rank or d))
    m = g @ g.conj().T
    return DensityOperator(layout, m / np.trace(m).real)


def random_povm_elements(d: int, n_outcomes: int, rng: np.random.Generator) -> np.ndarray:
    """Random POVM ``S^{-1/2} G_k S^{-1/2}`` from Wishart blocks ``G_k``."""
    blocks = []
    for _ in range(n_outcomes):
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        blocks.append(g @ g.conj().T)
    total = sum(blocks)
    w, v = np.linalg.eigh(total)
    inv_sqrt = v @ np.diag(w**-0.5) @ v.conj().T
    elements = np.array([inv_sqrt @ b @ inv_sqrt for b in blocks])
    elements = (elements + np.conj(np.swapaxes(elements, -1, -2))) / 2
    # absorb the rounding residue into the last element
    elements[-1] += np.eye(d) - elements.sum(axis=0)
    return elements


def random_quantum_strategy(net: CausalNetwork, rng: np.random.Generator, slot_dim: int = 2) -> QuantumStrategy:
    states = {
        lam: random_density(SubsystemLayout.of([slot_label(lam, ch) for ch in net.children(lam)], slot_dim), rng)
        for lam in net.latent
    }
    povms = {}
    for party in net.parties:
        layout = SubsystemLayout.of(net.slots(party), slot_dim)
        settings = tuple(net.card(v) for v in net.observed_parents(party))
        n_settings = int(np.prod(settings, dtype=int))
        elements = np.array(
            [random_povm_elements(layout.total_dim, net.card(party), rng) for _ in range(n_settings)]
        ).reshape(settings + (net.card(party), layout.total_dim, layout.total_dim))
        povms[party] = Povm(layout, elements, n_settings_axes=len(settings))
    return QuantumStrategy(net, states, povms)


def random_network(
    rng: np.random.Generator,
    max_parties: int = 3,
    max_sources: int = 3,
    card: int = 2,
    allow_inputs: bool = True,
) -> CausalNetwork:
    """Random two-layer DAG: parties in a fixed order, observed edges only go forward."""
    n_parties = int(rng.integers(1, max_parties + 1))
    n_sources = int(rng.integers(1, max_sources + 1))
    parties = [f"P{i}" for i in range(n_parties)]
    latent = [f"L{j}" for j in range(n_sources)]
    edges: list[tuple[str, str]] = []
    for lam in latent:
        mask = rng.random(n_parties) < 0.6
        if not mask.any():
            mask[rng.integers(n_parties)] = True
        edges += [(lam, parties[i]) for i in np.flatnonzero(mask)]
    for i in range(n_parties):
        for j in range(i + 1, n_parties):
            if rng.random() < 0.35:
                edges.append((parties[i], parties[j]))
    inputs: list[tuple[str, int]] = []
    if allow_inputs and rng.random() < 0.3:
        inputs = [("X", 2)]
        edges.append(("X", parties[int(rng.integers(n_parties))]))
    return CausalNetwork(tuple((p, card) for p in parties), tuple(latent), tuple(edges), tuple(inputs))


def random_classical_model(
    net: CausalNetwork,
    rng: np.random.Generator,
    latent_card: int | Sequence[int] = 2,
    deterministic: bool = False,
) -> ClassicalModel:
    cards = [latent_card] * len(net.latent) if isinstance(latent_card, int) else list(latent_card)
    sources = {lam: rng.dirichlet(np.ones(k)) for lam, k in zip(net.latent, cards)}
    responses = {}
    for party in net.parties:
        shape = tuple(len(sources[lam]) for lam in net.latent_parents(party))
        shape += tuple(net.card(v) for v in net.observed_parents(party))
        k = net.card(party)
        if deterministic:
            responses[party] = np.eye(k)[rng.integers(0, k, size=shape)]
        else:
            responses[party] = rng.dirichlet(np.ones(k), size=shape) if shape else rng.dirichlet(np.ones(k))
    return ClassicalModel(sources, responses)


__all__ = [
    "Rgb4Params",
    "rgb4_basis",
    "rgb4_strategy",
    "rgb4_tables",
    "RGB4_SPLIT",
    "FritzParams",
    "FritzTables",
    "fritz_strategy",
    "fritz_tables",
    "FRITZ_SPLITS",
    "binary_projectors",
    "instrumental_default",
    "instrumental_product",
    "uc_default",
    "random_density",
    "random_povm_elements",
    "random_quantum_strategy",
    "random_network",
    "random_classical_model",
]
