"""Joint observational+interventional DAGs and their inflations."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import permutations, product
from typing import Any, Iterable, Mapping, Sequence

from ..errors import NotAnEdge, WiringInconsistent
from ..network import CausalNetwork, triangle_network
from ..splitting import SplitSequence, SplitSpec, split_latent_name


def hatted(party: str) -> str:
    """Name of the post-intervention copy of ``party`` in a joint DAG."""
    return f"{party}_hat"


def build_joint_dag(net: CausalNetwork, splits: Iterable[SplitSpec | Sequence[str]]) -> CausalNetwork:
    """Original network plus one hatted party per split party.

    The hatted copy keeps every parent of the original party except the split
    sources, each of which is replaced by a fresh latent with the same
    distribution. Splits on the same party share one hatted copy.
    """
    seq = SplitSequence(splits)
    if not seq:
        return net
    by_party: dict[str, list[str]] = {}
    for spec in seq:
        if spec.source not in net.latent or not net.has_edge(spec.source, spec.party):
            raise NotAnEdge(f"{spec.source}->{spec.party} is not a latent edge of the network")
        by_party.setdefault(spec.party, []).append(spec.source)
    observed = list(net.observed)
    latent = list(net.latent)
    edges = list(net.edges)
    for party, sources in by_party.items():
        hat = hatted(party)
        observed.append((hat, net.card(party)))
        for lam in net.latent_parents(party):
            if lam in sources:
                fresh = split_latent_name(lam, party)
                latent.append(fresh)
                edges.append((fresh, hat))
            else:
                edges.append((lam, hat))
        edges.extend((o, hat) for o in net.observed_parents(party))
    return CausalNetwork(tuple(observed), tuple(latent), tuple(edges), net.inputs)


def copy_name(latent: str, copy: int) -> str:
    return f"{latent}^{copy}"


@dataclass(frozen=True)
class InflatedNode:
    name: str
    original: str
    sources: tuple[tuple[str, int], ...]  # (original latent, copy index), in joint declaration order

    def copy_of(self, latent: str) -> int:
        for lam, k in self.sources:
            if lam == latent:
                return k
        raise KeyError(latent)


@dataclass(frozen=True)
class InflationGraph:
    joint: CausalNetwork
    nodes: tuple[InflatedNode, ...]

    def __post_init__(self) -> None:
        joint = self.joint
        if joint.inputs or any(joint.is_party(u) for u, _ in joint.edges):
            raise WiringInconsistent("inflations are only built for networks without observed edges or inputs")
        names = [n.name for n in self.nodes]
        if len(set(names)) != len(names):
            raise WiringInconsistent(f"duplicate inflated node names: {names}")
        fixed = []
        for node in self.nodes:
            if not joint.is_party(node.original):
                raise WiringInconsistent(f"{node.name!r} copies {node.original!r}, which is not an observed node")
            given = dict(node.sources)
            expected = joint.latent_parents(node.original)
            if set(given) != set(expected) or len(given) != len(node.sources):
                raise WiringInconsistent(
                    f"{node.name!r} receives copies of {sorted(given)}, but {node.original!r} has latent parents "
                    f"{sorted(expected)}"
                )
            if any(int(k) < 0 for k in given.values()):
                raise WiringInconsistent("copy indices must be non-negative")
            fixed.append(InflatedNode(node.name, node.original, tuple((lam, int(given[lam])) for lam in expected)))
        object.__setattr__(self, "nodes", tuple(fixed))

    # -- views -------------------------------------------------------------

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n.name for n in self.nodes)

    @property
    def cards(self) -> tuple[int, ...]:
        return tuple(self.joint.card(n.original) for n in self.nodes)

    @property
    def n_variables(self) -> int:
        total = 1
        for c in self.cards:
            total *= c
        return total

    @property
    def latent_copies(self) -> tuple[tuple[str, int], ...]:
        seen = {pair for node in self.nodes for pair in node.sources}
        return tuple(sorted(seen, key=lambda p: (self.joint.latent.index(p[0]), p[1])))

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return tuple((copy_name(lam, k), node.name) for node in self.nodes for lam, k in node.sources)

    @property
    def copy_map(self) -> dict[str, str]:
        out = {copy_name(lam, k): lam for lam, k in self.latent_copies}
        out.update({n.name: n.original for n in self.nodes})
        return out

    def index(self, name: str) -> int:
        return self.names.index(name)

    def symmetries(self) -> list[tuple[int, ...]]:
        """Node permutations induced by relabeling copies of each latent.

        Entry ``perm[i]`` is the index of the image of node ``i``. The identity
        is excluded and duplicates are removed.
        """
        copies: dict[str, list[int]] = {}
        for lam, k in self.latent_copies:
            copies.setdefault(lam, []).append(k)
        lams = list(copies)
        lookup = {(n.original, n.sources): i for i, n in enumerate(self.nodes)}
        found: list[tuple[int, ...]] = []
        identity = tuple(range(len(self.nodes)))
        for choice in product(*(list(permutations(copies[lam])) for lam in lams)):
            relabel = {lam: dict(zip(copies[lam], perm)) for lam, perm in zip(lams, choice)}
            image = []
            for node in self.nodes:
                key = (node.original, tuple((lam, relabel[lam][k]) for lam, k in node.sources))
                if key not in lookup:
                    break
                image.append(lookup[key])
            else:
                perm = tuple(image)
                if perm != identity and perm not in found:
                    found.append(perm)
        return found

    # -- serialization -----------------------------------------------------

    def to_json(self) -> dict:
        return {
            "joint": self.joint.to_json(),
            "nodes": [{"name": n.name, "original": n.original, "sources": dict(n.sources)} for n in self.nodes],
        }

    @classmethod
    def from_json(cls, data: Mapping[str, Any], joint: CausalNetwork | None = None) -> "InflationGraph":
        if joint is None:
            joint = CausalNetwork.from_json(data["joint"])
        nodes = tuple(
            InflatedNode(n["name"], n["original"], tuple((lam, int(k)) for lam, k in n["sources"].items()))
            for n in data["nodes"]
        )
        return cls(joint, nodes)


# -- presets ---------------------------------------------------------------


def trivial_inflation(joint: CausalNetwork) -> InflationGraph:
    """One copy of everything: the joint DAG itself."""
    return InflationGraph(
        joint,
        tuple(InflatedNode(p, p, tuple((lam, 0) for lam in joint.latent_parents(p))) for p in joint.parties),
    )


def rgb4_joint() -> CausalNetwork:
    return build_joint_dag(triangle_network(4), [("gamma", "A")])


def rgb4_fig5_inflation(shared_hat: bool = False, joint: CausalNetwork | None = None) -> InflationGraph:
    """Second copy of beta only; the two hatted A copies use independent fresh gamma copies.

    ``shared_hat=True`` feeds both hatted copies from the same fresh copy instead.
    """
    joint = rgb4_joint() if joint is None else joint
    g_hat = split_latent_name("gamma", "A")
    a_hat = hatted("A")
    spec = [
        ("A^0", "A", {"beta": 0, "gamma": 0}),
        ("A_hat^00", a_hat, {"beta": 0, g_hat: 0}),
        ("B^0", "B", {"gamma": 0, "alpha": 0}),
        ("C^0", "C", {"alpha": 0, "beta": 0}),
        ("A^01", "A", {"beta": 1, "gamma": 0}),
        ("A_hat^01", a_hat, {"beta": 1, g_hat: 0 if shared_hat else 1}),
        ("C^10", "C", {"alpha": 0, "beta": 1}),
    ]
    return InflationGraph(joint, tuple(InflatedNode(n, o, tuple(s.items())) for n, o, s in spec))


def carrot_joint(card: int = 2) -> CausalNetwork:
    return build_joint_dag(triangle_network(card), [("beta", "A"), ("alpha", "B")])


def carrot_inflation(joint: CausalNetwork | None = None) -> InflationGraph:
    return trivial_inflation(carrot_joint() if joint is None else joint)


PRESETS = ("trivial", "rgb4-fig5", "rgb4-fig5-shared", "carrot")


def build_inflation(joint: CausalNetwork, wiring: str | Mapping[str, Any]) -> InflationGraph:
    """Inflation of ``joint`` from a preset name or a JSON wiring ``{"nodes": [...]}``."""
    if isinstance(wiring, Mapping):
        return InflationGraph.from_json(wiring, joint)
    if wiring == "trivial":
        return trivial_inflation(joint)
    if wiring in ("rgb4-fig5", "rgb4-fig5-shared"):
        return rgb4_fig5_inflation(shared_hat=wiring.endswith("shared"), joint=joint)
    if wiring == "carrot":
        return carrot_inflation(joint)
    raise WiringInconsistent(f"unknown inflation preset {wiring!r}; choose from {PRESETS}")
