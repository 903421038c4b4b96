"""Latent splitting, interventional behaviors and do-conditional recovery.

Splitting the edge ``source -> party`` discards the party's share of the
source and hands the party a fresh, independent system instead. By default
the fresh system is prepared in the party's own reduced state of that source
(``ObservedMarginal``); a custom state may be supplied instead.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .behavior import Behavior
from .errors import LayoutMismatch, NotAnEdge, UnknownParty, ZeroDivisor
from .network import CausalNetwork, QuantumStrategy, quantum_behavior, slot_label
from .tensor import DensityOperator, partial_trace, reduced_state

DIVISOR_TOL = 1e-9


def split_latent_name(source: str, party: str) -> str:
    return f"ĥ{source}->{party}"


@dataclass(frozen=True, eq=False)
class SplitSpec:
    """Split ``source -> party``; ``replacement=None`` re-prepares the observed marginal."""

    source: str
    party: str
    replacement: DensityOperator | None = None

    @property
    def edge(self) -> tuple[str, str]:
        return (self.source, self.party)

    @property
    def fresh_latent(self) -> str:
        return split_latent_name(self.source, self.party)


class SplitSequence(tuple):
    """Ordered splits with no repeated edge."""

    def __new__(cls, specs: Iterable[SplitSpec | Sequence[str]] = ()) -> "SplitSequence":
        items = tuple(s if isinstance(s, SplitSpec) else SplitSpec(str(s[0]), str(s[1])) for s in specs)
        edges = [s.edge for s in items]
        if len(set(edges)) != len(edges):
            raise ValueError(f"duplicate split edges in {edges}")
        return super().__new__(cls, items)

    def to_json(self) -> list[list[str]]:
        return [[s.source, s.party] for s in self]

    @classmethod
    def from_json(cls, data: Sequence[Sequence[str]]) -> "SplitSequence":
        return cls(data)


def split_network(net: CausalNetwork, source: str, party: str) -> CausalNetwork:
    """Graph part of a split: sever ``source -> party`` and add the fresh latent."""
    if source not in net.latent or not net.has_edge(source, party):
        raise NotAnEdge(f"{source}->{party} is not a latent edge of the network")
    fresh = split_latent_name(source, party)
    if fresh in net.latent:
        raise NotAnEdge(f"{source}->{party} was already split")
    edges = [e for e in net.edges if e != (source, party)] + [(fresh, party)]
    latent: list[str] = []
    for lam in net.latent:
        if lam != source or len(net.children(source)) > 1:
            latent.append(lam)
        if lam == source:
            latent.append(fresh)
    return net.replace(latent=latent, edges=edges)


def split_state(strategy: QuantumStrategy, spec: SplitSpec) -> QuantumStrategy:
    net = strategy.network
    new_net = split_network(net, spec.source, spec.party)
    rho = strategy.states[spec.source]
    old_slot = slot_label(spec.source, spec.party)
    new_slot = slot_label(spec.fresh_latent, spec.party)
    if spec.replacement is None:
        hat = reduced_state(rho, [old_slot])
    else:
        if spec.replacement.layout.dims != (rho.layout.dim(old_slot),):
            raise LayoutMismatch(
                f"replacement state has dims {spec.replacement.layout.dims}, slot {old_slot!r} "
                f"has dim {rho.layout.dim(old_slot)}"
            )
        hat = spec.replacement
    hat = DensityOperator(hat.layout.relabel({hat.layout.labels[0]: new_slot}), hat.matrix)
    states = dict(strategy.states)
    if spec.source in new_net.latent:
        states[spec.source] = partial_trace(rho, [old_slot])
    else:
        del states[spec.source]
    states[spec.fresh_latent] = hat
    povms = dict(strategy.povms)
    povms[spec.party] = povms[spec.party].relabel({old_slot: new_slot})
    return QuantumStrategy(new_net, states, povms)


def apply_splits(strategy: QuantumStrategy, seq: Iterable[SplitSpec | Sequence[str]]) -> QuantumStrategy:
    for spec in SplitSequence(seq):
        strategy = split_state(strategy, spec)
    return strategy


def interventional_behavior(strategy: QuantumStrategy, seq: Iterable[SplitSpec | Sequence[str]]) -> Behavior:
    return quantum_behavior(apply_splits(strategy, seq))


def isolating_splits(net: CausalNetwork, party: str) -> SplitSequence:
    """Split every latent edge into ``party``."""
    if not net.is_party(party):
        raise UnknownParty(party)
    return SplitSequence((lam, party) for lam in net.latent_parents(party))


# -- do-conditional recovery -----------------------------------------------


def _aligned(values: np.ndarray, names: Sequence[str], target_names: Sequence[str]) -> np.ndarray:
    """Transpose/reshape ``values`` (axes named ``names``) to broadcast against ``target_names``."""
    order = [names.index(n) for n in target_names if n in names]
    moved = np.transpose(values, order)
    shape = [values.shape[names.index(n)] if n in names else 1 for n in target_names]
    return moved.reshape(shape)


def recover_do_from_data(
    net: CausalNetwork,
    target: str,
    observational: Behavior,
    interventional: Callable[[str], Behavior],
    _cache: dict[str, Behavior] | None = None,
) -> Behavior:
    """``P(rest | inputs, do(target))`` from observational and split statistics only.

    ``interventional(party)`` must return the behavior after splitting every
    latent edge into ``party``. With all its shares re-prepared, the party's
    outcome is independent of everything but its observed parents, so
    ``P_int = P(target | do(pa)) * P(rest | do(target))``. The first factor is
    recovered inductively along the observed-edge order: a root party reads it
    off ``P_obs``; a party with one observed parent takes it from that
    parent's recovered do-conditional; with several observed parents it is the
    conditional ``P_int(target | pa)``, which equals the same factor because
    parents are never descendants of the target.
    """
    if not net.is_party(target):
        raise UnknownParty(target)
    cache = {} if _cache is None else _cache
    if target in cache:
        return cache[target]
    p_int = interventional(target)
    names = list(p_int.parties + p_int.conditions)
    inputs = list(net.input_names)
    parents = net.party_parents(target)

    if not parents:
        div = observational.marginal([target])
        div_names = [target] + list(div.conditions)
        div_table = div.table
    elif len(parents) == 1:
        upstream = recover_do_from_data(net, parents[0], observational, interventional, cache)
        div = upstream.marginal([target])
        div_names = [target] + list(div.conditions)
        div_table = div.table
    else:
        joint = p_int.marginal([target, *parents])
        denom = joint.table.sum(axis=0, keepdims=True)
        if np.min(denom) < DIVISOR_TOL:
            raise ZeroDivisor(f"P_int({','.join(parents)}) vanishes; do({target}) not identifiable")
        div_names = [target, *parents] + list(joint.conditions)
        div_table = joint.table / denom

    bad = np.argwhere(div_table < DIVISOR_TOL)
    if bad.size:
        event = {n: int(v) for n, v in zip(div_names, bad[0])}
        raise ZeroDivisor(f"P({target} | do(parents)) < {DIVISOR_TOL:g} at {event}", event)
    table = p_int.table / _aligned(div_table, div_names, names)
    axis = names.index(target)
    table = np.moveaxis(table, axis, -1)
    rest = tuple(p for p in p_int.parties if p != target)
    result = Behavior(
        rest,
        tuple(net.card(p) for p in rest),
        table,
        tuple(inputs) + (target,),
        tuple(net.card(n) for n in inputs) + (net.card(target),),
    )
    cache[target] = result
    return result


def recover_do(strategy: QuantumStrategy, target: str) -> Behavior:
    """Do-conditional for ``target`` recovered from split experiments on ``strategy``."""
    net = strategy.network
    if not net.is_party(target):
        raise UnknownParty(target)
    p_obs = quantum_behavior(strategy)
    return recover_do_from_data(
        net,
        target,
        p_obs,
        lambda party: interventional_behavior(strategy, isolating_splits(net, party)),
    )


__all__ = [
    "SplitSpec",
    "SplitSequence",
    "split_latent_name",
    "split_network",
    "split_state",
    "apply_splits",
    "interventional_behavior",
    "isolating_splits",
    "recover_do",
    "recover_do_from_data",
]

