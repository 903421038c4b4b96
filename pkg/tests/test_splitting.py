from __future__ import annotations

import numpy as np
import pytest

from latentsplit.errors import LayoutMismatch, NotAnEdge, UnknownParty, ZeroDivisor
from latentsplit.network import QuantumStrategy, pearl_do_quantum, quantum_behavior, triangle_network
from latentsplit.scenarios import (
    Rgb4Params,
    instrumental_default,
    random_network,
    random_quantum_strategy,
    rgb4_strategy,
    uc_default,
)
from latentsplit.splitting import (
    SplitSequence,
    SplitSpec,
    apply_splits,
    interventional_behavior,
    isolating_splits,
    recover_do,
    split_latent_name,
    split_network,
)
from latentsplit.tensor import DensityOperator, SubsystemLayout


@pytest.fixture(scope="module")
def triangle_strategy() -> QuantumStrategy:
    return random_quantum_strategy(triangle_network(), np.random.default_rng(11))


def test_split_network_shape():
    net = split_network(triangle_network(), "gamma", "A")
    fresh = split_latent_name("gamma", "A")
    assert fresh in net.latent and "gamma" in net.latent
    assert net.has_edge(fresh, "A") and not net.has_edge("gamma", "A")
    assert net.children("gamma") == ("B",)


def test_split_errors():
    net = triangle_network()
    with pytest.raises(NotAnEdge):
        split_network(net, "alpha", "A")
    with pytest.raises(NotAnEdge):
        split_network(split_network(net, "gamma", "A"), "gamma", "A")
    with pytest.raises(ValueError):
        SplitSequence([("gamma", "A"), ("gamma", "A")])
    with pytest.raises(UnknownParty):
        isolating_splits(net, "Z")


def test_split_order_independence(triangle_strategy):
    seq = [("gamma", "A"), ("alpha", "B"), ("beta", "C")]
    first = interventional_behavior(triangle_strategy, seq)
    second = interventional_behavior(triangle_strategy, seq[::-1])
    assert np.allclose(first.table, second.table, atol=1e-13)


def test_split_keeps_single_party_marginals(triangle_strategy):
    obs = quantum_behavior(triangle_strategy)
    split = interventional_behavior(triangle_strategy, [("gamma", "A")])
    for p in ("A", "B", "C"):
        assert np.allclose(obs.marginal([p]).table, split.marginal([p]).table, atol=1e-13)
    assert np.allclose(obs.marginal(["B", "C"]).table, split.marginal(["B", "C"]).table, atol=1e-13)


def test_custom_replacement_is_affine(triangle_strategy):
    layout = SubsystemLayout.of(["q"])
    zero = DensityOperator.diagonal(layout, [1.0, 0.0])
    one = DensityOperator.diagonal(layout, [0.0, 1.0])
    mix = DensityOperator.diagonal(layout, [0.3, 0.7])
    tables = [
        interventional_behavior(triangle_strategy, [SplitSpec("gamma", "A", rho)]).table for rho in (zero, one, mix)
    ]
    assert np.allclose(tables[2], 0.3 * tables[0] + 0.7 * tables[1], atol=1e-13)
    assert not np.allclose(tables[0], tables[1])


def test_replacement_dimension_checked(triangle_strategy):
    bad = DensityOperator.maximally_mixed(SubsystemLayout.of(["q"], [3]))
    with pytest.raises(LayoutMismatch):
        apply_splits(triangle_strategy, [SplitSpec("gamma", "A", bad)])


def test_split_sequence_json_round_trip():
    seq = SplitSequence([("gamma", "A"), ("alpha", "B")])
    assert SplitSequence.from_json(seq.to_json()).to_json() == seq.to_json()


def test_triangle_do_equals_observational_marginal():
    strategy = rgb4_strategy(Rgb4Params(0.85))
    obs = quantum_behavior(strategy)
    for target, rest in (("A", ["B", "C"]), ("B", ["A", "C"]), ("C", ["A", "B"])):
        do = recover_do(strategy, target)
        assert do.conditions == (target,)
        marg = obs.marginal(rest).table
        for a in range(4):
            assert np.allclose(do.table[..., a], marg, atol=1e-13)


@pytest.mark.parametrize("factory", [instrumental_default, uc_default])
def test_recover_do_matches_pearl_on_defaults(factory):
    strategy = factory()
    for target in strategy.network.parties:
        assert np.allclose(recover_do(strategy, target).table, pearl_do_quantum(strategy, target).table, atol=1e-12)


def test_recover_do_matches_pearl_on_random_networks():
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(25):
        net = random_network(rng)
        strategy = random_quantum_strategy(net, rng)
        for target in net.parties:
            try:
                got = recover_do(strategy, target)
            except ZeroDivisor:
                continue
            assert got.max_abs_diff(pearl_do_quantum(strategy, target)) <= 1e-10
            checked += 1
    assert checked > 20


def test_zero_divisor_reports_event():
    base = instrumental_default()
    layout = base.states["rho"].layout
    frozen = QuantumStrategy(base.network, {"rho": DensityOperator.diagonal(layout, [1, 0, 0, 0])}, base.povms)
    with pytest.raises(ZeroDivisor) as info:
        recover_do(frozen, "A")
    assert info.value.event["A"] == 1
