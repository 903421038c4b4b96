from __future__ import annotations

import itertools
import json

import numpy as np
import pytest

from latentsplit.errors import LatentSplitError, ModelMismatch
from latentsplit.network import (
    CausalNetwork,
    ClassicalModel,
    classical_behavior,
    embed_classical,
    instrumental_network,
    quantum_behavior,
    strategy_from_json,
    strategy_to_json,
    triangle_network,
    uc_network,
)
from latentsplit.scenarios import (
    Rgb4Params,
    instrumental_default,
    random_classical_model,
    random_network,
    rgb4_strategy,
    rgb4_tables,
)


def _xor_model(net: CausalNetwork) -> ClassicalModel:
    sources = {lam: np.array([0.5, 0.5]) for lam in net.latent}
    responses = {}
    for p in net.parties:
        r = np.zeros((2, 2, 2))
        for x, y in itertools.product(range(2), repeat=2):
            r[x, y, x ^ y] = 1.0
        responses[p] = r
    return ClassicalModel(sources, responses)


def test_triangle_xor_matches_enumeration():
    net = triangle_network()
    got = classical_behavior(net, _xor_model(net))
    expected = np.zeros((2, 2, 2))
    for al, be, ga in itertools.product(range(2), repeat=3):
        expected[be ^ ga, ga ^ al, al ^ be] += 1 / 8
    assert np.allclose(got.table, expected)
    # parity of the three outputs is always even
    assert got.table[1, 1, 1] == 0 and got.table[1, 0, 0] == 0


def test_classical_embedding_reproduces_classical_behavior():
    rng = np.random.default_rng(3)
    for _ in range(10):
        net = random_network(rng)
        model = random_classical_model(net, rng, latent_card=2)
        assert np.allclose(quantum_behavior(embed_classical(net, model)).table, classical_behavior(net, model).table)


def test_model_mismatch():
    net = triangle_network()
    model = _xor_model(net)
    with pytest.raises(ModelMismatch):
        classical_behavior(uc_network(), model)
    with pytest.raises(ModelMismatch):
        ClassicalModel({"l": np.array([0.7, 0.7])}, {})


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(observed=(("A", 2),), latent=("l",), edges=(("l", "B"),)),  # unknown node
        dict(observed=(("A", 2), ("B", 2)), latent=("l",), edges=(("l", "A"), ("A", "B"), ("B", "A"))),  # cycle
        dict(observed=(("A", 2),), latent=("l", "m"), edges=(("l", "A"),)),  # latent without child
        dict(observed=(("A", 2), ("A", 2)), latent=("l",), edges=(("l", "A"),)),  # duplicate
    ],
)
def test_network_validation(kwargs):
    with pytest.raises((ValueError, LatentSplitError)):
        CausalNetwork(**kwargs)


def test_network_accessors():
    net = instrumental_network()
    assert net.parties == ("A", "B")
    assert net.party_parents("B") == ("A",)
    assert net.observed_parents("A") == ("X",)
    assert net.topological_order().index("A") < net.topological_order().index("B")
    assert CausalNetwork.from_json(json.loads(json.dumps(net.to_json()))) == net


def test_rgb4_cyclic_invariance():
    t = quantum_behavior(rgb4_strategy(Rgb4Params(0.6))).table
    assert np.allclose(t, t.transpose(1, 2, 0), atol=1e-13)


def test_rgb4_smooth_in_u():
    us = np.linspace(0.1, 0.9, 9)
    tables = np.array([rgb4_tables(Rgb4Params(u))[0].table for u in us])
    second = tables[2:] - 2 * tables[1:-1] + tables[:-2]
    assert np.max(np.abs(second)) < 0.05
    assert np.allclose(tables.sum(axis=(1, 2, 3)), 1.0)


def test_rgb4_visibility_is_affine():
    t = [rgb4_tables(Rgb4Params(0.85, visibilities=(v, 1.0, 1.0)))[0].table for v in (1.0, 0.5, 0.0)]
    assert np.allclose(t[1], 0.5 * (t[0] + t[2]), atol=1e-13)


def test_strategy_json_round_trip():
    s = instrumental_default()
    back = strategy_from_json(json.loads(json.dumps(strategy_to_json(s))))
    assert np.allclose(quantum_behavior(back).table, quantum_behavior(s).table)
