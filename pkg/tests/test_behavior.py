from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentsplit.behavior import Behavior, product_behavior, uniform_behavior


def _random_behavior(seed: int, cards=(2, 3, 4)) -> Behavior:
    rng = np.random.default_rng(seed)
    return Behavior(("A", "B", "C"), cards, rng.dirichlet(np.ones(int(np.prod(cards)))).reshape(cards))


def test_rejects_unnormalized():
    with pytest.raises(ValueError):
        Behavior(("A",), (2,), np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        Behavior(("A",), (2,), np.array([1.5, -0.5]))


def test_prob_with_event_sets():
    b = _random_behavior(0)
    assert b.prob({"A": 1, "C": [0, 2]}) == pytest.approx(b.table[1, :, [0, 2]].sum())
    assert b.prob({}) == pytest.approx(1.0)


def test_marginal_and_reorder():
    b = _random_behavior(1)
    assert np.allclose(b.marginal(["C", "A"]).table, b.table.sum(axis=1).T)
    assert b.reorder(["C", "B", "A"]).reorder(["A", "B", "C"]).allclose(b)


def test_product_behavior():
    a = uniform_behavior(["A"], [2])
    c = Behavior(("C",), (3,), np.array([0.2, 0.3, 0.5]))
    p = product_behavior(a, c)
    assert p.parties == ("A", "C")
    assert np.allclose(p.table, 0.5 * np.array([[0.2, 0.3, 0.5]] * 2))


def test_permute_outcomes_is_invertible():
    b = _random_behavior(2)
    perm = [2, 0, 3, 1]
    inverse = list(np.argsort(perm))
    assert b.permute_outcomes({"C": perm}).permute_outcomes({"C": inverse}).allclose(b)


def test_csv_header_and_round_trip():
    b = _random_behavior(3, (2, 2, 2))
    text = b.to_csv()
    assert text.splitlines()[0] == "a,b,c,p"
    back = Behavior.from_csv(text, (2, 2, 2))
    assert np.array_equal(back.table, b.table)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_json_round_trip_is_exact(seed):
    b = _random_behavior(seed)
    back = Behavior.from_json(json.loads(json.dumps(b.to_json())))
    assert np.array_equal(back.table, b.table) and back.parties == b.parties
