from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from latentsplit.behavior import Behavior, uniform_behavior
from latentsplit.errors import CardinalityMismatch, ParamOutOfRange
from latentsplit.fritz import (
    EPSILON_STAR,
    FritzCorrelators,
    classical_sanity,
    closed_form_SQ,
    correlators,
    epsilon_threshold,
    evaluate_S,
    model_S,
    table_pipeline_S,
    v_min,
)
from latentsplit.scenarios import FritzParams, Rgb4Params, fritz_tables

SQRT2 = np.sqrt(2)


def test_correlators_at_eps_03():
    corr = correlators(fritz_tables(FritzParams(0.3)))
    assert corr.E_obs_c[1] == pytest.approx(0.09 / SQRT2, abs=1e-12)
    assert corr.E_alphabeta == pytest.approx(0.02 / SQRT2, abs=1e-12)
    assert corr.P_obs_c1 == pytest.approx(0.09, abs=1e-12)


def test_independent_fair_coins_give_zero_correlators():
    t = uniform_behavior(("A", "B", "C"), (2, 2, 2))
    corr = correlators([t] * 4)
    assert corr.E_obs_c == (0.0, 0.0) and corr.E_alphabeta == 0.0


def test_non_binary_rejected():
    t = uniform_behavior(("A", "B", "C"), (2, 3, 2))
    with pytest.raises(CardinalityMismatch):
        correlators([t] * 4)


def test_evaluate_S_reference_points():
    assert evaluate_S(FritzCorrelators.zero()) == 0.0
    e = 0.2
    expected = (4 / SQRT2) * (e - 1) * e**2 - (2 / SQRT2) * e**4 + 2 * e**2
    assert table_pipeline_S(0.2) == pytest.approx(expected, abs=1e-12)
    assert table_pipeline_S(0.2) == pytest.approx(-0.012772, abs=1e-6)
    assert table_pipeline_S(0.5) > 0


def test_closed_form_root_and_vmin():
    assert closed_form_SQ(0.0) == 0.0
    root = brentq(closed_form_SQ, 0.2, 0.5, xtol=1e-14)
    assert root == pytest.approx(1 - np.sqrt(np.sqrt(2) - 1), abs=1e-10)
    assert EPSILON_STAR == pytest.approx(0.3564, abs=1e-4)
    for e in (0.05, 0.2, 0.3):
        assert closed_form_SQ(e, v_min(e)) == pytest.approx(0.0, abs=1e-14)
        assert epsilon_threshold(v_min(e)) == pytest.approx(e, abs=1e-12)
    with pytest.raises(ParamOutOfRange):
        closed_form_SQ(1.5)


def test_ab_marginals_agree_across_tables():
    tables = list(fritz_tables(FritzParams(0.27, 0.93)))
    base = tables[0].marginal(["A", "B"]).table
    for t in tables[1:]:
        assert np.allclose(t.marginal(["A", "B"]).table, base, atol=1e-12)


def test_params_validated():
    with pytest.raises(ParamOutOfRange):
        FritzParams(-0.1)
    with pytest.raises(ParamOutOfRange):
        Rgb4Params(1.2)


def _constant(value: int) -> np.ndarray:
    r = np.zeros((4, 4, 2))
    r[..., value] = 1.0
    return r


@pytest.mark.parametrize("a,b,c,expected", [(0, 0, 1, 0.0), (0, 0, 0, 0.0), (0, 1, 1, 4.0), (1, 1, 1, 0.0)])
def test_point_mass_model_by_hand(a, b, c, expected):
    # constant outputs: every agreement term is +1 (a == b) or -1, restricted to c
    src = np.full(4, 0.25)
    assert model_S(src, src, src, _constant(a), _constant(b), _constant(c)) == pytest.approx(expected)


def test_sanity_report_shapes():
    empty = classical_sanity(0.2, 0, 7)
    assert empty.verdict is None and empty.min_S is None
    rep = classical_sanity(0.2, 3000, 7)
    assert rep.verdict == "ok" and rep.counterexamples == 0
    assert rep.min_S >= -1e-9
    again = classical_sanity(0.2, 3000, 7)
    assert again.argmin_model_digest == rep.argmin_model_digest
    assert '"verdict": "ok"' in rep.dumps()


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 1.0), st.integers(0, 2**31 - 1))
def test_random_classical_model_never_violates(eps, seed):
    rng = np.random.default_rng(seed)
    hidden = lambda: rng.dirichlet(np.ones(2), size=2)
    w = np.array([1 - eps, eps])
    pa = (w[:, None] * hidden()).reshape(4)
    pb = (w[:, None] * hidden()).reshape(4)
    pg = rng.dirichlet(np.ones(4))
    resp = [rng.dirichlet(np.ones(2), size=(4, 4)) for _ in range(3)]
    assert model_S(pa, pb, pg, *resp) >= -1e-9


def test_behavior_type_is_returned():
    assert all(isinstance(t, Behavior) for t in fritz_tables(FritzParams(0.1)))
