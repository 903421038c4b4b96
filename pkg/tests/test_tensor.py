from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from latentsplit.errors import LayoutMismatch, UnknownLabel
from latentsplit.scenarios import Rgb4Params, random_density, rgb4_basis, rgb4_strategy
from latentsplit.network import quantum_behavior
from latentsplit.tensor import (
    DensityOperator,
    Povm,
    SubsystemLayout,
    born_rule,
    depolarize,
    kron,
    partial_trace,
    reduced_state,
    tensor_product,
)


def test_kron_index_formula():
    rng = np.random.default_rng(0)
    a = rng.normal(size=(2, 3))
    b = rng.normal(size=(3, 2))
    k = kron(a, b)
    for i in range(2):
        for j in range(3):
            for p in range(3):
                for q in range(2):
                    assert k[i * 3 + p, j * 2 + q] == pytest.approx(a[i, j] * b[p, q])


def test_partial_trace_of_product_returns_factor():
    rng = np.random.default_rng(1)
    ra = random_density(SubsystemLayout.of(["a"], [2]), rng)
    rb = random_density(SubsystemLayout.of(["b"], [3]), rng)
    joint = tensor_product(ra, rb)
    assert np.allclose(partial_trace(joint, ["b"]).matrix, ra.matrix)
    assert np.allclose(partial_trace(joint, ["a"]).matrix, rb.matrix)
    assert np.allclose(reduced_state(joint, ["b"]).matrix, rb.matrix)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(2, 3), min_size=2, max_size=3), st.integers(0, 2**31 - 1))
def test_partial_trace_preserves_trace_and_positivity(dims, seed):
    rng = np.random.default_rng(seed)
    labels = [f"s{i}" for i in range(len(dims))]
    rho = random_density(SubsystemLayout.of(labels, dims), rng)
    red = partial_trace(rho, labels[:1])
    assert np.trace(red.matrix).real == pytest.approx(1.0, abs=1e-12)
    assert red.is_positive()
    # tracing in two steps equals tracing at once
    two = partial_trace(partial_trace(rho, labels[:1]), labels[1:2])
    one = partial_trace(rho, labels[:2])
    assert np.allclose(two.matrix, one.matrix)


def test_permute_is_consistent_with_partial_trace():
    rng = np.random.default_rng(2)
    rho = random_density(SubsystemLayout.of(["x", "y", "z"], [2, 3, 2]), rng)
    perm = rho.permute(["z", "x", "y"])
    assert perm.layout.labels == ("z", "x", "y")
    assert np.allclose(partial_trace(perm, ["x"]).permute(["y", "z"]).matrix, partial_trace(rho, ["x"]).matrix)


def test_rgb4_source_single_slot_marginal():
    strat = rgb4_strategy(Rgb4Params(0.85))
    for source, state in strat.states.items():
        label = state.layout.labels[0]
        red = reduced_state(state, [label])
        assert np.allclose(red.matrix, np.diag([2 / 3, 1 / 3]), atol=1e-12), source


def test_depolarize_endpoints():
    rho = DensityOperator.from_ket(SubsystemLayout.of(["a", "b"]), np.array([1, 0, 0, 1]) / np.sqrt(2))
    assert np.allclose(depolarize(rho, 1.0).matrix, rho.matrix)
    assert np.allclose(depolarize(rho, 0.0).matrix, np.eye(4) / 4)


def test_invalid_state_rejected():
    with pytest.raises(ValueError):
        DensityOperator(SubsystemLayout.of(["a"]), np.array([[2.0, 0], [0, -1.0]]), validate=True)
    with pytest.raises(UnknownLabel):
        partial_trace(DensityOperator.maximally_mixed(SubsystemLayout.of(["a"])), ["nope"])


def test_layout_mismatch_in_povm():
    with pytest.raises((LayoutMismatch, ValueError)):
        Povm(SubsystemLayout.of(["a"]), np.stack([np.eye(3), np.zeros((3, 3))]))


def _rgb4_oracle(u: float) -> np.ndarray:
    """Amplitude sum over the six qubits of three pure sources, no tensor machinery."""
    psi = np.zeros((2, 2))
    psi[0, 1], psi[1, 0] = np.sqrt(2 / 3), np.sqrt(1 / 3)
    m = rgb4_basis(u).conj().reshape(4, 2, 2)  # outcome, first slot, second slot
    # gamma=(gB, gA)=(p, q), alpha=(aC, aB)=(r, s), beta=(bA, bC)=(t, w)
    # A reads (beta, gamma)=(t, q), B reads (gamma, alpha)=(p, s), C reads (alpha, beta)=(r, w)
    amp = np.einsum("pq,rs,tw,atq,bps,crw->abc", psi, psi, psi, m, m, m)
    return np.abs(amp) ** 2


@pytest.mark.parametrize("u", [1.0, 0.85, 0.3])
def test_born_rule_matches_amplitude_oracle(u):
    got = quantum_behavior(rgb4_strategy(Rgb4Params(u)))
    assert got.parties == ("A", "B", "C")
    assert np.allclose(got.table, _rgb4_oracle(u), atol=1e-12)


def test_born_rule_with_settings_is_conditional():
    layout = SubsystemLayout.of(["q"])
    z = Povm.projective(layout, np.eye(2))
    x = Povm.projective(layout, np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    both = Povm.conditioned(layout, [z, x])
    rho = DensityOperator.from_ket(layout, [1, 0])
    b = born_rule(rho, {"A": both}, settings={"A": ("X",)}, inputs=[("X", 2)])
    assert b.conditions == ("X",)
    assert np.allclose(b.table, [[1.0, 0.5], [0.0, 0.5]])
