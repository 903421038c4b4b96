from __future__ import annotations

import json

import numpy as np
import pytest
import scipy.sparse as sp

from latentsplit.behavior import uniform_behavior
from latentsplit.errors import NotAnEdge, NumericallyAmbiguous, UnknownAtomReference, UnknownBehaviorReference, WiringInconsistent
from latentsplit.inflation import (
    Atom,
    InflationGraph,
    KnownTable,
    WitnessPolynomial,
    build_inflation,
    build_joint_dag,
    build_lp,
    carrot_inflation,
    carrot_joint,
    certify_rgb4,
    evaluate_witness,
    expressible_sets,
    extract_witness,
    hatted,
    parse_lp_text,
    rgb4_fig5_inflation,
    rgb4_joint,
    rgb4_lp,
    rgb4_reference_witness,
    solve_feasibility,
    solve_standard_form,
    verify_certificate,
    verify_certificate_exact,
)
from latentsplit.network import triangle_network
from latentsplit.scenarios import Rgb4Params, rgb4_tables


@pytest.fixture(scope="module")
def cert085():
    return certify_rgb4(Rgb4Params(0.85))


# -- graphs ------------------------------------------------------------------


def test_joint_dag_single_split():
    joint = build_joint_dag(triangle_network(), [("gamma", "A")])
    assert set(joint.parties) == {"A", "A_hat", "B", "C"}
    assert len(joint.latent) == 4
    assert set(joint.latent_parents("A_hat")) == {"beta", joint.latent[-1]}
    assert build_joint_dag(triangle_network(), []) == triangle_network()
    with pytest.raises(NotAnEdge):
        build_joint_dag(triangle_network(), [("alpha", "A")])


def test_carrot_counts():
    joint = carrot_joint()
    assert set(joint.parties) == {"A", "A_hat", "B", "B_hat", "C"}
    assert len(joint.latent) == 5
    assert carrot_inflation().n_variables == 32


def test_fig5_inflation_shape():
    infl = rgb4_fig5_inflation()
    assert infl.names == ("A^0", "A_hat^00", "B^0", "C^0", "A^01", "A_hat^01", "C^10")
    assert infl.cards == (4,) * 7 and infl.n_variables == 4**7
    joint = rgb4_joint()
    cmap = infl.copy_map
    for u, v in infl.edges:
        assert cmap[u] in joint.latent and joint.is_party(cmap[v])  # kinds preserved
        assert joint.has_edge(cmap[u], cmap[v])


def test_trivial_preset_is_joint_dag():
    joint = rgb4_joint()
    infl = build_inflation(joint, "trivial")
    assert sorted(infl.copy_map[n] for n in infl.names) == sorted(joint.parties)
    assert infl.n_variables == 4**4


def test_inflation_json_round_trip_and_validation():
    infl = rgb4_fig5_inflation()
    data = json.loads(json.dumps(infl.to_json()))
    assert InflationGraph.from_json(data) == infl
    bad = json.loads(json.dumps(data))
    bad["nodes"][0]["sources"] = {"alpha": 0, "gamma": 0}  # A has no alpha parent
    with pytest.raises(WiringInconsistent):
        build_inflation(rgb4_joint(), bad)


# -- LP construction -----------------------------------------------------------

KNOWN_NODES = {"obs": ("A", "B", "C"), "int": (hatted("A"), "B", "C")}


def _ancestral_injective(infl: InflationGraph, names: list[str]) -> bool:
    """Oracle: distinct originals and at most one copy per original latent."""
    nodes = [infl.nodes[infl.index(n)] for n in names]
    if len({n.original for n in nodes}) != len(nodes):
        return False
    copies: dict[str, set[int]] = {}
    for n in nodes:
        for lam, k in n.sources:
            copies.setdefault(lam, set()).add(k)
    return all(len(v) == 1 for v in copies.values())


def test_injectable_pair_maps_to_obs():
    infl = rgb4_fig5_inflation()
    assert _ancestral_injective(infl, ["A^01", "C^10"])
    assert not _ancestral_injective(infl, ["A^0", "A^01"])
    pair = tuple(sorted((infl.index("A^01"), infl.index("C^10"))))
    sets = {s.nodes: s for s in expressible_sets(infl, KNOWN_NODES, maximal_only=False)}
    assert sets[pair].blocks == ((pair, "obs"),)


def test_feasible_point_reproduces_injectable_marginal():
    lp = rgb4_lp(Rgb4Params(0.85), obs_only=True)
    verdict = solve_feasibility(lp)
    assert verdict.feasible and lp.residual(verdict.point) <= 1e-9
    q = verdict.point.reshape((4,) * 7)
    infl = lp.template.infl
    keep = (infl.index("A^01"), infl.index("C^10"))
    drop = tuple(i for i in range(7) if i not in keep)
    p_obs = rgb4_tables(Rgb4Params(0.85))[0]
    assert np.allclose(q.sum(axis=drop), p_obs.marginal(["A", "C"]).table, atol=1e-8)


def test_known_rows_sum_to_normalization():
    lp = rgb4_lp(Rgb4Params(0.85))
    A = lp.A.tocsr()
    rows = [r for r in lp.rows_of_family("known") if "C^0" in lp.template.row_name(r) and "B^0" in lp.template.row_name(r) and "A^0=" in lp.template.row_name(r)]
    assert len(rows) == 64
    assert np.allclose(np.asarray(A[rows].sum(axis=0)).ravel(), A[lp.norm_row].toarray().ravel(), atol=1e-12)
    assert lp.b[rows].sum() == pytest.approx(1.0, abs=1e-12)
    assert lp.shape == (lp.A.shape[0], 16384)


def test_uniform_knowns_are_feasible():
    infl = rgb4_fig5_inflation()
    u = uniform_behavior(("A", "B", "C"), (4, 4, 4))
    lp = build_lp(infl, {"obs": KnownTable(u, KNOWN_NODES["obs"]), "int": KnownTable(u, KNOWN_NODES["int"])})
    assert lp.residual(np.full(16384, 1 / 16384)) <= 1e-12
    assert solve_feasibility(lp).feasible


def test_unknown_node_reference():
    u = uniform_behavior(("A", "B", "C"), (4, 4, 4))
    with pytest.raises(UnknownBehaviorReference):
        build_lp(rgb4_fig5_inflation(), {"obs": KnownTable(u, ("A", "Z", "C"))})


def test_lp_text_round_trip():
    p_obs, p_int = rgb4_tables(Rgb4Params(0.3))
    lp = build_lp(
        build_inflation(rgb4_joint(), "trivial"),
        {"obs": KnownTable(p_obs, KNOWN_NODES["obs"]), "int": KnownTable(p_int, KNOWN_NODES["int"])},
    )
    A, b, names = parse_lp_text(lp.to_text())
    assert names == list(lp.row_names())
    assert abs(A - lp.A).max() == 0
    assert np.allclose(b, lp.b, rtol=0, atol=1e-16)


# -- solver ----------------------------------------------------------------------


def _small_lps(seed: int):
    rng = np.random.default_rng(seed)
    for _ in range(8):
        m, n = rng.integers(2, 5), rng.integers(3, 7)
        A = np.vstack([np.ones(n), rng.integers(0, 2, size=(m - 1, n))]).astype(float)
        x = rng.dirichlet(np.ones(n)) * (rng.random(n) < 0.7)
        x = x / x.sum() if x.sum() else np.full(n, 1 / n)
        b = A @ x
        if rng.random() < 0.5:
            b = b + rng.normal(scale=0.3, size=m) * np.r_[0, np.ones(m - 1)]
        yield A, b


@pytest.mark.parametrize("seed", range(4))
def test_simplex_agrees_with_highs(seed):
    for A, b in _small_lps(seed):
        h = solve_standard_form(A, b, norm_row=0)
        s = solve_standard_form(A, b, norm_row=0, backend="simplex")
        e = solve_standard_form(A, b, norm_row=0, backend="simplex", exact=True)
        assert h.status == s.status == e.status
        if e.infeasible:
            assert verify_certificate(A, b, e.certificate).ok
            assert verify_certificate_exact(A, b, e.certificate)


def test_textbook_infeasible_certificate():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    b = np.array([1.0, 2.0])
    v = solve_standard_form(A, b, backend="simplex", exact=True)
    assert v.infeasible
    y = v.certificate
    assert np.all(A.T @ y >= 0) and b @ y < 0


def test_ambiguity_is_reported():
    A = np.array([[1.0, 1.0], [1.0, 1.0]])
    b = np.array([1.0, 1.0 + 1e-7])
    with pytest.raises(NumericallyAmbiguous):
        solve_standard_form(A, b, tol_feasible=1e-12, tol_certificate=1e-3)


def test_rgb4_verdicts(cert085):
    assert cert085.verdict.infeasible
    assert verify_certificate(cert085.lp.A, cert085.lp.b, cert085.verdict.certificate).ok
    assert solve_feasibility(rgb4_lp(Rgb4Params(0.85), obs_only=True)).feasible


def test_labeling_covariance():
    p_obs, p_int = rgb4_tables(Rgb4Params(0.85))
    perm = [3, 1, 0, 2]
    perms = {p: perm for p in ("A", "B", "C")}
    known = {
        "obs": KnownTable(p_obs.permute_outcomes(perms), KNOWN_NODES["obs"]),
        "int": KnownTable(p_int.permute_outcomes(perms), KNOWN_NODES["int"]),
    }
    assert solve_feasibility(build_lp(rgb4_fig5_inflation(), known)).infeasible


def test_symmetry_flag_changes_rows_not_verdict():
    with_sym = rgb4_lp(Rgb4Params(0.85))
    without = rgb4_lp(Rgb4Params(0.85), symmetry=False)
    assert without.shape[0] < with_sym.shape[0]
    assert len(without.rows_of_family("sym")) == 0
    assert solve_feasibility(without).infeasible


# -- witnesses -------------------------------------------------------------------


def test_witness_json_round_trip(cert085):
    w = cert085.witness
    back = WitnessPolynomial.from_json(json.loads(w.dumps()))
    knowns = {k: t.behavior for k, t in cert085.lp.knowns.items()}
    assert evaluate_witness(back, knowns) == pytest.approx(evaluate_witness(w, knowns), abs=1e-15)


def test_extracted_witness_value_equals_certificate_objective(cert085):
    assert cert085.witness_value == pytest.approx(cert085.verdict.check.bty, abs=1e-12)
    assert cert085.witness_value < 0


def test_zero_and_scaled_witness(cert085):
    knowns = {k: t.behavior for k, t in cert085.lp.knowns.items()}
    assert evaluate_witness(WitnessPolynomial(()), knowns) == 0.0
    w = cert085.witness
    assert evaluate_witness(w.scaled(2.0), knowns) == pytest.approx(2 * evaluate_witness(w, knowns))
    assert evaluate_witness(w.scaled(1e-13), knowns) == 0.0  # every coefficient dropped


def test_single_atom_is_marginal():
    p_obs, p_int = rgb4_tables(Rgb4Params(0.85))
    w = WitnessPolynomial.from_terms([(1.0, [("obs", {"a": 3})])])
    assert evaluate_witness(w, {"obs": p_obs, "int": p_int}) == pytest.approx(p_obs.table[3].sum())
    with pytest.raises(UnknownAtomReference):
        evaluate_witness(WitnessPolynomial.from_terms([(1.0, [("other", {"A": 0})])]), {"obs": p_obs})
    with pytest.raises(UnknownAtomReference):
        evaluate_witness(WitnessPolynomial.from_terms([(1.0, [("obs", {"Q": 0})])]), {"obs": p_obs})


def test_extract_rejects_feasible():
    lp = rgb4_lp(Rgb4Params(0.85), obs_only=True)
    with pytest.raises(ValueError):
        extract_witness(solve_feasibility(lp), lp)


def test_reference_witness_merges_duplicate_terms():
    w = rgb4_reference_witness()
    assert len(w.terms) == 8  # two pairs of opposite terms cancel
    assert Atom.of("obs", {"A": 3, "C": [2, 1]}).event == (("A", (3,)), ("C", (1, 2)))


def _classical_joint_pairs(n: int, k: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """obs = P(a,b,c) and int = P(a_hat,b,c) of random classical triangle models, batched."""
    pa, pb, pg = (rng.dirichlet(np.ones(k), size=n) for _ in range(3))

    def response() -> np.ndarray:
        stoch = rng.dirichlet(np.ones(4), size=(n, k, k))
        det = np.eye(4)[rng.integers(0, 4, size=(n, k, k))]
        return np.where((rng.random(n) < 0.5)[:, None, None, None], det, stoch)

    ra, rb, rc = response(), response(), response()  # a(beta, gamma), b(gamma, alpha), c(alpha, beta)
    obs = np.einsum("nx,ny,nz,nyza,nzxb,nxyc->nabc", pa, pb, pg, ra, rb, rc, optimize=True)
    a_hat = np.einsum("nz,nyza->nya", pg, ra)  # fresh gamma copy
    int_ = np.einsum("nx,ny,nz,nya,nzxb,nxyc->nabc", pa, pb, pg, a_hat, rb, rc, optimize=True)
    return obs, int_


def test_extracted_witness_nonnegative_on_classical_models(cert085):
    shapes = {"obs": (("A", "B", "C"), (4, 4, 4)), "int": (("A", "B", "C"), (4, 4, 4))}
    compiled = cert085.witness.compile(shapes)
    rng = np.random.default_rng(2024)
    worst = np.inf
    for _ in range(5):
        obs, int_ = _classical_joint_pairs(2000, 3, rng)
        worst = min(worst, float(compiled.evaluate_batch({"obs": obs, "int": int_}).min()))
    assert worst >= -1e-9
    p_obs, p_int = rgb4_tables(Rgb4Params(0.85))
    quantum = compiled.evaluate_batch({"obs": p_obs.table[None], "int": p_int.table[None]})[0]
    assert quantum == pytest.approx(cert085.witness_value, abs=1e-12)
