"""RGB4 certification: tables -> inflation LP -> verdict, and visibility bisection."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Literal

from ..errors import NoTransition, NonMonotone
from ..scenarios import Rgb4Params, rgb4_tables
from .graph import build_inflation, hatted, rgb4_joint
from .lp import DEFAULT_MAX_SET_SIZE, KnownTable, LinearProgram, build_lp
from .solver import TOL_CERTIFICATE, TOL_FEASIBLE, FeasibilityVerdict, solve_feasibility
from .witness import WitnessPolynomial, evaluate_witness, extract_witness, rgb4_reference_witness

VISIBILITY_NAMES = ("alpha", "beta", "gamma")


def rgb4_lp(
    params: Rgb4Params,
    *,
    preset: str = "rgb4-fig5",
    obs_only: bool = False,
    symmetry: bool = True,
    max_size: int | None = DEFAULT_MAX_SET_SIZE,
) -> LinearProgram:
    joint = rgb4_joint()
    infl = build_inflation(joint, preset)
    p_obs, p_int = rgb4_tables(params)
    known = {"obs": KnownTable(p_obs, ("A", "B", "C"))}
    if not obs_only:
        known["int"] = KnownTable(p_int, (hatted("A"), "B", "C"))
    return build_lp(infl, known, symmetry=symmetry, max_size=max_size)


@dataclass(frozen=True, eq=False)
class Rgb4Certificate:
    params: Rgb4Params
    verdict: FeasibilityVerdict
    lp: LinearProgram
    witness: WitnessPolynomial | None = None
    witness_value: float | None = None
    reference_value: float | None = None


def certify_rgb4(
    params: Rgb4Params,
    *,
    preset: str = "rgb4-fig5",
    obs_only: bool = False,
    symmetry: bool = True,
    with_witness: bool = True,
    tol_feasible: float = TOL_FEASIBLE,
    tol_certificate: float = TOL_CERTIFICATE,
) -> Rgb4Certificate:
    lp = rgb4_lp(params, preset=preset, obs_only=obs_only, symmetry=symmetry)
    verdict = solve_feasibility(lp, tol_feasible=tol_feasible, tol_certificate=tol_certificate)
    knowns = {name: t.behavior for name, t in lp.knowns.items()}
    reference = None if obs_only else evaluate_witness(rgb4_reference_witness(), knowns)
    if verdict.infeasible and with_witness:
        w = extract_witness(verdict, lp)
        return Rgb4Certificate(params, verdict, lp, w, evaluate_witness(w, knowns), reference)
    return Rgb4Certificate(params, verdict, lp, reference_value=reference)


@dataclass(frozen=True)
class ThresholdResult:
    free: tuple[str, ...]
    value: float
    trace: tuple[tuple[float, str], ...] = field(default=())


def _params_at(template: Rgb4Params, free: Iterable[str], v: float) -> Rgb4Params:
    vis = dict(zip(VISIBILITY_NAMES, template.visibilities))
    for name in free:
        vis[name] = v
    return template.with_visibilities(vis["alpha"], vis["beta"], vis["gamma"])


def visibility_threshold(
    template: Rgb4Params,
    free: Iterable[str],
    *,
    lo: float = 0.9,
    hi: float = 1.0,
    tol: float = 1e-4,
    preset: str = "rgb4-fig5",
    symmetry: bool = True,
    tol_feasible: float = TOL_FEASIBLE,
    tol_certificate: float = TOL_CERTIFICATE,
    on_probe: Callable[[float, FeasibilityVerdict, LinearProgram], None] | None = None,
) -> ThresholdResult:
    """Critical visibility of the ``free`` sources (tied together) by bisection on ``[lo, hi]``.

    Returns the smallest probed visibility that is still certified, i.e. the
    largest feasible probe plus at most ``tol``. ``on_probe`` sees every
    verdict together with its LP.
    """
    free = tuple(free)
    unknown = set(free) - set(VISIBILITY_NAMES)
    if not free or unknown:
        raise ValueError(f"free visibilities must be a non-empty subset of {VISIBILITY_NAMES}")
    if not tol > 0:
        raise ValueError("tol must be positive")
    trace: list[tuple[float, str]] = []

    def probe(v: float) -> bool:
        lp = rgb4_lp(_params_at(template, free, v), preset=preset, symmetry=symmetry)
        verdict = solve_feasibility(lp, tol_feasible=tol_feasible, tol_certificate=tol_certificate)
        trace.append((v, verdict.status))
        if on_probe is not None:
            on_probe(v, verdict, lp)
        return verdict.infeasible

    if not probe(hi):
        raise NoTransition(f"feasible at the top of the bracket v={hi}")
    if hi - lo <= 0 or probe(lo):
        raise NoTransition(f"infeasible at the bottom of the bracket v={lo}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            hi = mid
        else:
            lo = mid
    feasible = [v for v, s in trace if s == "feasible"]
    infeasible = [v for v, s in trace if s == "infeasible"]
    if max(feasible) >= min(infeasible):
        raise NonMonotone(f"feasible probe {max(feasible)} above infeasible probe {min(infeasible)}")
    return ThresholdResult(free, hi, tuple(trace))


Mode = Literal["sym", "alpha", "beta", "gamma"]
THRESHOLD_MODES: dict[str, tuple[str, ...]] = {
    "sym": VISIBILITY_NAMES,
    "alpha": ("alpha",),
    "gamma": ("gamma",),
    "beta": ("beta",),
}
