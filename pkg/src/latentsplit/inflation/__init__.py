"""Joint DAGs, inflation LPs, Farkas certificates and polynomial witnesses."""

from .graph import (
    InflatedNode,
    InflationGraph,
    PRESETS,
    build_inflation,
    build_joint_dag,
    carrot_inflation,
    carrot_joint,
    hatted,
    rgb4_fig5_inflation,
    rgb4_joint,
    trivial_inflation,
)
from .lp import ExpressibleSet, KnownTable, LinearProgram, LpTemplate, build_lp, expressible_sets, parse_lp_text
from .pipeline import THRESHOLD_MODES, Rgb4Certificate, ThresholdResult, certify_rgb4, rgb4_lp, visibility_threshold
from .solver import (
    CertificateCheck,
    FeasibilityVerdict,
    repair_certificate,
    solve_feasibility,
    solve_standard_form,
    verify_certificate,
    verify_certificate_exact,
)
from .witness import (
    Atom,
    CompiledWitness,
    Term,
    WitnessPolynomial,
    evaluate_witness,
    extract_witness,
    rgb4_reference_witness,
)

__all__ = [
    "Atom",
    "CertificateCheck",
    "CompiledWitness",
    "ExpressibleSet",
    "FeasibilityVerdict",
    "InflatedNode",
    "InflationGraph",
    "KnownTable",
    "LinearProgram",
    "LpTemplate",
    "PRESETS",
    "Rgb4Certificate",
    "THRESHOLD_MODES",
    "Term",
    "ThresholdResult",
    "WitnessPolynomial",
    "build_inflation",
    "build_joint_dag",
    "build_lp",
    "carrot_inflation",
    "carrot_joint",
    "certify_rgb4",
    "evaluate_witness",
    "expressible_sets",
    "extract_witness",
    "hatted",
    "parse_lp_text",
    "repair_certificate",
    "rgb4_fig5_inflation",
    "rgb4_joint",
    "rgb4_lp",
    "rgb4_reference_witness",
    "solve_feasibility",
    "solve_standard_form",
    "trivial_inflation",
    "verify_certificate",
    "verify_certificate_exact",
    "visibility_threshold",
]
