"""Latent-source splitting for quantum causal networks.

Simulate observational and split-source interventional data of quantum
networks, recover do-conditionals from it, and certify nonclassicality with
inflation linear programs and the interventional Fritz inequality.
"""

from __future__ import annotations

from . import errors, inflation
from .behavior import Behavior, product_behavior, uniform_behavior
from .errors import *  # noqa: F401,F403
from .fritz import (
    EPSILON_STAR,
    FritzCorrelators,
    SanityReport,
    classical_sanity,
    closed_form_SQ,
    correlators,
    epsilon_threshold,
    evaluate_S,
    table_pipeline_S,
    v_min,
)
from .network import (
    CausalNetwork,
    ClassicalModel,
    QuantumStrategy,
    bell_network,
    classical_behavior,
    embed_classical,
    instrumental_network,
    pearl_do_quantum,
    quantum_behavior,
    strategy_from_json,
    strategy_to_json,
    triangle_network,
    uc_network,
)
from .scenarios import (
    FritzParams,
    FritzTables,
    Rgb4Params,
    fritz_strategy,
    fritz_tables,
    rgb4_strategy,
    rgb4_tables,
)
from .splitting import (
    SplitSequence,
    SplitSpec,
    apply_splits,
    interventional_behavior,
    isolating_splits,
    recover_do,
    recover_do_from_data,
    split_network,
    split_state,
)
from .tensor import DensityOperator, Povm, SubsystemLayout, born_rule, partial_trace, tensor_product

__version__ = "0.1.0"
