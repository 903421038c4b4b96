"""Binary interventional Fritz inequality: correlators, S, closed forms, classical sampling."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .behavior import Behavior
from .errors import CardinalityMismatch, ParamOutOfRange
from .scenarios import FritzParams, FritzTables, fritz_tables

SQRT2 = np.sqrt(2.0)
EPSILON_STAR = 1.0 - np.sqrt(np.sqrt(2.0) - 1.0)
COUNTEREXAMPLE_TOL = 1e-9


@dataclass(frozen=True)
class FritzCorrelators:
    E_obs_c: tuple[float, float]
    E_beta_c: tuple[float, float]
    E_alpha_c: tuple[float, float]
    E_alphabeta: float
    P_obs_c1: float

    def __post_init__(self) -> None:
        for v in (*self.E_obs_c, *self.E_beta_c, *self.E_alpha_c, self.E_alphabeta):
            if not -1.0 - 1e-12 <= v <= 1.0 + 1e-12:
                raise ValueError(f"correlator {v} outside [-1, 1]")
        if not -1e-12 <= self.P_obs_c1 <= 1.0 + 1e-12:
            raise ValueError(f"P_obs(c=1) = {self.P_obs_c1} outside [0, 1]")

    @classmethod
    def zero(cls) -> "FritzCorrelators":
        return cls((0.0, 0.0), (0.0, 0.0), (0.0, 0.0), 0.0, 0.0)


def _agreement(table: np.ndarray) -> np.ndarray:
    """``P(a=b, ...) - P(a!=b, ...)`` over the leading two (binary) axes."""
    return table[0, 0] + table[1, 1] - table[0, 1] - table[1, 0]


def _abc(b: Behavior) -> np.ndarray:
    if b.conditions or len(b.parties) != 3 or b.cards != (2, 2, 2):
        raise CardinalityMismatch(f"expected a binary (a, b, c) table, got parties {b.parties} cards {b.cards}")
    return b.table


def correlators(tables: FritzTables | Sequence[Behavior]) -> FritzCorrelators:
    """Tables in the order ``(obs, int_alpha, int_beta, int_alphabeta)``."""
    obs, t_alpha, t_beta, t_ab = (_abc(t) for t in tables)
    e_obs = _agreement(obs)
    e_alpha = _agreement(t_alpha)
    e_beta = _agreement(t_beta)
    e_ab = float(_agreement(t_ab).sum())
    return FritzCorrelators(
        (float(e_obs[0]), float(e_obs[1])),
        (float(e_beta[0]), float(e_beta[1])),
        (float(e_alpha[0]), float(e_alpha[1])),
        e_ab,
        float(obs[:, :, 1].sum()),
    )


def evaluate_S(corr: FritzCorrelators) -> float:
    """``E_ab P(c=1) + 2 P(c=1) - E_obs^1 - E_alpha^1 - E_beta^1``; nonnegative for classical models."""
    p1 = corr.P_obs_c1
    return corr.E_alphabeta * p1 + 2.0 * p1 - corr.E_obs_c[1] - corr.E_alpha_c[1] - corr.E_beta_c[1]


def _check(epsilon: float, visibility: float) -> None:
    if not 0.0 <= epsilon <= 1.0:
        raise ParamOutOfRange(f"epsilon={epsilon!r} outside [0, 1]")
    if not 0.0 <= visibility <= 1.0:
        raise ParamOutOfRange(f"visibility={visibility!r} outside [0, 1]")


def closed_form_SQ(epsilon: float, visibility: float = 1.0) -> float:
    """Quantum value of S; every correlator of the strategy scales linearly with the visibility."""
    _check(epsilon, visibility)
    e = epsilon
    corr = visibility / SQRT2
    e_ab = (-2 * e * e + 4 * e - 1) * corr
    return float(e_ab * e * e + 2 * e * e - 3 * e * e * corr)


def v_min(epsilon: float) -> float:
    """Visibility at which the quantum value crosses zero for fixed ``epsilon`` (may exceed 1)."""
    if not 0.0 <= epsilon <= 1.0:
        raise ParamOutOfRange(f"epsilon={epsilon!r} outside [0, 1]")
    return float(SQRT2 / (1.0 + (1.0 - epsilon) ** 2))


def epsilon_threshold(visibility: float = 1.0) -> float:
    """Largest bias with a violation at the given visibility (nan when none exists)."""
    if not 0.0 < visibility <= 1.0:
        raise ParamOutOfRange(f"visibility={visibility!r} outside (0, 1]")
    inner = SQRT2 / visibility - 1.0
    return float(1.0 - np.sqrt(inner)) if inner <= 1.0 else float("nan")


def table_pipeline_S(epsilon: float, visibility: float = 1.0) -> float:
    return evaluate_S(correlators(fritz_tables(FritzParams(epsilon, visibility))))


# -- classical sanity sampling ---------------------------------------------


def classical_tables(
    p_alpha: np.ndarray,
    p_beta: np.ndarray,
    p_gamma: np.ndarray,
    resp_a: np.ndarray,
    resp_b: np.ndarray,
    resp_c: np.ndarray,
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Batched ``(obs, int_alpha, int_beta, int_alphabeta)`` of classical triangle models.

    Leading axis is the batch. Responses: ``a(beta, gamma)``, ``b(gamma, alpha)``,
    ``c(alpha, beta)``. A split edge feeds an independent copy of the source.
    """
    opt = {"optimize": True}
    obs = np.einsum("nx,ny,nz,nyza,nzxb,nxyc->nabc", p_alpha, p_beta, p_gamma, resp_a, resp_b, resp_c, **opt)
    # the A (resp. B) marginal response once its beta (resp. alpha) share is independent
    a_free = np.einsum("nw,nwza->nza", p_beta, resp_a)
    b_free = np.einsum("nw,nzwb->nzb", p_alpha, resp_b)
    int_beta = np.einsum("nx,ny,nz,nza,nzxb,nxyc->nabc", p_alpha, p_beta, p_gamma, a_free, resp_b, resp_c, **opt)
    int_alpha = np.einsum("nx,ny,nz,nyza,nzb,nxyc->nabc", p_alpha, p_beta, p_gamma, resp_a, b_free, resp_c, **opt)
    int_ab = np.einsum("nx,ny,nz,nza,nzb,nxyc->nabc", p_alpha, p_beta, p_gamma, a_free, b_free, resp_c, **opt)
    return obs, int_alpha, int_beta, int_ab


def batch_S(obs: np.ndarray, int_alpha: np.ndarray, int_beta: np.ndarray, int_ab: np.ndarray) -> np.ndarray:
    def agree(t: np.ndarray) -> np.ndarray:
        return t[:, 0, 0] + t[:, 1, 1] - t[:, 0, 1] - t[:, 1, 0]

    p1 = obs[:, :, :, 1].sum(axis=(1, 2))
    e_ab = agree(int_ab).sum(axis=-1)
    return e_ab * p1 + 2 * p1 - agree(obs)[:, 1] - agree(int_alpha)[:, 1] - agree(int_beta)[:, 1]


def biased_source(epsilon: float, hidden: np.ndarray) -> np.ndarray:
    """Distribution over (bit, hidden) pairs flattened to 4 values with ``P(bit=1) = epsilon``.

    ``hidden`` has shape ``(batch, 2, 2)``: a conditional distribution of a
    hidden bit given the visible bit.
    """
    weights = np.array([1.0 - epsilon, epsilon])
    return (weights[None, :, None] * hidden).reshape(len(hidden), 4)


@dataclass(frozen=True)
class SanityReport:
    epsilon: float
    samples: int
    seed: int
    min_S: float | None
    argmin_model_digest: str | None
    counterexamples: int
    verdict: str | None  # "ok", "counterexample" or None when nothing was sampled

    def to_json(self) -> dict:
        return asdict(self)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def _model_digest(arrays: Iterable[np.ndarray]) -> str:
    h = hashlib.sha256()
    for a in arrays:
        h.update(np.ascontiguousarray(a, dtype=np.float64).tobytes())
    return h.hexdigest()


def _responses(rng: np.random.Generator, shape: tuple[int, ...], deterministic: np.ndarray) -> np.ndarray:
    """Dirichlet-uniform stochastic responses, replaced by point masses where ``deterministic``."""
    stochastic = rng.dirichlet(np.ones(shape[-1]), size=shape[:-1])
    points = np.eye(shape[-1])[rng.integers(0, shape[-1], size=shape[:-1])]
    mask = deterministic.reshape((-1,) + (1,) * (len(shape) - 1))
    return np.where(mask, points, stochastic)


def classical_sanity(
    epsilon: float,
    samples: int,
    seed: int,
    *,
    batch_size: int = 5000,
    latent_card: int = 4,
) -> SanityReport:
    """Minimum of S over random classical triangle models with biased alpha, beta.

    The alpha and beta sources carry a visible bit with ``P(1) = epsilon`` and
    a hidden bit whose conditional distribution is random; gamma is a random
    distribution over ``latent_card`` values. Half of the samples use
    deterministic responses, the rest Dirichlet-uniform stochastic ones.
    """
    _check(epsilon, 1.0)
    if samples < 0:
        raise ValueError("samples must be >= 0")
    if latent_card != 4:
        raise ValueError("the biased sources are encoded on 4 values")
    if samples == 0:
        return SanityReport(float(epsilon), 0, int(seed), None, None, 0, None)
    rng = np.random.default_rng(seed)
    k = latent_card
    best = np.inf
    best_model: tuple[np.ndarray, ...] | None = None
    bad = 0
    done = 0
    while done < samples:
        n = min(batch_size, samples - done)
        p_alpha = biased_source(epsilon, rng.dirichlet(np.ones(2), size=(n, 2)))
        p_beta = biased_source(epsilon, rng.dirichlet(np.ones(2), size=(n, 2)))
        p_gamma = rng.dirichlet(np.ones(k), size=n)
        det = rng.random(n) < 0.5
        resp_a = _responses(rng, (n, k, k, 2), det)
        resp_b = _responses(rng, (n, k, k, 2), det)
        resp_c = _responses(rng, (n, k, k, 2), det)
        s = batch_S(*classical_tables(p_alpha, p_beta, p_gamma, resp_a, resp_b, resp_c))
        bad += int(np.sum(s < -COUNTEREXAMPLE_TOL))
        i = int(np.argmin(s))
        if s[i] < best:
            best = float(s[i])
            best_model = (p_alpha[i], p_beta[i], p_gamma[i], resp_a[i], resp_b[i], resp_c[i])
        done += n
    digest = _model_digest(best_model) if best_model is not None else None
    return SanityReport(
        float(epsilon), int(samples), int(seed), best, digest, bad, "counterexample" if bad else "ok"
    )


def model_S(
    p_alpha: np.ndarray,
    p_beta: np.ndarray,
    p_gamma: np.ndarray,
    resp_a: np.ndarray,
    resp_b: np.ndarray,
    resp_c: np.ndarray,
) -> float:
    """S of a single classical model (unbatched arrays)."""
    args = [np.asarray(x, dtype=float)[None] for x in (p_alpha, p_beta, p_gamma, resp_a, resp_b, resp_c)]
    return float(batch_S(*classical_tables(*args))[0])


def classical_tables_behaviors(*model: np.ndarray) -> list[Behavior]:
    args = [np.asarray(x, dtype=float)[None] for x in model]
    return [Behavior(("A", "B", "C"), (2, 2, 2), t[0]) for t in classical_tables(*args)]


def fritz_rows(eps_grid: Sequence[float], visibility: float = 1.0) -> list[Mapping[str, float]]:
    rows = []
    for e in eps_grid:
        s_table = table_pipeline_S(float(e), visibility)
        s_closed = closed_form_SQ(float(e), visibility)
        rows.append(
            {
                "epsilon": float(e),
                "visibility": float(visibility),
                "S_table": s_table,
                "S_closed_form": s_closed,
                "violated": bool(s_table < 0),
                "v_min": v_min(float(e)),
            }
        )
    return rows
