"""LP feasibility with Farkas certificates.

For ``A x = b, x >= 0`` a certificate of infeasibility is a vector ``y`` with
``A^T y >= 0`` componentwise and ``b^T y < 0``: any feasible ``x`` would give
``0 <= y^T A x = b^T y < 0``.

Two backends solve the phase-1 problem ``min 1^T (s+ + s-)`` subject to
``A x + s+ - s- = b``:

* ``"highs"`` (default) calls HiGHS through :func:`scipy.optimize.linprog` and
  reads the certificate off the equality duals;
* ``"simplex"`` is a dense tableau phase-1 simplex with Bland's rule, in
  floating point or, with ``exact=True``, in rational arithmetic. It is meant
  for small programs and for cross-checking.

Whatever the backend, a verdict is only returned after an independent check:
a point must satisfy every row within ``tol_feasible``, a certificate must
pass :func:`verify_certificate` at ``tol_certificate``. Otherwise
:class:`NumericallyAmbiguous` is raised.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Literal

import numpy as np
import scipy.sparse as sp
from scipy.optimize import linprog

from ..errors import NumericallyAmbiguous
from .lp import LinearProgram

TOL_FEASIBLE = 1e-9
TOL_CERTIFICATE = 1e-8
HIGHS_OPTIONS = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}

Status = Literal["feasible", "infeasible"]


@dataclass(frozen=True, eq=False)
class CertificateCheck:
    ok: bool
    min_aty: float
    bty: float


@dataclass(frozen=True, eq=False)
class FeasibilityVerdict:
    status: Status
    point: np.ndarray | None = None
    certificate: np.ndarray | None = None
    residual: float = 0.0
    phase1_value: float = 0.0
    backend: str = "highs"
    check: CertificateCheck | None = None

    @property
    def feasible(self) -> bool:
        return self.status == "feasible"

    @property
    def infeasible(self) -> bool:
        return self.status == "infeasible"


def verify_certificate(
    A: sp.spmatrix | np.ndarray, b: np.ndarray, y: np.ndarray, tol: float = TOL_CERTIFICATE
) -> CertificateCheck:
    """``A^T y >= -tol`` componentwise and ``b^T y <= -tol``."""
    aty = np.asarray(A.T @ y).reshape(-1)
    min_aty = float(aty.min(initial=np.inf))
    bty = float(np.dot(b, y))
    return CertificateCheck(bool(min_aty >= -tol and bty <= -tol), min_aty, bty)


def verify_certificate_exact(A: sp.spmatrix | np.ndarray, b: np.ndarray, y: np.ndarray) -> bool:
    """Rational re-check: every float is converted exactly, ``A^T y >= 0`` and ``b^T y < 0`` hold exactly."""
    A = sp.csc_matrix(A)
    yq = [Fraction(float(v)) for v in y]
    for j in range(A.shape[1]):
        lo, hi = A.indptr[j], A.indptr[j + 1]
        total = sum((Fraction(float(A.data[k])) * yq[A.indices[k]] for k in range(lo, hi)), Fraction(0))
        if total < 0:
            return False
    return sum((Fraction(float(bi)) * yi for bi, yi in zip(b, yq)), Fraction(0)) < 0


def repair_certificate(A: sp.spmatrix | np.ndarray, y: np.ndarray, norm_row: int | None) -> np.ndarray:
    """Shift ``y`` along the all-ones normalization row so that ``A^T y >= 0``.

    Adding ``d`` to the multiplier of the normalization row raises every entry
    of ``A^T y`` by ``d`` and ``b^T y`` by ``d``, so the shift removes small
    negative entries left by floating-point duals at the cost of the margin.
    """
    if norm_row is None:
        return y
    aty = np.asarray(A.T @ y).reshape(-1)
    shift = max(0.0, -float(aty.min(initial=0.0)))
    if shift == 0.0:
        return y
    y = np.array(y, dtype=float)
    y[norm_row] += shift
    # the shift itself is rounded; nudge until the float check holds
    for _ in range(4):
        aty = np.asarray(A.T @ y).reshape(-1)
        low = float(aty.min(initial=0.0))
        if low >= 0.0:
            break
        y[norm_row] += -low + np.spacing(abs(y[norm_row]) + 1.0)
    return y


def _phase1_highs(A: sp.spmatrix, b: np.ndarray) -> tuple[np.ndarray, np.ndarray, float]:
    m, n = A.shape
    eye = sp.identity(m, format="csc")
    a_eq = sp.hstack([sp.csc_matrix(A), eye, -eye], format="csc")
    c = np.r_[np.zeros(n), np.ones(2 * m)]
    # the default 1e-7 tolerances can fake a phase-1 value of that size near the boundary
    res = linprog(c, A_eq=a_eq, b_eq=b, bounds=(0, None), method="highs", options=HIGHS_OPTIONS)
    if res.status != 0:
        res = linprog(c, A_eq=a_eq, b_eq=b, bounds=(0, None), method="highs")
    if res.status != 0:
        raise NumericallyAmbiguous(f"HiGHS phase-1 did not finish cleanly: {res.message}")
    # linprog reports d(objective)/d(b_eq); its negative is a Farkas direction
    return np.asarray(res.x[:n]), -np.asarray(res.eqlin.marginals), float(res.fun)


def _phase1_simplex(A: np.ndarray, b: np.ndarray, exact: bool) -> tuple[np.ndarray, np.ndarray, float]:
    """Dense phase-1 simplex with Bland's rule on ``[A | I] [x; s] = b``, ``b >= 0``."""
    A = np.asarray(A.todense() if sp.issparse(A) else A, dtype=float)
    m, n = A.shape
    sign = np.where(b < 0, -1.0, 1.0)
    if exact:
        zero, one = Fraction(0), Fraction(1)
        T = [[Fraction(float(sign[i] * A[i, j])) for j in range(n)] for i in range(m)]
        for i in range(m):
            T[i] += [one if k == i else zero for k in range(m)] + [Fraction(float(sign[i] * b[i]))]
        tol = zero
    else:
        T = np.hstack([sign[:, None] * A, np.eye(m), (sign * b)[:, None]])
        tol = 1e-12
    basis = [n + i for i in range(m)]
    width = n + m

    def reduced_costs():
        # costs: 0 on x, 1 on artificials; r_j = c_j - sum_i c_B(i) T[i][j]
        cb = [1 if basis[i] >= n else 0 for i in range(m)]
        if exact:
            r = [(one if j >= n else zero) - sum((T[i][j] for i in range(m) if cb[i]), zero) for j in range(width)]
        else:
            cbv = np.array(cb, dtype=float)
            r = np.r_[np.zeros(n), np.ones(m)] - cbv @ T[:, :width]
        return r

    while True:
        r = reduced_costs()
        entering = next((j for j in range(width) if r[j] < -tol), None)
        if entering is None:
            break
        best = None
        for i in range(m):
            a = T[i][entering]
            if a > tol:
                ratio = T[i][width] / a
                if best is None or ratio < best[0] or (ratio == best[0] and basis[i] < basis[best[1]]):
                    best = (ratio, i)
        if best is None:  # cannot happen in phase 1: the objective is bounded below by 0
            raise NumericallyAmbiguous("phase-1 simplex reported an unbounded ray")
        p = best[1]
        piv = T[p][entering]
        if exact:
            T[p] = [v / piv for v in T[p]]
            for i in range(m):
                if i != p and T[i][entering] != 0:
                    f = T[i][entering]
                    T[i] = [vi - f * vp for vi, vp in zip(T[i], T[p])]
        else:
            T[p] = T[p] / piv
            col = T[:, entering].copy()
            col[p] = 0.0
            T -= np.outer(col, T[p])
        basis[p] = entering

    x = [zero if exact else 0.0] * width
    for i, j in enumerate(basis):
        x[j] = T[i][width]
    value = sum(x[n:], zero if exact else 0.0)
    r = reduced_costs()
    # simplex multipliers of the flipped system: y_i = c_{n+i} - r_{n+i}
    y_flipped = [(one if exact else 1.0) - r[n + i] for i in range(m)]
    point = np.array([float(v) for v in x[:n]])
    # -y proves infeasibility of the flipped system; undo the row flips
    cert = np.array([-float(sign[i]) * float(y_flipped[i]) for i in range(m)])
    return point, cert, float(value)


def solve_feasibility(
    lp: LinearProgram,
    *,
    backend: Literal["highs", "simplex"] = "highs",
    exact: bool = False,
    tol_feasible: float = TOL_FEASIBLE,
    tol_certificate: float = TOL_CERTIFICATE,
) -> FeasibilityVerdict:
    return solve_standard_form(
        lp.A,
        lp.b,
        norm_row=lp.norm_row,
        backend=backend,
        exact=exact,
        tol_feasible=tol_feasible,
        tol_certificate=tol_certificate,
    )


def solve_standard_form(
    A: sp.spmatrix | np.ndarray,
    b: np.ndarray,
    *,
    norm_row: int | None = None,
    backend: Literal["highs", "simplex"] = "highs",
    exact: bool = False,
    tol_feasible: float = TOL_FEASIBLE,
    tol_certificate: float = TOL_CERTIFICATE,
) -> FeasibilityVerdict:
    """Feasibility of ``A x = b, x >= 0`` for a raw matrix (see :func:`solve_feasibility`)."""
    b = np.asarray(b, dtype=float)
    if backend == "highs":
        x, y, value = _phase1_highs(sp.csr_matrix(A), b)
    elif backend == "simplex":
        x, y, value = _phase1_simplex(A, b, exact)
    else:
        raise ValueError(f"unknown backend {backend!r}")
    x = np.clip(x, 0.0, None)
    residual = float(np.max(np.abs(A @ x - b), initial=0.0))
    if residual <= tol_feasible:
        return FeasibilityVerdict("feasible", point=x, residual=residual, phase1_value=value, backend=backend)
    y = repair_certificate(A, y, norm_row)
    check = verify_certificate(A, b, y, tol_certificate)
    if check.ok:
        return FeasibilityVerdict(
            "infeasible", certificate=y, residual=residual, phase1_value=value, backend=backend, check=check
        )
    raise NumericallyAmbiguous(
        f"no point within {tol_feasible:g} (residual {residual:.3e}) and certificate fails "
        f"(min A^T y = {check.min_aty:.3e}, b^T y = {check.bty:.3e})",
        residual=residual,
    )
