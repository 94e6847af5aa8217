"""Dense solves of (lambda*Id + a*D(f)) beta = rhs and spectral diagnostics."""
from __future__ import annotations

import time
from dataclasses import asdict, dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from .grid import Grid
from .potentials import OperatorSet

NEAR_SINGULAR_CONDITION = 1e12
# up to this size the smallest singular value comes from a full SVD
FULL_SVD_MAX = 2048


class NearSingularError(ArithmeticError):
    """The shifted operator is singular to working precision."""

    def __init__(self, message: str, condition_estimate: float):
        super().__init__(message)
        self.condition_estimate = condition_estimate


@dataclass
class SolverReport:
    residual_norm: float
    condition_estimate: float
    smallest_singular_value: float
    elapsed: float

    def as_dict(self, timing: bool = False) -> dict:
        d = asdict(self)
        # the LAPACK estimate wobbles in the last bits with buffer alignment
        d["condition_estimate"] = float(f"{self.condition_estimate:.6g}")
        if not timing:
            d.pop("elapsed")
        return d


def _smallest_sv_lanczos(lu, n: int, tol: float = 1e-10, seed: int = 0) -> float:
    """Smallest singular value from the top eigenvalue of (A^T A)^{-1}.

    The inverse normal operator is applied through the LU factors and its
    dominant eigenvalue found by Lanczos, which copes with the clustered
    spectrum near |lambda| better than plain power iteration.
    """
    def matvec(x):
        return sla.lu_solve(lu, sla.lu_solve(lu, np.ravel(x), trans=1))

    op = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
    v0 = np.random.default_rng(seed).standard_normal(n)
    top = spla.eigsh(op, k=1, which="LA", v0=v0, tol=tol, return_eigenvectors=False)[0]
    return float(1.0 / np.sqrt(top))


def shifted_matrix(ops: OperatorSet, lam: float, a: float, which: str = "D") -> np.ndarray:
    """Dense matrix of lam*Id + a*D(f) (or with D(f)* for which='Dstar')."""
    n2 = 2 * ops.grid.N
    if a == 0.0:
        return lam * np.eye(n2)
    op = ops.D if which == "D" else ops.Dstar
    A = a * op.entries
    A[np.diag_indices(n2)] += lam
    return A


def _factor(A: np.ndarray):
    lu = sla.lu_factor(A, check_finite=False)
    anorm = np.linalg.norm(A, 1)
    rcond, info = sla.lapack.dgecon(lu[0], anorm, norm="1")
    cond = np.inf if rcond == 0.0 else 1.0 / rcond
    return lu, float(cond)


def solve_shifted(A: np.ndarray, rhs, singular_values: str = "auto"):
    """LU solve with one step of iterative refinement.

    Returns the solution (same shape as rhs) and a SolverReport. Raises
    NearSingularError when the condition estimate exceeds 1e12.
    """
    t0 = time.perf_counter()
    rhs = np.asarray(rhs, dtype=float)
    b = rhs.reshape(-1)
    lu, cond = _factor(A)
    if not np.isfinite(cond) or cond > NEAR_SINGULAR_CONDITION:
        raise NearSingularError(f"near-singular operator, condition estimate {cond:.3e}", cond)
    x = sla.lu_solve(lu, b, check_finite=False)
    x += sla.lu_solve(lu, b - A @ x, check_finite=False)
    res = float(np.linalg.norm(A @ x - b))
    if singular_values == "svd" or (singular_values == "auto" and A.shape[0] <= FULL_SVD_MAX):
        smin = float(sla.svdvals(A, check_finite=False)[-1])
    elif singular_values == "none":
        smin = float("nan")
    else:
        smin = _smallest_sv_lanczos(lu, A.shape[0])
    report = SolverReport(res, cond, smin, time.perf_counter() - t0)
    return x.reshape(rhs.shape), report


def solve_density(ops: OperatorSet, lam: float, a: float, rhs, singular_values: str = "none"):
    """Solve (lam*Id + a*D(f)) beta = rhs for a density pair.

    ``singular_values`` selects how the report's smallest singular value is
    obtained: 'svd', 'iter' (Lanczos on the inverse normal operator), 'auto'
    or 'none' (NaN, the cheap default used inside time stepping).
    """
    rhs = ops.grid.check(rhs, "rhs")
    if a == 0.0:
        t0 = time.perf_counter()
        beta = rhs / lam
        return beta, SolverReport(0.0, 1.0, abs(lam), time.perf_counter() - t0)
    A = shifted_matrix(ops, lam, a)
    return solve_shifted(A, rhs, singular_values)


def invertibility_diagnostics(ops: OperatorSet, lam: float, which: str = "D",
                              method: str = "auto") -> SolverReport:
    """Smallest singular value and condition estimate of lam - D(f) (or lam - D(f)*).

    ``method`` is 'svd', 'iter' or 'auto' (full SVD up to 2N = 2048 unknowns,
    Lanczos through the LU factors beyond).
    """
    if which not in ("D", "Dstar"):
        raise ValueError(f"which must be 'D' or 'Dstar', got {which!r}")
    t0 = time.perf_counter()
    A = shifted_matrix(ops, lam, -1.0, which)
    lu, cond = _factor(A)
    if method == "svd" or (method == "auto" and A.shape[0] <= FULL_SVD_MAX):
        smin = float(sla.svdvals(A, check_finite=False)[-1])
    else:
        smin = _smallest_sv_lanczos(lu, A.shape[0])
    return SolverReport(0.0, cond, smin, time.perf_counter() - t0)


def sigma_min_profile(grid: Grid, f, method: str = "auto") -> dict:
    """sigma_min of +1/2 - D(f) and -1/2 - D(f) for one profile."""
    ops = OperatorSet(grid, f)
    return {lam: invertibility_diagnostics(ops, lam, "D", method).smallest_singular_value
            for lam in (0.5, -0.5)}
