"""Bulk velocity and pressure from the single layer density, and their traces.

With the Stokeslet convention used here

    U^k_j(y) = -(delta_jk ln(1/|y|) + y_j y_k/|y|^2) / (4 pi mu),
    P^k(y)   = -y_k / (2 pi |y|^2),

the fields below the interface are

    v(x) = int d/ds[U^k(x - (s, f(s)))] beta_k(s) ds,
    p(x) = -int P^k(x - (s, f(s))) beta_k'(s) ds.

Both integrands are smooth away from the interface and are summed with the
plain trapezoidal rule on the grid nodes.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid, derivative
from .potentials import OperatorSet


class NearBoundaryError(ValueError):
    """Evaluation point closer than one grid spacing to the interface."""


@dataclass(frozen=True)
class FieldSample:
    velocity: np.ndarray
    pressure: float


def fundamental_solution(k: int, y, mu: float = 1.0):
    """Velocity U^k (2-vector) and pressure P^k of the point force in direction k."""
    if k not in (1, 2):
        raise ValueError(f"direction k must be 1 or 2, got {k}")
    y = np.asarray(y, dtype=float)
    r2 = float(y @ y)
    if r2 == 0.0:
        raise ValueError("fundamental solution is singular at y = 0")
    e = np.zeros(2)
    e[k - 1] = 1.0
    U = -(e * np.log(1.0 / np.sqrt(r2)) + y * y[k - 1] / r2) / (4.0 * np.pi * mu)
    P = -y[k - 1] / (2.0 * np.pi * r2)
    return U, P


def fundamental_gradients(y1, y2, mu: float = 1.0):
    """Closed-form first derivatives of the point-force solutions.

    Returns ``dU[k, i, j] = d_i U^{k+1}_j`` and ``dP[k, i] = d_i P^{k+1}``
    broadcast over the shapes of ``y1``, ``y2``.
    """
    y1 = np.asarray(y1, dtype=float)
    y2 = np.asarray(y2, dtype=float)
    r4 = (y1 * y1 + y2 * y2) ** 2
    a = y1 * y1 - y2 * y2
    c = 1.0 / (4.0 * np.pi * mu * r4)
    dU = np.empty((2, 2, 2) + y1.shape)
    dU[0, 0] = [c * y1 * a, c * y2 * a]
    dU[0, 1] = [c * y2 * (y2 * y2 + 3.0 * y1 * y1), -c * y1 * a]
    dU[1, 0] = [c * y2 * a, c * y1 * (y1 * y1 + 3.0 * y2 * y2)]
    dU[1, 1] = [-c * y1 * a, -c * y2 * a]
    d = 1.0 / (2.0 * np.pi * r4)
    dP = np.empty((2, 2) + y1.shape)
    dP[0] = [d * a, d * 2.0 * y1 * y2]
    dP[1] = [d * 2.0 * y1 * y2, -d * a]
    return dU, dP


def distance_to_interface(grid: Grid, f, x) -> np.ndarray:
    """Distance from each point to the sampled interface nodes."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    d1 = x[:, 0:1] - grid.nodes[None, :]
    d2 = x[:, 1:2] - np.asarray(f)[None, :]
    return np.sqrt(np.min(d1 * d1 + d2 * d2, axis=1))


def check_points(grid: Grid, f, x) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[-1] != 2:
        raise ValueError("points must have two coordinates")
    dist = distance_to_interface(grid, f, x)
    bad = dist < grid.h
    if np.any(bad):
        i = int(np.argmax(bad))
        raise NearBoundaryError(
            f"near-boundary evaluation unreliable at ({x[i, 0]:.6g}, {x[i, 1]:.6g}), "
            f"distance {dist[i]:.3g} < h = {grid.h:.3g}")
    return x


def stokes_fields(grid: Grid, f, beta, x, mu: float = 1.0):
    """Velocity (P, 2) and pressure (P,) at points ``x`` of shape (P, 2)."""
    f = grid.check(f, "f")
    beta = grid.check(beta, "beta")
    x = check_points(grid, f, x)
    fp = derivative(grid, f)
    dbeta = derivative(grid, beta)
    R1 = x[:, 0:1] - grid.nodes[None, :]
    R2 = x[:, 1:2] - f[None, :]
    dU, _ = fundamental_gradients(R1, R2, mu)
    # d/ds U^k(x - X(s)) = -(d_1 U^k + f'(s) d_2 U^k)
    dsU = -(dU[:, 0] + fp * dU[:, 1])  # (k, j, P, N)
    v = grid.h * np.einsum("kjpn,kn->pj", dsU, beta)
    r2 = R1 * R1 + R2 * R2
    P = np.array([-R1, -R2]) / (2.0 * np.pi * r2)
    p = -grid.h * np.einsum("kpn,kn->p", P, dbeta)
    return v, p


def stokes_solution(grid: Grid, f, beta, x, mu: float = 1.0) -> FieldSample:
    v, p = stokes_fields(grid, f, beta, np.asarray(x, dtype=float)[None, :], mu)
    return FieldSample(v[0], float(p[0]))


def interior_stokes_residual(grid: Grid, f, beta, x, mu: float = 1.0, step: float = 1e-3) -> float:
    """Max of |mu Lap v - grad p| and |div v| by centered differences at x."""
    x = np.asarray(x, dtype=float)
    d = step
    sh = np.array([[0, 0], [d, 0], [-d, 0], [0, d], [0, -d]])
    check_points(grid, f, x[None, :] + sh)
    v, p = stokes_fields(grid, f, beta, x[None, :] + sh, mu)
    lap = (v[1] + v[2] + v[3] + v[4] - 4.0 * v[0]) / (d * d)
    gp = np.array([p[1] - p[2], p[3] - p[4]]) / (2.0 * d)
    div = (v[1, 0] - v[2, 0] + v[3, 1] - v[4, 1]) / (2.0 * d)
    return float(max(np.linalg.norm(mu * lap - gp), abs(div)))


def trace_formulas(ops: OperatorSet, beta, mu: float = 1.0):
    """Boundary values (fluid side, below the interface) of v, p and grad v.

    Returns ``(v, p, gradv)`` with ``v`` of shape (2, N), ``p`` of shape (N,)
    and ``gradv[i, j] = d_j v_i`` of shape (2, 2, N).
    """
    grid = ops.grid
    beta = grid.check(beta, "beta")
    geo = ops.geometry
    fp, om = geo.fp, geo.omega
    db = derivative(grid, beta)
    B = ops.B2
    C = ops.B1
    v = ops.apply_V(beta) / mu
    p = 0.5 * (C[0] @ db[0] + C[1] @ db[1]) - np.sum(db * geo.nu, axis=0) / (2.0 * om)
    dbt = np.sum(db * geo.tau, axis=0) / (2.0 * mu * om**3)
    d1v1 = -((B[0] - B[2]) @ db[0] + (B[1] - B[3]) @ db[1]) / (4.0 * mu) - fp * dbt
    d2v1 = -((B[3] + 3.0 * B[1]) @ db[0] + (B[2] - B[0]) @ db[1]) / (4.0 * mu) + dbt
    d1v2 = -((B[1] - B[3]) @ db[0] + (B[0] + 3.0 * B[2]) @ db[1]) / (4.0 * mu) - fp * fp * dbt
    gradv = np.array([[d1v1, d2v1], [d1v2, -d1v1]])
    return v, p, gradv


def stress_vector(ops: OperatorSet, beta, mu: float = 1.0) -> np.ndarray:
    """T_mu(v, p) nu on the interface from the trace formulas."""
    _, p, gradv = trace_formulas(ops, beta, mu)
    T = mu * (gradv + gradv.transpose(1, 0, 2))
    T[0, 0] -= p
    T[1, 1] -= p
    return np.einsum("ijn,jn->in", T, ops.geometry.nu)
