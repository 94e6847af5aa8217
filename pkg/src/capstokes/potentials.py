"""Interface geometry and the boundary operators built from B0_{n,m}(f).

Block operators act on density pairs beta = (beta_1, beta_2) stored as
``(2, N)`` arrays. The double layer operator D(f), its adjoint D(f)*, the
velocity trace operator V(f) and the gradient trace blocks T1, T2 are all
linear combinations of B0_{n,2}(f), n = 0..3; the pressure trace operators
B1, B2 use B0_{0,1}(f) and B0_{1,1}(f).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .grid import Grid, derivative
from .kernels import BlockOperator, OperatorMatrix, assemble_family


@dataclass(frozen=True)
class InterfaceGeometry:
    f: np.ndarray
    fp: np.ndarray
    fpp: np.ndarray
    omega: np.ndarray
    nu: np.ndarray
    tau: np.ndarray
    kappa: np.ndarray
    g: np.ndarray


def geometry_of(grid: Grid, f) -> InterfaceGeometry:
    """Length element, unit normal/tangent, curvature and g(f) = (1/omega - 1, f'/omega)."""
    f = grid.check(f, "f")
    fp = derivative(grid, f, 1)
    fpp = derivative(grid, f, 2)
    omega = np.sqrt(1.0 + fp**2)
    nu = np.array([-fp, np.ones_like(fp)]) / omega
    tau = np.array([np.ones_like(fp), fp]) / omega
    kappa = fpp / omega**3
    g = np.array([1.0 / omega - 1.0, fp / omega])
    return InterfaceGeometry(f, fp, fpp, omega, nu, tau, kappa, g)


def geometry_residual(grid: Grid, geom: InterfaceGeometry) -> np.ndarray:
    """omega*kappa*nu - g', which vanishes identically for smooth f."""
    return geom.omega * geom.kappa * geom.nu - derivative(grid, geom.g)


@dataclass
class OperatorSet:
    """All boundary operators of one interface, assembled on demand and cached."""

    grid: Grid
    f: np.ndarray

    @cached_property
    def geometry(self) -> InterfaceGeometry:
        return geometry_of(self.grid, self.f)

    @cached_property
    def B2(self) -> dict:
        """B0_{n,2}(f) entries for n = 0..3."""
        fam = assemble_family(self.grid, self.f, [0, 1, 2, 3], 2)
        return {n: fam[n].entries for n in fam}

    @cached_property
    def B1(self) -> dict:
        """B0_{n,1}(f) entries for n = 0, 1."""
        fam = assemble_family(self.grid, self.f, [0, 1], 1)
        return {n: fam[n].entries for n in fam}

    def _fp_diag(self):
        return self.geometry.fp[None, :]

    @cached_property
    def D(self) -> BlockOperator:
        B = self.B2
        F = self._fp_diag()  # right multiplication by diag(f')
        return BlockOperator.from_blocks(
            self.grid,
            [[B[0] * F - B[1], B[1] * F - B[2]], [B[1] * F - B[2], B[2] * F - B[3]]],
            "D(f)",
        )

    @cached_property
    def Dstar(self) -> BlockOperator:
        B = self.B2
        Fl = self.geometry.fp[:, None]  # left multiplication by diag(f')
        return BlockOperator.from_blocks(
            self.grid,
            [[-Fl * B[0] + B[1], -Fl * B[1] + B[2]], [-Fl * B[1] + B[2], -Fl * B[2] + B[3]]],
            "D(f)*",
        )

    @cached_property
    def T1(self) -> BlockOperator:
        B = self.B2
        return BlockOperator.from_blocks(
            self.grid,
            [[0.25 * (B[2] - B[0]), 0.25 * (B[3] - B[1])],
             [0.25 * (B[3] - B[1]), 0.25 * (-3.0 * B[2] - B[0])]],
            "T1(f)",
        )

    @cached_property
    def T2(self) -> BlockOperator:
        B = self.B2
        return BlockOperator.from_blocks(
            self.grid,
            [[0.25 * (-B[3] - 3.0 * B[1]), 0.25 * (B[0] - B[2])],
             [0.25 * (B[0] - B[2]), 0.25 * (B[1] - B[3])]],
            "T2(f)",
        )

    @cached_property
    def V(self) -> BlockOperator:
        """Velocity trace operator: V(f)[beta] = T1[beta] + T2[f' beta]."""
        fp = np.tile(self.geometry.fp, 2)[None, :]
        return BlockOperator(self.grid, self.T1.entries + self.T2.entries * fp, "V(f)")

    def apply_T1(self, beta) -> np.ndarray:
        """T1(f)[beta] by matrix-vector products with the B0_{n,2} blocks."""
        B = self.B2
        b1, b2 = beta
        return 0.25 * np.array([B[2] @ b1 - B[0] @ b1 + B[3] @ b2 - B[1] @ b2,
                                B[3] @ b1 - B[1] @ b1 - 3.0 * (B[2] @ b2) - B[0] @ b2])

    def apply_T2(self, beta) -> np.ndarray:
        B = self.B2
        b1, b2 = beta
        return 0.25 * np.array([-(B[3] @ b1) - 3.0 * (B[1] @ b1) + B[0] @ b2 - B[2] @ b2,
                                B[0] @ b1 - B[2] @ b1 + B[1] @ b2 - B[3] @ b2])

    def apply_V(self, beta) -> np.ndarray:
        """V(f)[beta] = T1[beta] + T2[f' beta] without forming the block matrix."""
        beta = np.asarray(beta, dtype=float)
        return self.apply_T1(beta) + self.apply_T2(self.geometry.fp * beta)

    @cached_property
    def Bp1(self) -> OperatorMatrix:
        """Pressure trace operator with kernel (-r1 f'(s) + r2)/|r|^2."""
        B = self.B1
        return OperatorMatrix(self.grid, -B[0] * self._fp_diag() + B[1], "B1(f)")

    @cached_property
    def Bp2(self) -> OperatorMatrix:
        """Pressure trace operator with kernel (r1 + r2 f'(s))/|r|^2."""
        B = self.B1
        return OperatorMatrix(self.grid, B[0] + B[1] * self._fp_diag(), "B2(f)")


def assemble_D(grid: Grid, f) -> BlockOperator:
    return OperatorSet(grid, grid.check(f, "f")).D


def assemble_Dstar(grid: Grid, f) -> BlockOperator:
    return OperatorSet(grid, grid.check(f, "f")).Dstar


def assemble_V(grid: Grid, f) -> BlockOperator:
    return OperatorSet(grid, grid.check(f, "f")).V


def assemble_T1T2B1B2(grid: Grid, f):
    ops = OperatorSet(grid, grid.check(f, "f"))
    return ops.T1, ops.T2, ops.Bp1, ops.Bp2


def _side_sign(side) -> int:
    if side in ("+", 1, +1):
        return 1
    if side in ("-", -1):
        return -1
    raise ValueError(f"side must be '+' or '-', got {side!r}")


def tilde_traces(ops: OperatorSet, beta, side):
    """Boundary traces of the unit-viscosity single layer potential.

    Returns ``(gradu, Pi)`` where ``gradu[i, j]`` holds d_j u_i on the
    ``side`` ('+' above, '-' below the interface) and ``Pi`` is the pressure.
    """
    s = _side_sign(side)
    beta = ops.grid.check(beta, "beta")
    geo = ops.geometry
    bt = np.sum(beta * geo.tau, axis=0)
    bn = np.sum(beta * geo.nu, axis=0)
    gradu = np.empty((2, 2, ops.grid.N))
    gradu[:, 0] = ops.apply_T1(beta)
    gradu[:, 1] = ops.apply_T2(beta)
    gradu -= s * (bt / (2.0 * geo.omega)) * geo.tau[:, None, :] * geo.nu[None, :, :]
    Pi = 0.5 * (s * bn / geo.omega + ops.Bp1(bn / geo.omega) + ops.Bp2(bt / geo.omega))
    return gradu, Pi


def stress_trace(gradu: np.ndarray, Pi: np.ndarray) -> np.ndarray:
    """Symmetrized gradient minus pressure: grad u + grad u^T - Pi*Id."""
    T = gradu + gradu.transpose(1, 0, 2)
    T[0, 0] -= Pi
    T[1, 1] -= Pi
    return T
