"""Residuals of the operator identities, shared by the tests and the CLI.

Every residual is returned as an :class:`IdentityReport`. Residuals of
pointwise identities are measured on the central window |xi| <= window*L,
where the periodic images of slowly decaying operator outputs are negligible;
the energy identities integrate over the whole grid.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .grid import Grid, derivative, h1_norm, inner, l2_norm, make_grid
from .kernels import apply_Bnm
from .potentials import OperatorSet, geometry_of, geometry_residual, stress_trace, tilde_traces

# relative residuals at or below this level count as exact (roundoff)
ROUNDOFF = 1e-11


@dataclass
class IdentityReport:
    identity_id: str
    residual_l2: float
    reference_norm: float
    L: float
    N: int
    refinement_order: float | None = None
    extra: dict = field(default_factory=dict)

    @property
    def relative(self) -> float:
        if self.reference_norm == 0.0:
            return 0.0 if self.residual_l2 == 0.0 else math.inf
        return self.residual_l2 / self.reference_norm

    def as_dict(self) -> dict:
        d = asdict(self)
        d["relative"] = self.relative
        return d


def standard_profile(grid: Grid, amplitude: float = 0.3) -> np.ndarray:
    return amplitude * np.exp(-grid.nodes**2)


def gaussian_density(grid: Grid) -> np.ndarray:
    x = grid.nodes
    return np.array([np.exp(-(x - 0.3) ** 2), 0.5 * x * np.exp(-0.5 * x**2)])


def random_density(grid: Grid, seed: int = 0, width: float = 1.0, kmax: float = 2.0,
                   symmetric: bool = True) -> np.ndarray:
    """Seeded band-limited noise under a Gaussian envelope, differentiated twice.

    The second derivative removes the zeroth and first moments. With
    ``symmetric`` the noise is even, matching the even standard profile; odd
    parts leave 1/xi tails in D(f)[beta] whose periodic images put an
    N-independent floor under the anticommutation residual.
    """
    rng = np.random.default_rng(seed)
    x = grid.nodes
    env = np.exp(-0.5 * (x / width) ** 2)
    out = np.empty((2, grid.N))
    for i in range(2):
        k = rng.uniform(0.0, kmax, 4)
        ph = rng.uniform(0.0, 2.0 * np.pi, 4)
        if symmetric:
            ph[:] = 0.0
        c = rng.standard_normal(4)
        psi = env * np.sum(c[:, None] * np.cos(k[:, None] * x[None, :] + ph[:, None]), axis=0)
        out[i] = derivative(grid, psi, 2)
    return out


def _window(grid: Grid, window: float | None):
    return None if window is None else grid.interior(window)


def residual_geometry(grid: Grid, f) -> IdentityReport:
    geo = geometry_of(grid, f)
    r = geometry_residual(grid, geo)
    ref = float(np.max(np.abs(derivative(grid, geo.g))))
    return IdentityReport("geometry", float(np.max(np.abs(r))), ref, grid.L, grid.N,
                          extra={"norm": "max"})


def residual_comder(grid: Grid, f, beta, window: float | None = 0.5,
                    ops: OperatorSet | None = None) -> IdentityReport:
    """(D(f)[beta])' + D(f)*[beta'], relative to |beta|_{H^1}."""
    ops = ops or OperatorSet(grid, f)
    beta = grid.check(beta, "beta")
    lhs = derivative(grid, ops.D(beta))
    rhs = ops.Dstar(derivative(grid, beta))
    r = l2_norm(grid, lhs + rhs, _window(grid, window))
    ref = math.sqrt(sum(h1_norm(grid, b) ** 2 for b in beta))
    return IdentityReport("comder", r, ref, grid.L, grid.N)


def residual_anticommute(grid: Grid, f, beta, window: float | None = 0.5,
                         ops: OperatorSet | None = None) -> IdentityReport:
    """(V(f)D(f) + D(f)V(f))[beta], relative to |beta|_2."""
    ops = ops or OperatorSet(grid, f)
    beta = grid.check(beta, "beta")
    r = ops.V(ops.D(beta)) + ops.D(ops.V(beta))
    return IdentityReport("anticommute", l2_norm(grid, r, _window(grid, window)),
                          l2_norm(grid, beta), grid.L, grid.N)


def rellich_sides(ops: OperatorSet, beta, which: str, side: str):
    """Left side, right side and scale of one boundary energy identity.

    R1: |T1 + Pi Id|^2 = 4 <d2u, (-+1/2 - D*)beta>
    R2: |grad u|^2 = 2 <d2u, omega (grad u - Pi Id) nu>
    R5: 2 <(rot u, Pi), (-+1/2 - D*)beta + Pi (-f', 1)> = |Pi|^2 - |rot u|^2
    """
    grid = ops.grid
    geo = ops.geometry
    s = 1.0 if side == "+" else -1.0
    gradu, Pi = tilde_traces(ops, beta, side)
    d2u = gradu[:, 1]
    jump = -0.5 * s * beta - ops.Dstar(beta)
    if which == "R1":
        sym = gradu + gradu.transpose(1, 0, 2)
        lhs = inner(grid, sym, sym)
        rhs = 4.0 * inner(grid, d2u, jump)
        scale = abs(lhs) + abs(rhs)
    elif which == "R2":
        M = gradu.copy()
        M[0, 0] -= Pi
        M[1, 1] -= Pi
        Mn = geo.omega * np.einsum("ijn,jn->in", M, geo.nu)
        lhs = inner(grid, gradu, gradu)
        rhs = 2.0 * inner(grid, d2u, Mn)
        scale = abs(lhs) + abs(rhs)
    elif which == "R5":
        rot = gradu[1, 0] - gradu[0, 1]
        v = jump + Pi * np.array([-geo.fp, np.ones(grid.N)])
        lhs = 2.0 * inner(grid, np.array([rot, Pi]), v)
        rhs = inner(grid, Pi, Pi) - inner(grid, rot, rot)
        # both sides vanish for a flat interface, so scale by the terms instead
        scale = inner(grid, Pi, Pi) + inner(grid, rot, rot)
    else:
        raise ValueError(f"unknown Rellich identity {which!r}")
    return float(lhs), float(rhs), float(scale)


def residual_rellich(grid: Grid, f, beta, which: str, side: str,
                     ops: OperatorSet | None = None) -> IdentityReport:
    ops = ops or OperatorSet(grid, f)
    beta = grid.check(beta, "beta")
    lhs, rhs, scale = rellich_sides(ops, beta, which, side)
    return IdentityReport(f"rellich_{which}{side}", abs(lhs - rhs), scale, grid.L, grid.N,
                          extra={"lhs": lhs, "rhs": rhs})


def residual_ffff(grid: Grid, f, beta, side: str, ops: OperatorSet | None = None) -> IdentityReport:
    """omega (T1 stress trace) nu - (-+1/2 - D*)beta, relative to |beta|_2."""
    ops = ops or OperatorSet(grid, f)
    beta = grid.check(beta, "beta")
    geo = ops.geometry
    s = 1.0 if side == "+" else -1.0
    gradu, Pi = tilde_traces(ops, beta, side)
    T = stress_trace(gradu, Pi)
    lhs = geo.omega * np.einsum("ijn,jn->in", T, geo.nu)
    rhs = -0.5 * s * beta - ops.Dstar(beta)
    return IdentityReport(f"ffff{side}", l2_norm(grid, lhs - rhs), l2_norm(grid, beta),
                          grid.L, grid.N)


def residual_fder(grid: Grid, f, h, n: int, m: int, window: float | None = 0.5) -> IdentityReport:
    """Product rule for B0_{n,m}(f)[h]: every quotient slot filled with f.

    (B[f..f, h])' = B[f..f, h'] + n B[f..f, f', h] - 2m B_{n+2,m+1}[f..f, f', f, h]
    """
    f = grid.check(f, "f")
    h = grid.check(h, "h")
    fp = derivative(grid, f)
    a = [f] * m
    b = [f] * n
    lhs = derivative(grid, apply_Bnm(grid, a, b, h))
    rhs = apply_Bnm(grid, a, b, derivative(grid, h))
    if n:
        rhs = rhs + n * apply_Bnm(grid, a, [f] * (n - 1) + [fp], h)
    if m:
        rhs = rhs - 2 * m * apply_Bnm(grid, [f] * (m + 1), b + [fp, f], h)
    return IdentityReport(f"fder_{n}{m}", l2_norm(grid, lhs - rhs, _window(grid, window)),
                          h1_norm(grid, h), grid.L, grid.N)


def observed_orders(reports: list[IdentityReport]) -> list[float]:
    """log2 ratios of successive relative residuals on a doubling ladder."""
    out = []
    for a, b in zip(reports, reports[1:]):
        ra, rb = a.relative, b.relative
        out.append(math.log2(ra / rb) if ra > 0 and rb > 0 else math.inf)
    return out


def converges(reports: list[IdentityReport], min_order: float = 1.5) -> bool:
    """Order >= min_order on every doubling, or already at roundoff level."""
    rel = [r.relative for r in reports]
    if max(rel) <= ROUNDOFF:
        return True
    return all(o >= min_order or rb <= ROUNDOFF
               for o, rb in zip(observed_orders(reports), rel[1:]))


def refinement(fn, L: float, Ns, profile=standard_profile, density=random_density, **kw):
    """Evaluate ``fn(grid, f, beta, ops=...)`` over a ladder of N at fixed L."""
    reports = []
    for N in Ns:
        grid = make_grid(L, N)
        f = profile(grid)
        ops = OperatorSet(grid, f)
        reports.append(fn(grid, f, density(grid), ops=ops, **kw))
    orders = observed_orders(reports)
    for r, o in zip(reports[1:], orders):
        r.refinement_order = o
    return reports
