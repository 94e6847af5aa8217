"""Principal-value quadrature for the difference-quotient operators B_{n,m}.

For functions a_1..a_m, b_1..b_n and a density h on the line,

    B_{n,m}(a)[b, h](xi) = (1/pi) PV int h(xi-eta)/eta
                           * prod_i (d b_i/eta) / prod_i (1 + (d a_i/eta)^2) deta

with ``d u = u(xi) - u(xi-eta)``. The PV integral is taken over
``eta in [-L, L]`` on the periodic extension of every input. Offsets
``eta = +-h`` get weight 3h/2, all other offsets weight h, and the ``eta = 0``
node is skipped; the ``eta = +-L`` endpoints share one node with weight h/2
each. The 3h/2 end weight absorbs the missing half cell next to the
singularity, which makes the rule third order without needing any one-sided
limit of the integrand.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .grid import Grid, GridError

# rows per assembly chunk, keeps temporaries near 64 MB at N = 8192
_CHUNK_ENTRIES = 1 << 23


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense Nystrom matrix of a scalar integral operator."""

    grid: Grid
    entries: np.ndarray
    kernel_id: str

    def __post_init__(self):
        N = self.grid.N
        if self.entries.shape != (N, N):
            raise GridError(f"{self.kernel_id}: expected {N}x{N}, got {self.entries.shape}")

    def __call__(self, u) -> np.ndarray:
        return self.entries @ np.asarray(u, dtype=float)

    @property
    def T(self) -> np.ndarray:
        return self.entries.T


@dataclass(frozen=True)
class BlockOperator:
    """Dense 2x2 block operator acting on density pairs of shape (2, N)."""

    grid: Grid
    entries: np.ndarray
    kernel_id: str

    def __post_init__(self):
        n2 = 2 * self.grid.N
        if self.entries.shape != (n2, n2):
            raise GridError(f"{self.kernel_id}: expected {n2}x{n2}, got {self.entries.shape}")

    @classmethod
    def from_blocks(cls, grid: Grid, blocks, kernel_id: str) -> "BlockOperator":
        return cls(grid, np.block([[np.asarray(b) for b in row] for row in blocks]), kernel_id)

    def block(self, i: int, j: int) -> np.ndarray:
        N = self.grid.N
        return self.entries[i * N:(i + 1) * N, j * N:(j + 1) * N]

    def __call__(self, beta) -> np.ndarray:
        beta = np.asarray(beta, dtype=float)
        return (self.entries @ beta.reshape(-1)).reshape(2, -1)


def offsets(grid: Grid):
    """Offsets k = 1..N-1, signed eta and quadrature weights of the PV rule.

    Entry k pairs node i with node (i - k) mod N. The k = N/2 entry stands
    for both eta = +L and eta = -L; its weight h/2 applies to each.
    """
    N, h = grid.N, grid.h
    k = np.arange(1, N)
    eta = np.where(k < N // 2, k, k - N) * h
    eta[N // 2 - 1] = grid.L
    w = np.full(N - 1, h)
    w[0] = w[-1] = 1.5 * h
    w[N // 2 - 1] = 0.5 * h
    return k, eta.astype(float), w


def apply_Bnm(grid: Grid, a, b, h) -> np.ndarray:
    """Evaluate B_{n,m}(a_1..a_m)[b_1..b_n, h] at every node.

    ``a`` and ``b`` are sequences of sample arrays (possibly empty). The work
    is O(N^2) with O(N) memory, one offset at a time.
    """
    a = [grid.check(ai, "a") for ai in a]
    b = [grid.check(bi, "b") for bi in b]
    h = grid.check(h, "h")
    N = grid.N
    ks, etas, ws = offsets(grid)
    out = np.zeros(N)
    for k, eta, w in zip(ks, etas, ws):
        hs = np.roll(h, k)
        num = np.ones(N)
        for bi in b:
            num = num * (bi - np.roll(bi, k)) / eta
        den = np.ones(N)
        for ai in a:
            den = den * (1.0 + ((ai - np.roll(ai, k)) / eta) ** 2)
        term = num / den / eta
        if k == N // 2:
            # eta = -L flips every quotient and the 1/eta factor
            term = term * (1.0 - (-1.0) ** len(b))
        out += w * hs * term
    return out / np.pi


def _periodic_eta(grid: Grid, rows: np.ndarray):
    """Signed offsets eta_ij and weights w_ij for the rows given."""
    N, h = grid.N, grid.h
    j = np.arange(N)
    k = (rows[:, None] - j[None, :]) % N
    eta = np.where(k <= N // 2, k, k - N) * h
    w = np.full(k.shape, h)
    w[(k == 1) | (k == N - 1)] = 1.5 * h
    w[k == N // 2] = 0.5 * h
    w[k == 0] = 0.0
    eta = eta.astype(float)
    eta[k == 0] = 1.0
    return eta, w, k == N // 2


@lru_cache(maxsize=4)
def _offset_tables(grid: Grid, r0: int, r1: int):
    eta, w, seam = _periodic_eta(grid, np.arange(r0, r1))
    for a in (eta, w, seam):
        a.setflags(write=False)
    return eta, w, seam


def assemble_family(grid: Grid, f, ns, m: int) -> dict:
    """Matrices of B0_{n,m}(f) for several n sharing one m.

    All quotient slots are filled with ``f``. Returns ``{n: OperatorMatrix}``.
    """
    f = grid.check(f, "f")
    N = grid.N
    ns = sorted(set(int(n) for n in ns))
    out = {n: np.empty((N, N)) for n in ns}
    step = max(1, _CHUNK_ENTRIES // N)
    for r0 in range(0, N, step):
        r1 = min(N, r0 + step)
        if step >= N:
            eta, w, seam = _offset_tables(grid, r0, r1)
        else:
            eta, w, seam = _periodic_eta(grid, np.arange(r0, r1))
        q = (f[r0:r1, None] - f[None, :]) / eta
        c = w / ((1.0 + q * q) ** m * eta * np.pi)
        for n in range(ns[-1] + 1):
            if n in out:
                blk = out[n][r0:r1]
                blk[...] = c
                # the eta = -L image flips odd powers of q and the 1/eta factor
                blk[seam] = 0.0 if n % 2 == 0 else 2.0 * c[seam]
            if n < ns[-1]:
                c = c * q
    return {n: OperatorMatrix(grid, out[n], f"B0_{{{n},{m}}}(f)") for n in ns}


def assemble_Bnm0(grid: Grid, f, n: int, m: int) -> OperatorMatrix:
    """Nystrom matrix of B0_{n,m}(f) = B_{n,m}(f..f)[f..f, .]."""
    if n < 0 or m < 0:
        raise GridError(f"kernel indices must be non-negative, got n={n}, m={m}")
    return assemble_family(grid, f, [n], m)[n]
