"""Interface evolution df/dt = Phi(mu_plus, f) and the vanishing viscosity sweep.

Phi(mu_plus, f) = sigma/(mu_plus + mu) * [(1/2 + a D(f))^{-1} V(f)[g(f)]] . (-f', 1)
with a = (mu_plus - mu)/(mu_plus + mu). mu_plus = 0 is the one-phase problem.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .grid import Grid, sobolev_norm
from .potentials import OperatorSet
from .solver import SolverReport, solve_density


class EvolutionError(ArithmeticError):
    """Time stepping failed; ``diagnostics`` carries the state at failure."""

    def __init__(self, message: str, diagnostics: dict | None = None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class StepSizeError(EvolutionError):
    pass


class ContaminationError(EvolutionError):
    pass


@dataclass(frozen=True)
class PhysicalParams:
    mu: float = 1.0
    mu_plus: float = 0.0
    sigma: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be positive, got {self.mu}")
        if not self.sigma > 0:
            raise ValueError(f"sigma must be positive, got {self.sigma}")
        if not self.mu_plus >= 0:
            raise ValueError(f"mu_plus must be non-negative, got {self.mu_plus}")

    @property
    def a_mu(self) -> float:
        return (self.mu_plus - self.mu) / (self.mu_plus + self.mu)


@dataclass(frozen=True)
class StepControls:
    """Adaptive stepping knobs.

    ``contamination`` bounds max|f| on the outer 10% of nodes relative to
    max|f| during the run; ``initial_contamination`` is the stricter bound
    the initial profile must meet.
    """

    rtol: float = 1e-8
    atol: float = 1e-8
    norm_index: float = 1.75
    cfl: float = 0.5
    dt_min: float = 1e-12
    contamination: float = 0.1
    initial_contamination: float = 1e-8
    max_steps: int = 100_000


@dataclass
class SimulationState:
    t: float
    f: np.ndarray
    params: PhysicalParams
    norms: list = field(default_factory=list)
    contamination: float = 0.0
    solver: SolverReport | None = None
    dt_next: float | None = None
    accepted: int = 0
    rejected: int = 0
    last_error: float = 0.0
    rate: np.ndarray | None = field(default=None, repr=False)

    def copy(self) -> "SimulationState":
        return replace(self, f=self.f.copy(), norms=list(self.norms))


def phi(grid: Grid, params: PhysicalParams, f, ops: OperatorSet | None = None,
        return_report: bool = False):
    """Normal velocity of the interface Phi(mu_plus, f) at every node."""
    f = grid.check(f, "f")
    ops = ops if ops is not None else OperatorSet(grid, f)
    geo = ops.geometry
    if not np.any(f):
        out = np.zeros(grid.N)
        rep = SolverReport(0.0, 1.0, float("nan"), 0.0)
        return (out, rep) if return_report else out
    rhs = ops.apply_V(geo.g)
    beta, rep = solve_density(ops, 0.5, params.a_mu, rhs)
    out = params.sigma / (params.mu_plus + params.mu) * (-geo.fp * beta[0] + beta[1])
    return (out, rep) if return_report else out


def phi_one_phase_dual(grid: Grid, params: PhysicalParams, f, ops: OperatorSet | None = None):
    """One-phase Phi through V(f)(1/2 + D(f))^{-1}[g]; equals phi(mu_plus=0)."""
    f = grid.check(f, "f")
    ops = ops if ops is not None else OperatorSet(grid, f)
    geo = ops.geometry
    beta, _ = solve_density(ops, 0.5, 1.0, geo.g)
    w = ops.apply_V(beta)
    return params.sigma / params.mu * (-geo.fp * w[0] + w[1])


def contamination_level(f) -> float:
    """max|f| on the outer 10% of nodes relative to max|f| (0 for f = 0)."""
    f = np.asarray(f)
    top = np.max(np.abs(f))
    if top == 0.0:
        return 0.0
    n = max(1, int(math.ceil(0.05 * f.size)))
    edge = max(np.max(np.abs(f[:n])), np.max(np.abs(f[-n:])))
    return float(edge / top)


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def cfl_limit(grid: Grid, params: PhysicalParams, controls: StepControls) -> float:
    return controls.cfl * grid.h * (params.mu_plus + params.mu) / params.sigma


def _diagnostics(state: SimulationState, dt: float) -> dict:
    return {"t": state.t, "dt": dt, "accepted": state.accepted, "rejected": state.rejected,
            "contamination": state.contamination,
            "norm": state.norms[-1] if state.norms else None}


def step(grid: Grid, state: SimulationState, dt_max: float,
         controls: StepControls = StepControls()) -> SimulationState:
    """Advance by one accepted Dormand-Prince step of size at most dt_max.

    The local error is measured in the H^s proxy norm (s = controls.norm_index)
    against atol + rtol*|f|_{H^s}. Rejected attempts shrink the step.
    """
    params = state.params
    s = controls.norm_index
    dt_cap = min(dt_max, cfl_limit(grid, params, controls))
    dt = min(state.dt_next or dt_cap, dt_cap)
    f0 = state.f
    if state.rate is not None:
        k0, rep = state.rate, state.solver
    else:
        k0, rep = phi(grid, params, f0, return_report=True)
    if not np.any(f0) and not np.any(k0):
        new = state.copy()
        new.t = state.t + dt
        new.accepted += 1
        new.norms.append(0.0)
        new.dt_next = dt_cap
        return new
    scale = controls.atol + controls.rtol * sobolev_norm(grid, f0, s)
    rejected = 0
    while True:
        if dt < controls.dt_min:
            raise StepSizeError("stiffness/blow-up suspected: step size underflow",
                                _diagnostics(state, dt))
        K = [k0]
        for i in range(1, 7):
            y = f0 + dt * sum(a * k for a, k in zip(_A[i], K))
            K.append(phi(grid, params, y))
        f_new = f0 + dt * sum(b * k for b, k in zip(_B5, K) if b != 0.0)
        err = dt * sum(e * k for e, k in zip(_E, K) if e != 0.0)
        ratio = sobolev_norm(grid, err, s) / scale
        if not np.all(np.isfinite(f_new)) or not np.isfinite(ratio):
            ratio = np.inf
        if ratio <= 1.0:
            break
        rejected += 1
        shrink = 0.2 if not np.isfinite(ratio) else max(0.2, 0.9 * ratio ** -0.2)
        dt *= shrink
    grow = 5.0 if ratio == 0.0 else min(5.0, max(0.2, 0.9 * ratio ** -0.2))
    new = state.copy()
    new.t = state.t + dt
    new.f = f_new
    new.accepted += 1
    new.rejected += rejected
    new.solver = rep
    new.rate = K[6]  # last stage sits at f_new (first same as last)
    new.last_error = float(ratio * scale)
    new.dt_next = min(dt * grow, cfl_limit(grid, params, controls))
    new.norms.append(sobolev_norm(grid, f_new, s))
    new.contamination = contamination_level(f_new)
    if new.contamination > controls.contamination:
        raise ContaminationError(
            f"boundary contamination {new.contamination:.3e} exceeds {controls.contamination:.3e}",
            _diagnostics(new, dt))
    return new


def initial_state(grid: Grid, f0, params: PhysicalParams,
                  controls: StepControls = StepControls()) -> SimulationState:
    f0 = grid.check(f0, "f0").copy()
    level = contamination_level(f0)
    if level > controls.initial_contamination:
        raise ContaminationError(
            f"initial profile not boundary-clean: edge level {level:.3e} > "
            f"{controls.initial_contamination:.3e}", {"contamination": level})
    return SimulationState(0.0, f0, params, [sobolev_norm(grid, f0, controls.norm_index)], level)


def simulate(grid: Grid, f0, params: PhysicalParams, T: float, output_times=None,
             controls: StepControls = StepControls()) -> list[SimulationState]:
    """Integrate to time T and return the states at the requested output times.

    Output times default to [0, T]; steps are clipped to land on them exactly.
    """
    if T < 0:
        raise ValueError(f"final time must be non-negative, got {T}")
    times = sorted(set([0.0, float(T)] if output_times is None else [float(t) for t in output_times]))
    if times[0] < 0 or times[-1] > T + 1e-14:
        raise ValueError("output times must lie in [0, T]")
    state = initial_state(grid, f0, params, controls)
    out = []
    for target in times:
        while state.t < target - 1e-14 * max(1.0, target):
            if state.accepted + state.rejected >= controls.max_steps:
                raise EvolutionError("step budget exhausted", _diagnostics(state, 0.0))
            state = step(grid, state, target - state.t, controls)
        state.t = target if abs(state.t - target) <= 1e-12 * max(1.0, target) else state.t
        out.append(state.copy())
    return out


def worker_count(default: int | None = None) -> int:
    """Worker cap from CAPSTOKES_THREADS (falls back to the CPU count)."""
    raw = os.environ.get("CAPSTOKES_THREADS")
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"CAPSTOKES_THREADS must be a positive integer, got {raw!r}")
        if n < 1:
            raise ValueError(f"CAPSTOKES_THREADS must be a positive integer, got {raw!r}")
        return n
    return default or os.cpu_count() or 1


@dataclass
class SweepReport:
    mu_plus: list
    errors: list
    slope: float | None
    baseline: list
    runs: dict
    failed: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {"mu_plus": list(self.mu_plus), "errors": list(self.errors),
                "slope": self.slope, "failed": dict(self.failed)}


def fit_slope(x, y) -> float | None:
    """Least-squares slope of log y against log x over positive pairs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0)
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def sweep_error(grid: Grid, base: list, run: list, base_params: PhysicalParams,
                params: PhysicalParams, s: float = 1.75) -> float:
    """max_t |f_0 - f_mu|_{H^s} + max_t |Phi(0, f_0) - Phi(mu_plus, f_mu)|_{H^{s-1}}."""
    e_f = max(sobolev_norm(grid, a.f - b.f, s) for a, b in zip(base, run))
    e_t = max(sobolev_norm(grid, phi(grid, base_params, a.f) - phi(grid, params, b.f), s - 1.0)
              for a, b in zip(base, run))
    return float(e_f + e_t)


def mu_sweep(grid: Grid, f0, mu: float, sigma: float, T: float, mu_plus_list,
             output_times=None, controls: StepControls = StepControls(),
             workers: int | None = None) -> SweepReport:
    """Run the one-phase baseline and each mu_plus, report E(mu_plus) and its log-log slope.

    Member runs fan out over a thread pool capped by CAPSTOKES_THREADS;
    results are collected in input order so the report is deterministic.
    """
    mu_plus_list = [float(m) for m in mu_plus_list]
    if not mu_plus_list:
        raise ValueError("mu_plus list is empty")
    if output_times is None:
        output_times = list(np.linspace(0.0, T, 11))
    base_params = PhysicalParams(mu, 0.0, sigma)
    all_params = [base_params] + [PhysicalParams(mu, m, sigma) for m in mu_plus_list]
    workers = workers or worker_count()

    def run(p):
        return simulate(grid, f0, p, T, output_times, controls)

    with ThreadPoolExecutor(max_workers=min(workers, len(all_params))) as pool:
        futures = [pool.submit(run, p) for p in all_params]
        results, failed = [], {}
        for p, fut in zip(all_params, futures):
            try:
                results.append(fut.result())
            except EvolutionError as exc:
                failed[p.mu_plus] = str(exc)
                results.append(None)
    if results[0] is None:
        raise EvolutionError("baseline run failed", {"failed": failed})
    base = results[0]
    errors, runs = [], {}
    for p, res in zip(all_params[1:], results[1:]):
        if res is None:
            errors.append(None)
            continue
        runs[p.mu_plus] = res
        errors.append(sweep_error(grid, base, res, base_params, p, controls.norm_index))
    report = SweepReport(mu_plus_list, errors, None, base, runs, failed)
    if failed:
        raise EvolutionError("sweep member run failed", {"partial": report.as_dict()})
    report.slope = fit_slope(mu_plus_list, errors)
    return report
