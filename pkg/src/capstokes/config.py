"""JSON run configuration: parsing, validation and initial profiles.

Example::

    {
      "grid": {"L": 16, "N": 512},
      "profile": {"family": "gaussian", "a": 0.2, "w": 1.0},
      "params": {"mu": 1.0, "mu_plus": 0.0, "sigma": 1.0},
      "T": 1.0,
      "n_outputs": 11,
      "rtol": 1e-8,
      "cfl": 0.5,
      "contamination": 0.1,
      "seed": 0
    }

Sweeps add ``"mu_plus_list"``; field sampling adds ``"points"`` (list of
[x1, x2]) and/or ``"point_grid"`` ({"x1": [lo, hi, n], "x2": [lo, hi, n]}).
Profiles come from the families flat, gaussian(a, w, c) and
bump_sum(bumps=[{a, w, c}, ...]), or from ``{"file": path}`` holding one
value per node (CSV or whitespace separated).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .evolution import PhysicalParams, StepControls
from .grid import Grid, GridError, make_grid


class ConfigError(ValueError):
    """Malformed or inconsistent configuration; the message names the key."""


_TOP_KEYS = {"grid", "profile", "params", "T", "output_times", "n_outputs", "rtol", "atol",
             "cfl", "contamination", "initial_contamination", "norm_index", "seed",
             "mu_plus_list", "points", "point_grid", "fd_step", "verify"}


@dataclass
class RunConfig:
    grid: Grid
    profile: dict
    params: PhysicalParams
    T: float = 1.0
    output_times: list = field(default_factory=list)
    controls: StepControls = field(default_factory=StepControls)
    seed: int = 0
    mu_plus_list: list | None = None
    points: np.ndarray | None = None
    fd_step: float = 1e-3
    verify: dict = field(default_factory=dict)
    source: str | None = None

    def initial_profile(self) -> np.ndarray:
        return build_profile(self.grid, self.profile, self.source)

    def describe(self) -> dict:
        c = self.controls
        return {
            "grid": {"L": self.grid.L, "N": self.grid.N},
            "profile": self.profile,
            "params": {"mu": self.params.mu, "mu_plus": self.params.mu_plus,
                       "sigma": self.params.sigma},
            "T": self.T,
            "output_times": list(self.output_times),
            "controls": {"rtol": c.rtol, "atol": c.atol, "cfl": c.cfl,
                         "norm_index": c.norm_index, "contamination": c.contamination,
                         "initial_contamination": c.initial_contamination},
            "seed": self.seed,
        }


def _num(d: dict, key: str, default=None, *, path: str, positive=False, nonneg=False):
    if key not in d:
        if default is None:
            raise ConfigError(f"missing key '{path}{key}'")
        return default
    v = d[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)) or not np.isfinite(v):
        raise ConfigError(f"key '{path}{key}' must be a finite number, got {v!r}")
    if positive and not v > 0:
        raise ConfigError(f"key '{path}{key}' must be positive, got {v!r}")
    if nonneg and not v >= 0:
        raise ConfigError(f"key '{path}{key}' must be non-negative, got {v!r}")
    return float(v)


def _profile_part(grid: Grid, bump: dict, path: str) -> np.ndarray:
    if not isinstance(bump, dict):
        raise ConfigError(f"key '{path}' must be an object")
    a = _num(bump, "a", 0.2, path=path + ".")
    w = _num(bump, "w", 1.0, path=path + ".", positive=True)
    c = _num(bump, "c", 0.0, path=path + ".")
    return a * np.exp(-(((grid.nodes - c) / w) ** 2))


def build_profile(grid: Grid, prof: dict, source: str | None = None) -> np.ndarray:
    if "file" in prof:
        p = Path(prof["file"])
        if not p.is_absolute() and source:
            p = Path(source).parent / p
        try:
            text = p.read_text()
        except OSError as exc:
            raise ConfigError(f"key 'profile.file': cannot read {p}: {exc.strerror}")
        try:
            vals = np.array(text.replace(",", " ").split(), dtype=float)
        except ValueError:
            raise ConfigError(f"key 'profile.file': {p} does not hold numbers")
        if vals.size != grid.N:
            raise ConfigError(f"key 'profile.file': {vals.size} values for {grid.N} nodes")
        return vals
    fam = prof.get("family")
    if fam == "flat":
        return np.zeros(grid.N)
    if fam == "gaussian":
        return _profile_part(grid, prof, "profile")
    if fam == "bump_sum":
        bumps = prof.get("bumps")
        if not isinstance(bumps, list) or not bumps:
            raise ConfigError("key 'profile.bumps' must be a non-empty list")
        return sum(_profile_part(grid, b, f"profile.bumps[{i}]") for i, b in enumerate(bumps))
    raise ConfigError(f"key 'profile.family' must be flat, gaussian or bump_sum, got {fam!r}")


def parse_config(data: dict, source: str | None = None) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    unknown = sorted(set(data) - _TOP_KEYS)
    if unknown:
        raise ConfigError(f"unknown key '{unknown[0]}'")
    g = data.get("grid", {})
    if not isinstance(g, dict):
        raise ConfigError("key 'grid' must be an object")
    L = _num(g, "L", 16.0, path="grid.", positive=True)
    N = g.get("N", 512)
    if isinstance(N, bool) or not isinstance(N, int):
        raise ConfigError(f"key 'grid.N' must be an integer, got {N!r}")
    try:
        grid = make_grid(L, N)
    except GridError as exc:
        raise ConfigError(f"key 'grid.N': {exc}")
    prof = data.get("profile", {"family": "gaussian", "a": 0.2, "w": 1.0})
    if not isinstance(prof, dict):
        raise ConfigError("key 'profile' must be an object")
    p = data.get("params", {})
    if not isinstance(p, dict):
        raise ConfigError("key 'params' must be an object")
    params = PhysicalParams(
        _num(p, "mu", 1.0, path="params.", positive=True),
        _num(p, "mu_plus", 0.0, path="params.", nonneg=True),
        _num(p, "sigma", 1.0, path="params.", positive=True),
    )
    T = _num(data, "T", 1.0, path="", nonneg=True)
    if "output_times" in data:
        ot = data["output_times"]
        if not isinstance(ot, list) or not ot:
            raise ConfigError("key 'output_times' must be a non-empty list")
        times = [_num({"t": t}, "t", path="output_times.") for t in ot]
        if min(times) < 0 or max(times) > T:
            raise ConfigError("key 'output_times' must lie in [0, T]")
    else:
        n = data.get("n_outputs", 11)
        if isinstance(n, bool) or not isinstance(n, int) or n < 2:
            raise ConfigError(f"key 'n_outputs' must be an integer >= 2, got {n!r}")
        times = [float(t) for t in np.linspace(0.0, T, n)]
    controls = StepControls(
        rtol=_num(data, "rtol", 1e-8, path="", positive=True),
        atol=_num(data, "atol", 1e-8, path="", positive=True),
        norm_index=_num(data, "norm_index", 1.75, path="", nonneg=True),
        cfl=_num(data, "cfl", 0.5, path="", positive=True),
        contamination=_num(data, "contamination", 0.1, path="", positive=True),
        initial_contamination=_num(data, "initial_contamination", 1e-8, path="", positive=True),
    )
    if controls.norm_index > 3:
        raise ConfigError("key 'norm_index' must lie in [0, 3]")
    seed = data.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError(f"key 'seed' must be an integer, got {seed!r}")
    mpl = data.get("mu_plus_list")
    if mpl is not None:
        if not isinstance(mpl, list) or not mpl:
            raise ConfigError("key 'mu_plus_list' must be a non-empty list")
        mpl = [_num({"v": v}, "v", path="mu_plus_list.", positive=True) for v in mpl]
    points = _parse_points(data)
    cfg = RunConfig(grid, prof, params, T, times, controls, seed, mpl, points,
                    _num(data, "fd_step", 1e-3, path="", positive=True),
                    data.get("verify", {}), source)
    cfg.initial_profile()  # validates the profile keys now
    return cfg


def _parse_points(data: dict):
    pts = []
    if "points" in data:
        raw = data["points"]
        if not isinstance(raw, list):
            raise ConfigError("key 'points' must be a list of [x1, x2] pairs")
        for i, p in enumerate(raw):
            if (not isinstance(p, list) or len(p) != 2
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in p)):
                raise ConfigError(f"key 'points[{i}]' must be a pair of numbers")
            pts.append([float(p[0]), float(p[1])])
    if "point_grid" in data:
        pg = data["point_grid"]
        axes = []
        for ax in ("x1", "x2"):
            rng = pg.get(ax) if isinstance(pg, dict) else None
            if (not isinstance(rng, list) or len(rng) != 3 or not isinstance(rng[2], int)
                    or rng[2] < 1):
                raise ConfigError(f"key 'point_grid.{ax}' must be [lo, hi, count]")
            axes.append(np.linspace(float(rng[0]), float(rng[1]), rng[2]))
        X1, X2 = np.meshgrid(*axes, indexing="ij")
        pts.extend(np.column_stack([X1.ravel(), X2.ravel()]).tolist())
    return np.array(pts, dtype=float) if pts else None


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {p}: {exc.strerror}")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {p} is not valid JSON: {exc.msg} (line {exc.lineno})")
    return parse_config(data, str(p))
