"""CSV, JSON and figure writers used by the CLI.

Everything written here is a pure function of its inputs (no timestamps, no
wall-clock timings), so identical runs give byte-identical files.
"""
from __future__ import annotations

import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# PNG metadata carries the matplotlib version only; drop it so files compare across installs
_PNG_META = {"Software": None}


def _clean(obj):
    """Recursively turn numpy scalars/arrays and non-finite floats into JSON values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True) + "\n")
    return path


def _fmt(x) -> str:
    return "" if x is None else format(float(x), ".17g")


def write_trajectory_csv(path, grid, states) -> Path:
    """Header ``t, xi_0, ...``; one row per output time with the profile values."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(["t"] + [_fmt(x) for x in grid.nodes])]
    for s in states:
        lines.append(",".join([_fmt(s.t)] + [_fmt(v) for v in s.f]))
    path.write_text("\n".join(lines) + "\n")
    return path


def read_trajectory_csv(path):
    """Inverse of :func:`write_trajectory_csv`: (nodes, times, profiles)."""
    with open(path) as fh:
        nodes = np.array(fh.readline().strip().split(",")[1:], dtype=float)
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return nodes, data[:, 0], data[:, 1:]


FIELD_COLUMNS = ("x1", "x2", "v1", "v2", "p", "residual", "status")


def write_fields_csv(path, rows) -> Path:
    """Rows are dicts with FIELD_COLUMNS keys; missing numbers are left empty."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(FIELD_COLUMNS)]
    for r in rows:
        lines.append(",".join([_fmt(r.get(c)) for c in FIELD_COLUMNS[:-1]] + [r["status"]]))
    path.write_text("\n".join(lines) + "\n")
    return path


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, metadata=_PNG_META)
    plt.close(fig)
    return path


def plot_profiles(path, grid, states, window: float = 0.5) -> Path:
    fig, ax = plt.subplots(figsize=(6.4, 3.6), layout="constrained")
    mask = grid.interior(window)
    cmap = plt.get_cmap("viridis")
    n = max(1, len(states) - 1)
    for i, s in enumerate(states):
        ax.plot(grid.nodes[mask], s.f[mask], color=cmap(i / n), lw=1.2, label=f"t = {s.t:.3g}")
    ax.set_xlabel(r"$\xi$")
    ax.set_ylabel(r"$f(t, \xi)$")
    if len(states) <= 12:
        ax.legend(fontsize=7, ncol=2, frameon=False)
    return _save(fig, path)


def plot_norms(path, times, norms, label: str) -> Path:
    fig, ax = plt.subplots(figsize=(5.0, 3.4), layout="constrained")
    ax.plot(times, norms, "o-", ms=3)
    ax.set_xlabel("t")
    ax.set_ylabel(label)
    return _save(fig, path)


def plot_sweep(path, mu_plus, errors, slope) -> Path:
    mu_plus = np.asarray(mu_plus, dtype=float)
    errors = np.array([np.nan if e is None else e for e in errors], dtype=float)
    fig, ax = plt.subplots(figsize=(5.0, 3.6), layout="constrained")
    ax.loglog(mu_plus, errors, "o-", label="E($\\mu^+$)")
    ok = np.isfinite(errors) & (errors > 0)
    if slope is not None and ok.any():
        i = int(np.argmax(ok))
        ref = errors[i] * (mu_plus / mu_plus[i])
        ax.loglog(mu_plus, ref, "k--", lw=0.8, label="slope 1")
        ax.set_title(f"fitted slope {slope:.3f}", fontsize=9)
    ax.set_xlabel(r"$\mu^+$")
    ax.set_ylabel("error")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)


def plot_fields(path, grid, f, rows, window: float = 0.25) -> Path:
    fig, ax = plt.subplots(figsize=(6.0, 4.0), layout="constrained")
    mask = grid.interior(window)
    ax.plot(grid.nodes[mask], np.asarray(f)[mask], "k-", lw=1.0)
    ok = [r for r in rows if r["status"] == "ok"]
    bad = [r for r in rows if r["status"] != "ok"]
    if ok:
        x = np.array([[r["x1"], r["x2"]] for r in ok])
        v = np.array([[r["v1"], r["v2"]] for r in ok])
        p = np.array([r["p"] for r in ok])
        # quiver autoscaling divides by the largest arrow, so pin the scale for a fluid at rest
        scale = None if np.any(v) else 1.0
        q = ax.quiver(x[:, 0], x[:, 1], v[:, 0], v[:, 1], p, cmap="coolwarm", scale=scale)
        fig.colorbar(q, ax=ax, label="pressure")
    if bad:
        xb = np.array([[r["x1"], r["x2"]] for r in bad])
        ax.plot(xb[:, 0], xb[:, 1], "kx", ms=5, label="rejected")
        ax.legend(frameon=False, fontsize=8)
    ax.set_xlabel("$x_1$")
    ax.set_ylabel("$x_2$")
    return _save(fig, path)


def plot_residuals(path, records) -> Path:
    """Bar chart of relative residuals against their bounds (log scale)."""
    names = [r["identity_id"] for r in records]
    rel = np.array([max(r["relative"], 1e-17) for r in records])
    bounds = np.array([r["bound"] for r in records])
    fig, ax = plt.subplots(figsize=(max(4.0, 0.5 * len(names) + 1.5), 3.6), layout="constrained")
    x = np.arange(len(names))
    colors = ["tab:green" if r["passed"] else "tab:red" for r in records]
    ax.bar(x, rel, color=colors)
    ax.scatter(x, bounds, marker="_", s=300, color="k", label="bound")
    ax.set_yscale("log")
    ax.set_xticks(x, names, rotation=60, ha="right", fontsize=7)
    ax.set_ylabel("relative residual")
    ax.legend(frameon=False, fontsize=8)
    return _save(fig, path)
