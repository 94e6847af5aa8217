import json

import numpy as np
import pytest

from capstokes.config import ConfigError, load_config, parse_config


def test_defaults():
    cfg = parse_config({})
    assert (cfg.grid.L, cfg.grid.N) == (16.0, 512)
    assert cfg.params.mu_plus == 0.0
    assert cfg.output_times[0] == 0.0 and cfg.output_times[-1] == cfg.T
    assert cfg.controls.contamination == 0.1
    f = cfg.initial_profile()
    assert f.max() == pytest.approx(0.2)


def test_profile_families():
    grid = {"L": 8, "N": 64}
    flat = parse_config({"grid": grid, "profile": {"family": "flat"}}).initial_profile()
    assert np.all(flat == 0.0)
    two = parse_config({"grid": grid, "profile": {"family": "bump_sum", "bumps": [
        {"a": 0.1, "w": 1.0, "c": -2.0}, {"a": 0.2, "w": 0.5, "c": 2.0}]}}).initial_profile()
    x = np.linspace(-8, 8, 65)[:-1]
    assert np.allclose(two, 0.1 * np.exp(-(x + 2) ** 2) + 0.2 * np.exp(-((x - 2) / 0.5) ** 2))


def test_profile_from_file(tmp_path):
    vals = np.exp(-np.linspace(-8, 8, 65)[:-1] ** 2)
    (tmp_path / "f0.csv").write_text(",".join(format(v, ".17g") for v in vals))
    cfg_path = tmp_path / "run.json"
    cfg_path.write_text(json.dumps({"grid": {"L": 8, "N": 64}, "profile": {"file": "f0.csv"}}))
    assert np.array_equal(load_config(cfg_path).initial_profile(), vals)
    cfg_path.write_text(json.dumps({"grid": {"L": 8, "N": 32}, "profile": {"file": "f0.csv"}}))
    with pytest.raises(ConfigError, match="profile.file"):
        load_config(cfg_path)


@pytest.mark.parametrize("data,key", [
    ({"grid": {"N": 15}}, "grid.N"),
    ({"grid": {"L": -1}}, "grid.L"),
    ({"grid": {"N": "512"}}, "grid.N"),
    ({"params": {"mu": 0}}, "params.mu"),
    ({"params": {"sigma": "x"}}, "params.sigma"),
    ({"T": 1, "output_times": [0, 2]}, "output_times"),
    ({"rtol": -1}, "rtol"),
    ({"profile": {"family": "wave"}}, "profile.family"),
    ({"profile": {"family": "gaussian", "w": 0}}, "profile.w"),
    ({"profile": {"family": "bump_sum", "bumps": []}}, "profile.bumps"),
    ({"mu_plus_list": []}, "mu_plus_list"),
    ({"mu_plus_list": [0.1, -1]}, "mu_plus_list"),
    ({"points": [[0, 1, 2]]}, "points[0]"),
    ({"point_grid": {"x1": [0, 1, 2]}}, "point_grid.x2"),
    ({"tolerance": 1}, "tolerance"),
])
def test_errors_name_the_key(data, key):
    with pytest.raises(ConfigError, match=key.replace("[", r"\[").replace("]", r"\]")):
        parse_config(data)


def test_points_and_point_grid():
    cfg = parse_config({"points": [[0, -1]], "point_grid": {"x1": [-1, 1, 3], "x2": [-2, -1, 2]}})
    assert cfg.points.shape == (7, 2)
    assert cfg.points[0].tolist() == [0.0, -1.0]


def test_unreadable_and_invalid_json(tmp_path):
    with pytest.raises(ConfigError, match="cannot read"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{grid: 1}")
    with pytest.raises(ConfigError, match="not valid JSON"):
        load_config(bad)
