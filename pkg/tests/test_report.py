import json

import numpy as np

from capstokes.evolution import PhysicalParams, SimulationState
from capstokes.grid import make_grid
from capstokes.report import read_trajectory_csv, write_fields_csv, write_json, write_trajectory_csv


def test_json_cleans_numpy_and_nonfinite(tmp_path):
    p = write_json(tmp_path / "a.json", {"x": np.float64(1.5), "n": np.int64(3), "bad": np.nan,
                                         "arr": np.arange(2), "flag": np.bool_(True)})
    assert json.loads(p.read_text()) == {"x": 1.5, "n": 3, "bad": None, "arr": [0, 1], "flag": True}


def test_trajectory_round_trip(tmp_path):
    g = make_grid(2.0, 8)
    states = [SimulationState(t, np.sin(g.nodes + t), PhysicalParams()) for t in (0.0, 0.1)]
    nodes, times, prof = read_trajectory_csv(write_trajectory_csv(tmp_path / "t.csv", g, states))
    assert np.array_equal(nodes, g.nodes) and np.array_equal(times, [0.0, 0.1])
    assert np.array_equal(prof[1], states[1].f)


def test_fields_rows_keep_markers(tmp_path):
    p = write_fields_csv(tmp_path / "f.csv", [{"x1": 0.0, "x2": 1.0, "status": "rejected_near_interface"}])
    assert p.read_text().splitlines()[1] == "0,1,,,,,rejected_near_interface"
