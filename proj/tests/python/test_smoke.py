import json
import math

import numpy as np
import pytest

import gaitopt


def test_rotation_is_orthonormal():
    R = gaitopt.rotation_from_euler(np.array([0.3, -0.2, 0.7]))
    assert np.allclose(R.T @ R, np.eye(3), atol=1e-12)
    assert abs(np.linalg.det(R) - 1.0) < 1e-12


def test_gimbal_lock_raises():
    with pytest.raises(ValueError):
        gaitopt.euler_rate_matrix(np.array([0.0, math.pi / 2, 0.0]))


def test_decode_matches_exp():
    phases, horizon = gaitopt.decode(np.full(4 * 25, -1.75), [5, 5, 5, 5], 3, 13)
    assert len(phases) == 4
    assert all(len(leg) == 9 for leg in phases)
    assert horizon == pytest.approx(9 * math.exp(-1.75))
    assert phases[0][0][0] is True


def test_counts():
    assert gaitopt.admissible_count(4, 1, 7, True) == 243
    assert gaitopt.admissible_distinct_count(4, 1, 7, True) == 241
    assert gaitopt.admissible_count(6, 1, 7, False) == 117649
    assert gaitopt.duration_index(1, 0, 4, 13) == 25


def test_robots_load():
    q = gaitopt.load_robot("quadruped")
    assert q.num_legs == 4
    assert q.mass == 30.0


def test_stand_still_solve():
    out = gaitopt.solve_pose_task("quadruped", 0.0, 0.0, 0.0, [1, 1, 1, 1], log_duration=0.47)
    assert out["n_violated"] == 0
    weight = 30.0 * 9.81
    assert out["min_force_objective"] == pytest.approx(-50 * weight, rel=1e-2)


def test_tiny_scenario_is_reproducible(tmp_path):
    doc = json.dumps({
        "name": "py_tiny",
        "robot": "quadruped",
        "target": {"type": "pose", "x": 0.3},
        "cem": {"population": 3, "elites": 2, "max_iterations": 1, "min_stance": 1, "max_stance": 3},
        "seeds": [4],
        "trajopt": {"max_iterations": 20},
    })
    a = gaitopt.run_scenario_json(doc, str(tmp_path / "a"))
    b = gaitopt.run_scenario_json(doc)
    assert a == b
    summary = json.loads(a)
    assert summary["n_runs"] == 1
    files = gaitopt.emit_plot_data(str(tmp_path))
    assert len(files[0]) == 1


def test_percentile():
    assert gaitopt.percentile([1.0, 2.0, 3.0], 25.0) == 1.5
