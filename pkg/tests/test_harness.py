import json

import numpy as np
import pytest

from glhtmfd.exceptions import GLHTError, HypothesisError
from glhtmfd.harness import (
    Experiment,
    ResultTable,
    are_of,
    contrast_matrix,
    run_experiment,
    run_replication,
    simulate_table,
)
from glhtmfd.simgen import Sim1Config, Sim2Config

SMALL = Sim1Config(sizes=(8, 9, 10), M=8)


def test_are_examples():
    assert are_of([5.0] * 4) == 0.0
    assert are_of([4.0, 6.0]) == pytest.approx(20.0)
    with pytest.raises(ValueError):
        are_of([])


def test_contrast_tags():
    np.testing.assert_array_equal(contrast_matrix("G1"), [[1, 0, -1], [0, 1, -1]])
    np.testing.assert_array_equal(contrast_matrix("g1", 4), np.hstack([np.eye(3), -np.ones((3, 1))]))
    np.testing.assert_array_equal(contrast_matrix("G5"), [[1, -2, 1]])
    np.testing.assert_array_equal(contrast_matrix("1,0,-1"), [[1, 0, -1]])
    with pytest.raises(HypothesisError):
        contrast_matrix("G2", 4)


def test_experiment_validation():
    with pytest.raises(ValueError):
        Experiment(SMALL, reps=0)
    with pytest.raises(ValueError):
        Experiment(SMALL, alpha=1.0)
    with pytest.raises(ValueError):
        Experiment(SMALL, methods=("magic",))


def test_replications_are_order_independent():
    exp = Experiment(SMALL, methods=("new", "new-unadjusted"), reps=6, seed=3)
    forward = [run_replication(exp, r) for r in range(6)]
    backward = [run_replication(exp, r) for r in reversed(range(6))][::-1]
    assert forward == backward
    assert all(f["new"] >= f["new-unadjusted"] for f in forward)


def test_run_log_resumes(tmp_path):
    exp = Experiment(SMALL, methods=("new",), reps=5, seed=1)
    log = tmp_path / "run.jsonl"
    full = run_experiment(exp, log)
    lines = log.read_text().splitlines()
    assert len(lines) == 6 and "experiment" in json.loads(lines[0])
    # drop the last two replications, rerun, and get the same answer
    log.write_text("\n".join(lines[:4]) + "\n")
    assert run_experiment(exp, log) == full
    assert len(log.read_text().splitlines()) == 6
    with pytest.raises(GLHTError):
        run_experiment(Experiment(SMALL, reps=5, seed=2), log)


def test_parallel_matches_serial():
    exp = Experiment(SMALL, methods=("new",), reps=8, seed=4)
    assert run_experiment(exp, n_jobs=2) == run_experiment(exp)


def test_errors_carry_replication_context():
    exp = Experiment(Sim1Config(sizes=(3, 3, 3), M=5), reps=2)
    with pytest.raises(GLHTError, match="replication 0"):
        run_experiment(exp)


def test_table_are_and_rendering():
    t = ResultTable(("rho",), ("new",))
    t.add((0.1,), {"new": 4.0})
    t.add((0.5,), {"new": 6.0})
    assert t.are()["new"] == pytest.approx(are_of([4.0, 6.0]))
    csv_text = t.to_csv()
    assert csv_text.splitlines() == ["rho,new", "0.1,4.0", "0.5,6.0", "ARE,20.00"]
    text = t.render().splitlines()
    assert len({len(line) for line in text}) == 1
    with pytest.raises(ValueError):
        t.add((0.9,), {"new": 101.0})


def test_simulate_table_grid(tmp_path):
    base = Experiment(Sim2Config(sizes=(5, 5, 6, 6), M=10), methods=("new",), reps=2, seed=0)
    table = simulate_table(base, {"sigma": [0.1, 0.5]}, log_dir=tmp_path)
    assert [k for k, _ in table.rows] == [(0.1,), (0.5,)]
    assert len(list(tmp_path.glob("*.jsonl"))) == 2


def test_power_tables_skip_are():
    base = Experiment(SMALL, methods=("new",), reps=1, seed=0)
    table = simulate_table(base, {"delta": [0.0, 0.1]})
    assert "ARE" not in table.to_csv() and "ARE" not in table.render()
