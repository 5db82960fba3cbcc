import numpy as np
import pytest

from glhtmfd.exceptions import DataError, SchemaError
from glhtmfd.funcdata import (
    Grid,
    MFDSample,
    RawObservation,
    SampleSet,
    dims_of,
    export_gridded,
    infer_grid,
    ingest_long_csv,
    reconstruct,
    smoothing_spline_fit,
    spline_penalty_matrix,
    write_long_csv,
)


def write(path, text):
    path.write_text(text, encoding="utf-8")
    return path


def test_grid_volume_and_points():
    assert Grid(0, 1, 50).volume == 1.0
    assert Grid(2012, 2021, 100).volume == 9.0
    g = Grid.parse("0, 2, 5")
    np.testing.assert_allclose(g.points, [0, 0.5, 1, 1.5, 2])
    assert g.weight == pytest.approx(0.4)


@pytest.mark.parametrize("args", [(1, 0, 5), (0, 1, 1), (0, float("nan"), 3)])
def test_grid_rejects_bad_input(args):
    with pytest.raises(ValueError):
        Grid(*args)


def test_sampleset_accessors():
    rng = np.random.default_rng(0)
    s = SampleSet.from_arrays([rng.standard_normal((n, 6, 10)) for n in (3, 4, 5)], Grid(0, 1, 10))
    assert dims_of(s) == (3, 6, 3, 4, 5)
    assert s.n == 12


def test_sampleset_needs_two_groups_and_matching_shapes():
    g = Grid(0, 1, 4)
    with pytest.raises(ValueError):
        SampleSet(g, (MFDSample(1, np.zeros((2, 1, 4))),))
    with pytest.raises(ValueError):
        SampleSet.from_arrays([np.zeros((2, 1, 4)), np.zeros((2, 2, 4))], g)


def test_sample_values_are_read_only():
    s = MFDSample(1, np.zeros((2, 1, 3)))
    with pytest.raises(ValueError):
        s.values[0, 0, 0] = 1.0


def test_nonfinite_values_rejected():
    with pytest.raises(DataError):
        MFDSample(1, np.array([[[0.0, np.nan]]]))


def test_ingest_counts_rows(tmp_path):
    p = write(tmp_path / "a.csv", "group,subject,component,time,value\n1,a,1,0,1.5\n1,a,1,1,2\n2,b,1,0,3\n")
    recs = ingest_long_csv(p)
    assert len(recs) == 3
    assert recs[0] == RawObservation("1", "a", 1, 0.0, 1.5)


def test_ingest_reports_bad_line(tmp_path):
    p = write(tmp_path / "a.csv", "group,subject,component,time,value\n1,a,1,0,1\n1,a,1,1,abc\n")
    with pytest.raises(DataError, match="line 3"):
        ingest_long_csv(p)


def test_ingest_missing_column_and_empty(tmp_path):
    with pytest.raises(SchemaError, match="value"):
        ingest_long_csv(write(tmp_path / "a.csv", "group,subject,component,time\n1,a,1,0\n"))
    with pytest.raises(SchemaError):
        ingest_long_csv(write(tmp_path / "b.csv", ""))


def test_ingest_custom_schema(tmp_path):
    p = write(tmp_path / "a.csv", "g,id,var,year,y\nA,s1,1,2012,0.5\nA,s1,1,2021,1.5\n")
    recs = ingest_long_csv(p, {"group": "g", "subject": "id", "component": "var", "time": "year", "value": "y"})
    times = [r.time for r in recs]
    assert min(times) >= 2012 and max(times) <= 2021


def test_linear_reconstruction_at_knots_is_identity():
    grid = Grid(0, 1, 6)
    vals = np.arange(6.0) ** 2
    obs = [RawObservation("1", "s", 1, t, v) for t, v in zip(grid.points, vals)]
    obs += [RawObservation("2", "s", 1, t, -v) for t, v in zip(grid.points, vals)]
    s = reconstruct(obs, grid, "linear")
    np.testing.assert_allclose(s.groups[0].values[0, 0], vals, atol=1e-14)


def test_linear_reconstruction_between_endpoints():
    obs = [RawObservation("1", "s", 1, 0.0, 0.0), RawObservation("1", "s", 1, 1.0, 1.0),
           RawObservation("2", "s", 1, 0.0, 0.0), RawObservation("2", "s", 1, 1.0, 2.0)]
    s = reconstruct(obs, Grid(0, 1, 5), "linear")
    np.testing.assert_allclose(s.groups[0].values[0, 0], [0, 0.25, 0.5, 0.75, 1])


def test_smoothing_beats_linear_on_noisy_sine():
    rng = np.random.default_rng(3)
    truth = lambda x: np.sin(2 * np.pi * x)
    grid = Grid(0, 1, 101)
    err = {"linear": [], "smoothing-spline": []}
    for rep in range(100):
        t = np.sort(rng.uniform(0, 1, 10))
        t[0], t[-1] = 0.0, 1.0
        y = truth(t) + 0.2 * rng.standard_normal(10)
        obs = [RawObservation(g, "s", 1, ti, yi) for g in ("1", "2") for ti, yi in zip(t, y)]
        for method in err:
            fit = reconstruct(obs, grid, method).groups[0].values[0, 0]
            err[method].append(np.sqrt(np.mean((fit - truth(grid.points)) ** 2)))
    assert np.mean(err["smoothing-spline"]) < np.mean(err["linear"])


def test_penalty_matrix_matches_curvature_integral():
    x = np.array([0.0, 0.3, 0.5, 0.9, 1.0])
    y = x**3
    from scipy.interpolate import CubicSpline
    from scipy.integrate import quad
    cs = CubicSpline(x, y, bc_type="natural")
    exact = quad(lambda s: cs(s, 2) ** 2, 0, 1, points=list(x))[0]
    assert y @ spline_penalty_matrix(x) @ y == pytest.approx(exact, rel=1e-10)


def test_smoothing_spline_keeps_lines():
    x = np.linspace(0, 1, 12)
    fitted, _ = smoothing_spline_fit(x, 2 * x + 1)
    np.testing.assert_allclose(fitted[0], 2 * x + 1, atol=1e-10)


def test_reconstruct_errors_name_subject():
    obs = [RawObservation("1", "lonely", 1, 0.0, 1.0), RawObservation("2", "x", 1, 0.0, 1.0),
           RawObservation("2", "x", 1, 1.0, 1.0)]
    with pytest.raises(DataError, match="lonely"):
        reconstruct(obs, Grid(0, 1, 3))
    with pytest.raises(DataError):
        reconstruct([RawObservation("1", "a", 3, 0.0, 1.0)], Grid(0, 1, 3), p=2)


def test_identical_subjects_give_identical_rows_and_order():
    obs = []
    for g in ("b", "a"):
        for s in ("s2", "s1"):
            obs += [RawObservation(g, s, 1, t, t**2) for t in (0.0, 0.2, 0.7, 1.0)]
    out = reconstruct(obs, Grid(0, 1, 7), "smoothing-spline")
    assert out.labels == ("b", "a")
    assert out.groups[0].subjects == ("s2", "s1")
    np.testing.assert_array_equal(out.groups[0].values[0], out.groups[1].values[1])


def test_round_trip_preserves_dimensions(tmp_path):
    rng = np.random.default_rng(1)
    grid = Grid(0, 1, 7)
    s = SampleSet.from_arrays([rng.standard_normal((n, 2, 7)) for n in (3, 5)], grid)
    write_long_csv(tmp_path / "x.csv", s)
    obs = ingest_long_csv(tmp_path / "x.csv")
    assert infer_grid(obs) == grid
    back = reconstruct(obs, grid, "linear")
    assert back.sizes == s.sizes and back.p == 2
    np.testing.assert_allclose(back.groups[1].values, s.groups[1].values, atol=1e-12)


def test_export_gridded_layout(tmp_path):
    s = SampleSet.from_arrays([np.ones((2, 2, 3)), np.zeros((3, 2, 3))], Grid(0, 1, 3))
    paths = export_gridded(s, tmp_path / "out")
    assert len(paths) == 2
    lines = open(paths[1]).read().splitlines()
    assert lines[0] == "subject,component,v1,v2,v3"
    assert len(lines) == 1 + 3 * 2
