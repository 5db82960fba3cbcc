import json

import numpy as np
import pytest
from conftest import random_sampleset

from glhtmfd.bootstrap import bootstrap_test, resample_indices
from glhtmfd.exceptions import GLHTError, SingularityError
from glhtmfd.funcdata import SampleSet
from glhtmfd.glht import statistic


@pytest.fixture
def data(rng):
    return random_sampleset(rng, (6, 8, 7), p=2, M=5)


def test_replicates_match_direct_recomputation(data):
    rep = bootstrap_test(data, [[1, -2, 1]], B=12, seed=9)
    resid = [g.values - g.values.mean(axis=0) for g in data.groups]
    for b in range(12):
        idx = resample_indices(data.sizes, 9, b)
        boot = SampleSet.from_arrays([r[i] for r, i in zip(resid, idx)], data.grid)
        assert rep.boot_stats[b] == pytest.approx(statistic(boot, [[1, -2, 1]]), rel=1e-9)
    assert rep.T_n_observed == pytest.approx(statistic(data, [[1, -2, 1]]), rel=1e-12)


def test_pvalue_counts_strict_exceedances(data):
    rep = bootstrap_test(data, [[1, -1, 0]], B=40, seed=1)
    assert rep.p_value == np.count_nonzero(rep.boot_stats > rep.T_n_observed) / 40
    assert (rep.p_value * 40) == int(rep.p_value * 40)


def test_chunking_does_not_change_results(data):
    a = bootstrap_test(data, [[1, -1, 0]], B=25, seed=4, chunk=25)
    b = bootstrap_test(data, [[1, -1, 0]], B=25, seed=4, chunk=3)
    np.testing.assert_array_equal(a.boot_stats, b.boot_stats)
    c = bootstrap_test(data, [[1, -1, 0]], B=25, seed=5)
    assert not np.array_equal(a.boot_stats, c.boot_stats)


def test_resampling_stays_within_groups():
    idx = resample_indices((3, 10, 4), seed=0, b=7)
    assert [len(i) for i in idx] == [3, 10, 4]
    assert all(i.max() < n for i, n in zip(idx, (3, 10, 4)))


def test_bad_replicate_count(data):
    with pytest.raises(GLHTError):
        bootstrap_test(data, [[1, -1, 0]], B=0)


def test_constant_curves_are_singular(data):
    flat = SampleSet.from_arrays([np.ones_like(g.values) for g in data.groups], data.grid)
    with pytest.raises(SingularityError):
        bootstrap_test(flat, [[1, -1, 0]], B=5)


def test_json_with_and_without_stats(data):
    rep = bootstrap_test(data, [[1, -1, 0]], B=5, seed=2)
    full = json.loads(rep.to_json())
    assert len(full["boot_stats"]) == 5
    short = json.loads(rep.to_json(include_stats=False))
    assert "boot_stats" not in short and short["p_value"] == rep.p_value
