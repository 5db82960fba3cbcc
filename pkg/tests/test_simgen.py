import math

import numpy as np
import pytest
from scipy import stats

from glhtmfd.funcdata import Grid
from glhtmfd.simgen import (
    A_MATRICES,
    SIM2_N1,
    Sim1Config,
    Sim2Config,
    brownian_paths,
    component_weights,
    error_draw,
    fourier_basis,
    shift_direction,
    sim1_covariance,
    sim1_generate,
    sim1_mean,
    sim2_generate,
    sim2_observations,
    sparse_design,
)


def test_mean_function_values():
    cfg = Sim1Config(M=11)
    eta = sim1_mean(1, cfg)
    assert eta[2, 0] == pytest.approx(-5.0)
    assert eta[1, 0] == pytest.approx(1.0)
    np.testing.assert_array_equal(sim1_mean(2, cfg), eta)


def test_shift_has_unit_total_norm():
    grid = Grid(0, 1, 50)
    g = shift_direction(6, grid)
    assert grid.weight * np.sum(g**2) == pytest.approx(1.0)
    cfg = Sim1Config(M=50, delta=0.3)
    np.testing.assert_allclose(sim1_mean(3, cfg) - sim1_mean(1, cfg), 0.6 * g)


def test_weights_and_basis():
    assert np.sum(component_weights(6) ** 2) == pytest.approx(1.0)
    for M in (50, 400):
        psi = fourier_basis(7, Grid(0, 1, M).points)
        gram = Grid(0, 1, M).weight * psi @ psi.T
        assert abs(gram[1, 1] - 1) < 3.0 / M


def test_error_moments():
    rng = np.random.default_rng(0)
    assert abs(error_draw("gaussian", rng, 10**6).mean()) < 4e-3
    assert error_draw("t4_scaled", rng, 10**6).var() == pytest.approx(1.0, rel=0.02)
    x = error_draw("chisq4_scaled", rng, 10**6)
    assert x.var() == pytest.approx(1.0, rel=0.02) and stats.skew(x) > 0


def test_sim1_determinism_and_shapes():
    cfg = Sim1Config(sizes=(5, 6, 7), M=20, seed=11)
    a, b = sim1_generate(cfg), sim1_generate(cfg)
    assert a.sizes == (5, 6, 7) and a.p == 6 and a.grid.M == 20
    for ga, gb in zip(a.groups, b.groups):
        np.testing.assert_array_equal(ga.values, gb.values)


def test_sim1_covariance_matches_draws():
    cfg = Sim1Config(sizes=(4000, 10, 10), M=8, rho=0.5, seed=1)
    x = sim1_generate(cfg).groups[0].values
    emp = np.einsum("ihs,ilt->shtl", x - x.mean(0), x - x.mean(0)) / (x.shape[0] - 1)
    pop = sim1_covariance(1, cfg)
    assert np.max(np.abs(emp - pop)) < 0.1 * np.max(np.abs(pop))


def test_heteroscedastic_ordering():
    cfg = Sim1Config(M=10)
    v = [np.einsum("mhmh->m", sim1_covariance(a, cfg)) for a in (1, 2, 3)]
    assert np.all(v[0] < v[1]) and np.all(v[1] < v[2])


def test_shared_scores_are_rank_one():
    cfg = Sim1Config(M=10, scores="shared")
    C = sim1_covariance(1, cfg)
    for m in range(10):
        assert np.linalg.matrix_rank(C[m, :, m, :]) == 1


@pytest.mark.parametrize("kw", [dict(rho=1.0), dict(delta=-1), dict(error_dist="cauchy"), dict(nu=(1, 2))])
def test_sim1_config_validation(kw):
    with pytest.raises(ValueError):
        Sim1Config(**kw)


def test_brownian_paths():
    rng = np.random.default_rng(2)
    grid = Grid(0, 1, 51)
    B = brownian_paths(20000, grid, 0.04, rng)
    assert np.all(B[:, 0] == 0)
    assert B[:, -1].var() == pytest.approx(0.04, rel=0.05)


def test_mixing_matrices():
    np.testing.assert_allclose(A_MATRICES[0], [[1.0, 0.3], [0.3, 1.0]])
    assert len(A_MATRICES) == 4


def test_sparse_design_keeps_ends():
    rng = np.random.default_rng(0)
    idx = sparse_design(50, 0.3, rng)
    assert len(idx) == 15 and idx[0] == 0 and idx[-1] == 49
    assert len(np.unique(idx)) == 15


@pytest.mark.parametrize("scenario", ["S1", "S2"])
def test_sim2_generation(scenario):
    cfg = Sim2Config(sizes=(4, 5, 6, 7), M=30, scenario=scenario, sigma=0.5, a=0.3, seed=3)
    s = sim2_generate(cfg)
    assert s.sizes == (4, 5, 6, 7) and s.p == 2
    np.testing.assert_array_equal(s.groups[0].values, sim2_generate(cfg).groups[0].values)


def test_sim2_observations_layout():
    cfg = Sim2Config(sizes=(2, 2, 2, 2), M=10, scenario="S2", a=0.5, seed=1)
    obs = sim2_observations(cfg)
    per_series = {}
    for o in obs:
        per_series.setdefault((o.group, o.subject, o.component), []).append(o.time)
    assert len(per_series) == 8 * 2
    assert all(len(v) == math.ceil(0.5 * 10) for v in per_series.values())


def test_sim2_config_validation():
    with pytest.raises(ValueError):
        Sim2Config(sizes=(1, 2, 3))
    with pytest.raises(ValueError):
        Sim2Config(scenario="S3")
    assert Sim2Config().sizes == SIM2_N1
