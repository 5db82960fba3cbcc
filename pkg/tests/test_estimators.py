import numpy as np
import pytest
from conftest import random_sampleset

from glhtmfd.estimators import (
    DeltaMatrices,
    build_omega,
    delta_matrices,
    group_moments,
    regularized_inverse,
    trace_functionals,
)
from glhtmfd.exceptions import SampleSizeError, SingularityError
from glhtmfd.funcdata import Grid
from glhtmfd.glht import make_hypothesis


def test_identical_curves_have_zero_covariance():
    v = np.tile(np.arange(6.0).reshape(1, 2, 3), (2, 1, 1))
    assert np.all(group_moments(v).cov_diag == 0)


def test_two_point_example():
    v = np.stack([np.zeros((1, 4)), 2 * np.ones((1, 4))])
    mo = group_moments(v)
    np.testing.assert_allclose(mo.mean, 1.0)
    np.testing.assert_allclose(mo.cov_diag, 2.0)


def test_cov_matches_loop(rng):
    v = rng.standard_normal((5, 3, 4))
    mo = group_moments(v)
    for m in range(4):
        z = v[:, :, m] - v[:, :, m].mean(axis=0)
        want = sum(np.outer(zi, zi) for zi in z) / 4
        np.testing.assert_allclose(mo.cov_diag[m], want, atol=1e-14)


def test_single_curve_rejected():
    with pytest.raises(SampleSizeError):
        group_moments(np.zeros((1, 1, 3)))


def test_omega_is_weighted_sum(rng):
    v = [rng.standard_normal((n, 2, 5)) for n in (4, 4)]
    mo = [group_moments(x) for x in v]
    hyp = make_hypothesis([[1.0, -1.0]], (4, 4))
    om = build_omega(mo, hyp)
    want = sum(hyp.H[a, a] * mo[a].cov_diag / 4 for a in range(2))
    np.testing.assert_allclose(om.matrix, want)
    np.testing.assert_allclose(om.matrix @ om.inverse, np.broadcast_to(np.eye(2), om.matrix.shape), atol=1e-8)
    assert om.ridge_points.size == 0


def test_ridge_on_rank_deficient_point():
    mats = np.array([np.eye(2), np.diag([1.0, 0.0])])
    inv, inv_sqrt, ridge, cond = regularized_inverse(mats)
    assert ridge[0] == 0 and ridge[1] > 0
    np.testing.assert_allclose(inv_sqrt[1] @ inv_sqrt[1], inv[1], rtol=1e-8)


def test_zero_matrix_is_singular():
    with pytest.raises(SingularityError):
        regularized_inverse(np.zeros((3, 2, 2)))


def test_delta_hand_example():
    # p=1, M=2 on [0,1], Omega^{-1} = 1, z_i = (1,1), z_j = (2,2)
    class Om:
        inverse = np.ones((2, 1, 1))
        inv_sqrt = np.ones((2, 1, 1))

    class Mo:
        def __init__(self, r):
            self.residuals = r
            self.n = r.shape[0]

    r = np.array([[[1.0, 1.0]], [[2.0, 2.0]]])
    d = delta_matrices([Mo(r), Mo(r)], Om, Grid(0, 1, 2))
    assert d.block(0, 0)[0, 1] == pytest.approx(2.0)


def test_delta_matches_loop(rng):
    data = random_sampleset(rng, (4, 5), p=2, M=6)
    hyp = make_hypothesis([[1.0, -1.0]], data.sizes)
    mo = [group_moments(g.values) for g in data.groups]
    om = build_omega(mo, hyp)
    d = delta_matrices(mo, om, data.grid)
    w = data.grid.weight
    for a in range(2):
        for b in range(2):
            za, zb = mo[a].residuals, mo[b].residuals
            want = np.zeros((za.shape[0], zb.shape[0]))
            for i in range(za.shape[0]):
                for j in range(zb.shape[0]):
                    want[i, j] = w * sum(za[i, :, m] @ om.inverse[m] @ zb[j, :, m] for m in range(6))
            np.testing.assert_allclose(d.block(a, b), want, rtol=1e-12, atol=1e-14)


def test_zero_delta_gives_zero_traces():
    tr = trace_functionals(DeltaMatrices(np.zeros((7, 7)), (3, 4)))
    assert not tr.first.any() and not tr.pair.any() and not tr.triple.any()


def test_pair_and_triple_nonnegative_on_diagonal(rng):
    data = random_sampleset(rng, (5, 6, 7), p=2, M=5)
    hyp = make_hypothesis([[1.0, -1.0, 0.0]], data.sizes)
    mo = [group_moments(g.values) for g in data.groups]
    tr = trace_functionals(delta_matrices(mo, build_omega(mo, hyp), data.grid))
    assert np.all(tr.pair >= -1e-12)
    assert np.all(np.einsum("aaa->a", tr.triple) >= -1e-12)
