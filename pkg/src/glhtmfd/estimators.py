"""Group moments, the pooled error matrix and the Delta-matrix trace family.

Every trace functional needed by the test reduces to products of the
``n_a x n_b`` blocks of standardized residual inner products

    delta_ij^{ab} = (v/M) * sum_m z_ai(t_m)^T Omega^{-1}(t_m) z_bj(t_m),

so these blocks are computed once and shared by the statistic, the
cumulant estimates and the adjustment coefficient.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import SampleSizeError, SingularityError

# Ridge policy for the pointwise pooled matrix.
RIDGE_TRIGGER = 1e-10
RIDGE_SIZE = 1e-8


@dataclass(frozen=True)
class GroupMoments:
    mean: np.ndarray  # (p, M)
    residuals: np.ndarray  # (n, p, M)
    cov_diag: np.ndarray  # (M, p, p)

    @property
    def n(self) -> int:
        return self.residuals.shape[0]


@dataclass(frozen=True)
class OmegaHat:
    matrix: np.ndarray  # (M, p, p)
    inverse: np.ndarray  # (M, p, p)
    inv_sqrt: np.ndarray  # (M, p, p), symmetric
    ridge: np.ndarray  # (M,), ridge added at each point (0 if none)
    condition: np.ndarray  # (M,)

    @property
    def ridge_points(self) -> np.ndarray:
        return np.flatnonzero(self.ridge > 0)


@dataclass(frozen=True)
class DeltaMatrices:
    """All cross blocks of the standardized residual Gram matrix."""

    full: np.ndarray
    sizes: tuple
    offsets: tuple = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "offsets", tuple(np.concatenate([[0], np.cumsum(self.sizes)]).tolist()))

    def block(self, a: int, b: int) -> np.ndarray:
        o = self.offsets
        return self.full[o[a] : o[a + 1], o[b] : o[b + 1]]

    @property
    def blocks(self):
        k = len(self.sizes)
        return [[self.block(a, b) for b in range(k)] for a in range(k)]


@dataclass(frozen=True)
class TraceSet:
    """``tr(G*_a)``, ``tr(G*_a x G*_b)`` and ``tr(G*_a x G*_b x G*_c)`` for all indices."""

    first: np.ndarray  # (k,)
    pair: np.ndarray  # (k, k)
    triple: np.ndarray  # (k, k, k)


def group_moments(values: np.ndarray) -> GroupMoments:
    """Sample mean, residual curves and pointwise covariance of one group.

    ``values`` is an ``(n, p, M)`` array (or an :class:`MFDSample`).
    """
    values = np.asarray(getattr(values, "values", values), dtype=float)
    n = values.shape[0]
    if n < 2:
        raise SampleSizeError(f"group has n={n} curves; at least 2 are needed")
    mean = values.mean(axis=0)
    z = values - mean
    cov = np.einsum("ihm,ilm->mhl", z, z) / (n - 1)
    return GroupMoments(mean, z, cov)


def regularized_inverse(mats: np.ndarray):
    """Inverse and symmetric inverse square root of a stack of PSD matrices.

    Applies the ridge policy: when the smallest eigenvalue of a matrix falls
    below ``RIDGE_TRIGGER * tr/p``, ``RIDGE_SIZE * tr/p`` is added to its
    diagonal.

    Returns
    -------
    inverse, inv_sqrt, ridge, condition : ndarrays
        ``ridge`` is the amount added per matrix.

    Raises
    ------
    SingularityError
        If a matrix has a non-positive or non-finite trace, or remains
        singular after the ridge; ``.index`` holds the first bad position.
    """
    mats = np.asarray(mats, dtype=float)
    p = mats.shape[-1]
    sym = 0.5 * (mats + np.swapaxes(mats, -1, -2))
    w, V = np.linalg.eigh(sym)
    scale = np.trace(sym, axis1=-2, axis2=-1) / p
    bad = ~(np.isfinite(scale) & (scale > 0))
    if np.any(bad):
        idx = np.unravel_index(np.flatnonzero(bad)[0], bad.shape)
        err = SingularityError(f"pooled error matrix is zero or non-finite at index {idx}")
        err.index = idx
        raise err
    needs = w[..., 0] < RIDGE_TRIGGER * scale
    ridge = np.where(needs, RIDGE_SIZE * scale, 0.0)
    w = w + ridge[..., None]
    if np.any(w[..., 0] <= 0):
        idx = np.unravel_index(np.flatnonzero(w[..., 0] <= 0)[0], w.shape[:-1])
        err = SingularityError(f"pooled error matrix is singular after ridge at index {idx}")
        err.index = idx
        raise err
    Vt = np.swapaxes(V, -1, -2)
    inverse = (V / w[..., None, :]) @ Vt
    inv_sqrt = (V / np.sqrt(w)[..., None, :]) @ Vt
    condition = w[..., -1] / w[..., 0]
    return inverse, inv_sqrt, ridge, condition


def build_omega(moments, hyp, grid_points=None) -> OmegaHat:
    """Pooled pointwise error matrix ``sum_a h_aa Gamma_a(t,t) / n_a`` and its inverse."""
    moments = list(moments)
    if len(moments) != hyp.k:
        raise ValueError(f"hypothesis has k={hyp.k} groups, data has {len(moments)}")
    omega = sum(
        hyp.H[a, a] * mo.cov_diag / mo.n for a, mo in enumerate(moments)
    )
    try:
        inverse, inv_sqrt, ridge, cond = regularized_inverse(omega)
    except SingularityError as exc:
        m = exc.index[0]
        where = f"t={grid_points[m]:.6g}" if grid_points is not None else f"grid index {m}"
        raise SingularityError(f"pooled error matrix is singular at {where}") from None
    return OmegaHat(omega, inverse, inv_sqrt, ridge, cond)


def whitened_residuals(moments, omega: OmegaHat, weight: float) -> np.ndarray:
    """Residuals standardized by ``Omega^{-1/2}`` and the Riemann weight, stacked.

    Row ``i`` of the result has the inner-product structure of the
    ``delta`` integral: ``X @ X.T`` is the full Delta matrix.
    """
    rows = []
    for mo in moments:
        x = np.einsum("mhl,ilm->imh", omega.inv_sqrt, mo.residuals)
        rows.append(x.reshape(mo.n, -1))
    return np.sqrt(weight) * np.vstack(rows)


def delta_matrices(moments, omega: OmegaHat, grid) -> DeltaMatrices:
    moments = list(moments)
    X = whitened_residuals(moments, omega, grid.weight)
    full = X @ X.T
    # exact symmetry regardless of BLAS summation order
    full = np.triu(full) + np.triu(full, 1).T
    return DeltaMatrices(full, tuple(mo.n for mo in moments))


def trace_functionals(delta: DeltaMatrices, sizes=None) -> TraceSet:
    sizes = np.asarray(sizes if sizes is not None else delta.sizes, dtype=float)
    if np.any(sizes < 2):
        raise SampleSizeError("every group needs at least 2 curves")
    k = len(sizes)
    norm = sizes * (sizes - 1)
    blocks = delta.blocks
    first = np.array([np.trace(blocks[a][a]) for a in range(k)]) / norm
    pair = np.empty((k, k))
    for a in range(k):
        for b in range(a, k):
            pair[a, b] = pair[b, a] = np.sum(blocks[a][b] ** 2) / (norm[a] * norm[b])
    triple = np.empty((k, k, k))
    for a in range(k):
        for b in range(k):
            for c in range(k):
                # tr(D_ab D_bc D_ca) = sum((D_ab @ D_bc) * D_ac)
                triple[a, b, c] = np.sum((blocks[a][b] @ blocks[b][c]) * blocks[a][c])
    triple /= norm[:, None, None] * norm[None, :, None] * norm[None, None, :]
    return TraceSet(first, pair, triple)
