"""Slow reference computations for validating the fast path.

Nothing here is used by the test itself.  Covariance surfaces are
materialized as dense ``(pM) x (pM)`` matrices (index ``m * p + h``), trace
functionals are evaluated as explicit Riemann sums over ``(s, t)`` and
``(s, t, v)``, and the limiting null law is simulated from the eigenvalues
of the discretized kernel.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import binom

from . import chi2
from .estimators import TraceSet, build_omega, group_moments
from .exceptions import GLHTError

MAX_DENSE = 600


@dataclass(frozen=True)
class MixtureSpec:
    eigenvalues: np.ndarray  # nonincreasing

    @property
    def count(self) -> int:
        return len(self.eigenvalues)

    def cumulants(self) -> tuple:
        lam = self.eigenvalues
        return float(lam.sum()), 2.0 * float(np.sum(lam**2)), 8.0 * float(np.sum(lam**3))


def dense_cov_surface(values: np.ndarray) -> np.ndarray:
    """Sample covariance surface of one ``(n, p, M)`` group as a ``(pM, pM)`` matrix."""
    values = np.asarray(values, dtype=float)
    n, p, M = values.shape
    flat = np.transpose(values, (0, 2, 1)).reshape(n, M * p)
    z = flat - flat.mean(axis=0)
    return z.T @ z / (n - 1)


def _check_dim(dim):
    if dim > MAX_DENSE:
        raise GLHTError(f"dense oracle refuses dimension {dim} > {MAX_DENSE}")


def _blockdiag(mats: np.ndarray) -> np.ndarray:
    M, p, _ = mats.shape
    out = np.zeros((M * p, M * p))
    for m in range(M):
        out[m * p : (m + 1) * p, m * p : (m + 1) * p] = mats[m]
    return out


def standardized_surfaces(surfaces, omega_inv_sqrt, sizes) -> list:
    """``Omega^{-1/2}(s) Gamma_a(s,t) Omega^{-1/2}(t) / n_a`` as dense matrices."""
    S = _blockdiag(omega_inv_sqrt)
    return [S @ np.asarray(C) @ S / n for C, n in zip(surfaces, sizes)]


def brute_force_traces(surfaces, omega, sizes, grid) -> TraceSet:
    """Trace functionals by direct Riemann sums over the grid.

    ``surfaces`` are dense covariance surfaces (one per group); ``omega`` is
    an :class:`~glhtmfd.estimators.OmegaHat` or a ``(M, p, p)`` array of
    symmetric inverse square roots.
    """
    inv_sqrt = getattr(omega, "inv_sqrt", omega)
    M, p, _ = inv_sqrt.shape
    _check_dim(M * p)
    w = grid.weight
    std = [C.reshape(M, p, M, p) for C in standardized_surfaces(surfaces, inv_sqrt, sizes)]
    k = len(std)
    first = np.array([w * sum(np.trace(G[m, :, m, :]) for m in range(M)) for G in std])
    pair = np.zeros((k, k))
    for a in range(k):
        for b in range(k):
            total = 0.0
            for s in range(M):
                for t in range(M):
                    total += np.trace(std[a][s, :, t, :] @ std[b][t, :, s, :])
            pair[a, b] = w**2 * total
    triple = np.zeros((k, k, k))
    for a in range(k):
        for b in range(k):
            for c in range(k):
                # tr[G_a(s,t) G_b(t,v) G_c(v,s)] summed over (s, t, v)
                triple[a, b, c] = w**3 * np.einsum("shti,tivj,vjsh->", std[a], std[b], std[c])
    return TraceSet(first, pair, triple)


def sample_traces(sampleset, hyp) -> TraceSet:
    """Brute-force traces computed straight from the raw curves."""
    moments = [group_moments(g.values) for g in sampleset.groups]
    omega = build_omega(moments, hyp)
    surfaces = [dense_cov_surface(g.values) for g in sampleset.groups]
    return brute_force_traces(surfaces, omega, sampleset.sizes, sampleset.grid)


def kernel_eigenvalues(surfaces, omega, hyp, grid) -> MixtureSpec:
    """Eigenvalues of the discretized kernel ``C diag[G*_1, ..., G*_k] C^T``.

    ``C = Gt (x) I_p`` with ``Gt = (G D G^T)^{-1/2} G``.
    """
    inv_sqrt = getattr(omega, "inv_sqrt", omega)
    M, p, _ = inv_sqrt.shape
    k = hyp.k
    _check_dim(hyp.q * M * p)
    A = hyp.G @ hyp.D @ hyp.G.T
    wA, VA = np.linalg.eigh(A)
    Gt = (VA / np.sqrt(wA)) @ VA.T @ hyp.G  # (q, k)
    std = standardized_surfaces(surfaces, inv_sqrt, hyp.sizes)
    q = hyp.q
    dim = M * p
    K = np.zeros((q * dim, q * dim))
    for a in range(k):
        K += np.kron(np.outer(Gt[:, a], Gt[:, a]), std[a])
    K = 0.5 * (K + K.T) * grid.weight
    lam = np.linalg.eigvalsh(K)[::-1]
    floor = 1e-12 * max(lam[0], 0.0)
    lam = np.where(np.abs(lam) < floor, 0.0, lam)
    return MixtureSpec(lam)


def sample_kernel_eigenvalues(sampleset, hyp) -> MixtureSpec:
    moments = [group_moments(g.values) for g in sampleset.groups]
    omega = build_omega(moments, hyp)
    surfaces = [dense_cov_surface(g.values) for g in sampleset.groups]
    return kernel_eigenvalues(surfaces, omega, hyp, sampleset.grid)


def simulate_mixture(spec: MixtureSpec, reps: int, seed, chunk: int = 20000) -> np.ndarray:
    """Draws of ``sum_r lambda_r A_r`` with ``A_r`` iid chi2_1."""
    lam = np.asarray(spec.eigenvalues, dtype=float)
    lam = lam[lam > 0]
    if lam.size == 0:
        raise GLHTError("empty spectrum")
    rng = np.random.default_rng(seed)
    out = np.empty(reps)
    for s in range(0, reps, chunk):
        e = min(s + chunk, reps)
        out[s:e] = rng.chisquare(1.0, size=(e - s, lam.size)) @ lam
    return out


def null_mixture_quantile(spec: MixtureSpec, alpha: float, reps: int, seed) -> float:
    """Monte Carlo upper-``alpha`` quantile of the mixture."""
    if reps < 1000:
        raise GLHTError(f"need reps >= 1000, got {reps}")
    return float(np.quantile(simulate_mixture(spec, reps, seed), 1.0 - alpha))


def quantile_confidence_interval(draws: np.ndarray, prob: float, level: float = 0.99) -> tuple:
    """Distribution-free order-statistic interval for the ``prob`` quantile."""
    x = np.sort(draws)
    n = len(x)
    lo = int(binom.ppf((1 - level) / 2, n, prob))
    hi = int(binom.ppf(1 - (1 - level) / 2, n, prob))
    return float(x[max(lo - 1, 0)]), float(x[min(hi, n - 1)])


def three_cumulant_critical_value(spec: MixtureSpec, alpha: float) -> float:
    """``beta0 + beta1 chi2_d(alpha)`` with cumulants taken from the exact spectrum."""
    K1, K2, K3 = spec.cumulants()
    beta1 = K3 / (4 * K2)
    d = 8 * K2**3 / K3**2
    beta0 = K1 - 2 * K2**2 / K3
    return beta0 + beta1 * chi2.isf(alpha, d)
