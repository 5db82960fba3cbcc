"""Nonparametric bootstrap version of the global test.

Residual curves are computed once; each replicate resamples whole residual
curves within every group and recomputes the (unadjusted) statistic,
including the pooled error matrix, from the resampled set.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .estimators import build_omega, group_moments, regularized_inverse
from .exceptions import GLHTError, SingularityError
from .glht import _as_hypothesis, statistic_from_moments


@dataclass
class BootstrapReport:
    T_n_observed: float
    B: int
    boot_stats: np.ndarray
    p_value: float
    seed: int

    def to_dict(self, include_stats: bool = True) -> dict:
        out = asdict(self)
        if include_stats:
            out["boot_stats"] = [float(x) for x in self.boot_stats]
        else:
            del out["boot_stats"]
        return out

    def to_json(self, include_stats: bool = True, **kw) -> str:
        return json.dumps(self.to_dict(include_stats), **kw)


def replicate_rng(seed: int, b: int) -> np.random.Generator:
    """Independent stream for replicate ``b``; depends only on ``(seed, b)``."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(b,)))


def resample_indices(sizes, seed: int, b: int) -> list:
    """Curve indices drawn with replacement for replicate ``b``, one array per group."""
    rng = replicate_rng(seed, b)
    return [rng.integers(0, n, size=n) for n in sizes]


def bootstrap_statistics(residuals, hyp, weight, seed: int, replicates) -> np.ndarray:
    """Statistic of each listed replicate, vectorized over replicates.

    ``residuals`` is a list of ``(n_a, p, M)`` residual arrays.
    """
    replicates = np.asarray(replicates, dtype=int)
    sizes = [z.shape[0] for z in residuals]
    R = len(replicates)
    counts = [np.zeros((R, n)) for n in sizes]
    for r, b in enumerate(replicates):
        for a, idx in enumerate(resample_indices(sizes, seed, int(b))):
            counts[a][r] = np.bincount(idx, minlength=sizes[a])
    means, omega = [], 0.0
    for a, z in enumerate(residuals):
        n, p, M = z.shape
        zt = np.transpose(z, (0, 2, 1))  # (n, M, p)
        mean = (counts[a] @ zt.reshape(n, M * p)).reshape(R, M, p) / n
        outer = np.einsum("imh,iml->imhl", zt, zt).reshape(n, M * p * p)
        second = (counts[a] @ outer).reshape(R, M, p, p)
        cov = (second - n * np.einsum("rmh,rml->rmhl", mean, mean)) / (n - 1)
        means.append(mean)
        omega = omega + hyp.H[a, a] * cov / n
    try:
        inverse, _, _, _ = regularized_inverse(omega)
    except SingularityError as exc:
        raise SingularityError(f"bootstrap replicate {int(replicates[exc.index[0]])}: {exc}") from None
    GM = np.einsum("qa,ramp->rmqp", hyp.G, np.stack(means, axis=1))
    A = hyp.G @ hyp.D @ hyp.G.T
    left = np.linalg.solve(A, GM)
    right = GM @ inverse
    return np.maximum(weight * np.sum(left * right, axis=(1, 2, 3)), 0.0)


def bootstrap_test(sampleset, G, B: int = 300, seed: int = 0, chunk: int = 100) -> BootstrapReport:
    """Bootstrap p-value ``#{b : T_b > T_n} / B`` for ``G M(t) = 0``."""
    if int(B) != B or B < 1:
        raise GLHTError(f"number of bootstrap replicates must be >= 1, got {B}")
    hyp = _as_hypothesis(sampleset, G)
    grid = sampleset.grid
    moments = [group_moments(g.values) for g in sampleset.groups]
    omega = build_omega(moments, hyp, grid.points)
    T = max(statistic_from_moments(moments, omega, hyp, grid.weight), 0.0)
    residuals = [mo.residuals for mo in moments]
    stats = np.concatenate([
        bootstrap_statistics(residuals, hyp, grid.weight, seed, np.arange(s, min(s + chunk, B)))
        for s in range(0, B, chunk)
    ])
    pval = float(np.count_nonzero(stats > T)) / B
    return BootstrapReport(T, int(B), stats, pval, int(seed))
