"""Global test of ``G M(t) = 0`` for k-sample multivariate functional data.

The statistic integrates the pointwise trace ``tr[B_n(t) Omega_n^{-1}(t,t)]``
over the grid.  Its null law is approximated by ``beta0 + beta1 * chi2_d``
with the three parameters matched to plug-in estimates of the first three
cumulants, after dividing the statistic by a finite-sample adjustment
coefficient ``c_n >= 1``.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np
from scipy.stats import norm

from . import chi2
from .estimators import (
    TraceSet,
    build_omega,
    delta_matrices,
    group_moments,
    regularized_inverse,
    trace_functionals,
)
from .exceptions import DegenerateCumulantError, HypothesisError, SampleSizeError, SingularityError

RANK_TOL = 1e-10


@dataclass(frozen=True)
class Hypothesis:
    G: np.ndarray
    sizes: tuple
    D: np.ndarray
    H: np.ndarray

    @property
    def q(self) -> int:
        return self.G.shape[0]

    @property
    def k(self) -> int:
        return self.G.shape[1]


def parse_matrix(text: str) -> np.ndarray:
    """``"1,-1,0"`` or ``"1,0,-1;0,1,-1"`` (rows separated by ``;``)."""
    rows = [r for r in text.replace("\n", ";").split(";") if r.strip()]
    try:
        mat = np.array([[float(x) for x in r.replace(" ", ",").split(",") if x.strip()] for r in rows])
    except ValueError as exc:
        raise HypothesisError(f"cannot parse matrix {text!r}: {exc}") from None
    if mat.ndim != 2 or mat.size == 0:
        raise HypothesisError(f"rows of {text!r} differ in length")
    return mat


def make_hypothesis(G, sizes: Sequence[int]) -> Hypothesis:
    """Validate ``G`` (q x k, full row rank q < k) and form ``H = G^T (G D G^T)^{-1} G``."""
    G = np.atleast_2d(np.asarray(G, dtype=float))
    q, k = G.shape
    sizes = tuple(int(n) for n in sizes)
    if len(sizes) != k:
        raise HypothesisError(f"G has {k} columns but there are {len(sizes)} groups")
    if q >= k:
        raise HypothesisError(f"G must have fewer rows than groups (q={q}, k={k})")
    if min(sizes) < 2:
        raise SampleSizeError(f"every group needs at least 2 curves, got sizes {sizes}")
    sv = np.linalg.svd(G, compute_uv=False)
    if sv[0] == 0 or np.sum(sv > RANK_TOL * sv[0]) < q:
        raise HypothesisError(f"G is rank deficient (singular values {sv})")
    D = np.diag(1.0 / np.asarray(sizes, dtype=float))
    A = G @ D @ G.T
    L = np.linalg.cholesky(A)
    W = np.linalg.solve(L, G)
    H = W.T @ W
    G.setflags(write=False)
    H.setflags(write=False)
    return Hypothesis(G, sizes, D, H)


def _as_hypothesis(sampleset, hyp):
    if isinstance(hyp, Hypothesis):
        if hyp.sizes != sampleset.sizes:
            raise HypothesisError("hypothesis sizes do not match the sample set")
        return hyp
    return make_hypothesis(hyp, sampleset.sizes)


def statistic_from_moments(moments, omega, hyp, weight) -> float:
    """``(v/M) sum_m tr[B_n(t_m) Omega^{-1}(t_m)]`` from precomputed pieces."""
    means = np.stack([mo.mean for mo in moments])  # (k, p, M)
    GM = np.einsum("qa,apm->mqp", hyp.G, means)
    A = hyp.G @ hyp.D @ hyp.G.T
    # tr[(GM)^T A^{-1} (GM) Omega^{-1}] summed over grid points
    left = np.linalg.solve(A, GM)  # (M, q, p)
    right = GM @ omega.inverse  # (M, q, p)
    return float(weight * np.sum(left * right))


def statistic(sampleset, hyp) -> float:
    hyp = _as_hypothesis(sampleset, hyp)
    moments = [group_moments(g.values) for g in sampleset.groups]
    omega = build_omega(moments, hyp, sampleset.grid.points)
    return max(statistic_from_moments(moments, omega, hyp, sampleset.grid.weight), 0.0)


def cumulant_estimates(traces: TraceSet, hyp) -> tuple:
    """Plug-in ``(K2, K3)`` of the limiting chi-square-type mixture."""
    H = hyp.H if isinstance(hyp, Hypothesis) else np.asarray(hyp)
    K2 = 2.0 * float(np.sum(H**2 * traces.pair))
    K3 = 8.0 * float(np.einsum("ab,bc,ca,abc->", H, H, H, traces.triple))
    if not (K2 > 0 and K3 > 0 and math.isfinite(K2) and math.isfinite(K3)):
        raise DegenerateCumulantError(f"non-positive cumulant estimates K2={K2!r}, K3={K3!r}")
    return K2, K3


def first_cumulant(traces: TraceSet, hyp) -> float:
    """``sum_a h_aa tr(G*_a)``; equals ``p * v(T)`` whenever no ridge was applied."""
    return float(np.sum(np.diag(hyp.H) * traces.first))


@dataclass(frozen=True)
class ChiSqParams:
    beta0: float
    beta1: float
    d: float
    K1: float
    K2_hat: float
    K3_hat: float


def chisq_params(K2_hat: float, K3_hat: float, p: int = None, vol: float = 1.0, K1: float = None) -> ChiSqParams:
    """Match ``beta0 + beta1 * chi2_d`` to cumulants ``(K1, K2, K3)``.

    ``K1`` defaults to ``p * vol``.
    """
    if not (K2_hat > 0 and K3_hat > 0):
        raise DegenerateCumulantError(f"non-positive cumulant estimates K2={K2_hat!r}, K3={K3_hat!r}")
    if K1 is None:
        K1 = p * vol
    beta1 = K3_hat / (4.0 * K2_hat)
    d = 8.0 * K2_hat**3 / K3_hat**2
    beta0 = K1 - 2.0 * K2_hat**2 / K3_hat
    return ChiSqParams(float(beta0), float(beta1), float(d), float(K1), float(K2_hat), float(K3_hat))


def adjustment_coefficient(traces: TraceSet, hyp, sizes=None) -> float:
    """``1 + sum_a h_aa^2 (n_a + 1) / (n_a (n_a - 3)) tr(G*_a x G*_a)``."""
    sizes = np.asarray(sizes if sizes is not None else hyp.sizes, dtype=float)
    small = np.flatnonzero(sizes <= 3)
    if small.size:
        raise SampleSizeError(
            f"adjustment coefficient needs n > 3 in every group; group {int(small[0]) + 1} has n={int(sizes[small[0]])}"
        )
    h = np.diag(hyp.H)
    return float(1.0 + np.sum(h**2 * (sizes + 1) / (sizes * (sizes - 3)) * np.diag(traces.pair)))


def approx_pvalue(T: float, c: float, params: ChiSqParams) -> float:
    arg = (T / c - params.beta0) / params.beta1
    if arg < 0:
        return 1.0
    return chi2.sf(arg, params.d)


def critical_value(alpha: float, params: ChiSqParams) -> float:
    """Threshold for ``T_n / c_n``."""
    return params.beta0 + params.beta1 * chi2.isf(alpha, params.d)


@dataclass
class TestReport:
    T_n: float
    c_n: float
    params: ChiSqParams
    p_value: float
    reject_at: dict
    critical_values: dict
    adjusted: bool
    diagnostics: dict = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def to_dict(self) -> dict:
        out = asdict(self)
        out["reject_at"] = {repr(float(a)): bool(r) for a, r in self.reject_at.items()}
        out["critical_values"] = {repr(float(a)): float(v) for a, v in self.critical_values.items()}
        return out

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)


def run_test(sampleset, G, adjusted: bool = True, alphas: Sequence[float] = (0.05,)) -> TestReport:
    """Run the global test of ``G M(t) = 0`` on ``sampleset``.

    Parameters
    ----------
    sampleset : SampleSet
    G : array_like or Hypothesis
        ``q x k`` coefficient matrix of full row rank ``q < k``.
    adjusted : bool
        Divide the statistic by the adjustment coefficient.  ``False`` gives
        the naive variant with ``c_n = 1``.
    alphas : sequence of float
        Significance levels for the reported decisions.
    """
    hyp = _as_hypothesis(sampleset, G)
    if adjusted and min(sampleset.sizes) < 4:
        raise SampleSizeError(f"adjusted test needs n >= 4 in every group, got {sampleset.sizes}")
    grid = sampleset.grid
    moments = [group_moments(g.values) for g in sampleset.groups]
    omega = build_omega(moments, hyp, grid.points)
    T = max(statistic_from_moments(moments, omega, hyp, grid.weight), 0.0)
    traces = trace_functionals(delta_matrices(moments, omega, grid), sampleset.sizes)
    K2, K3 = cumulant_estimates(traces, hyp)
    params = chisq_params(K2, K3, K1=first_cumulant(traces, hyp))
    c = adjustment_coefficient(traces, hyp) if adjusted else 1.0
    pval = approx_pvalue(T, c, params)
    alphas = [float(a) for a in alphas]
    diagnostics = {
        "k": sampleset.k,
        "p": sampleset.p,
        "sizes": list(sampleset.sizes),
        "grid": [grid.a, grid.b, grid.M],
        "ridge_points": [float(grid.points[m]) for m in omega.ridge_points],
        "max_condition": float(np.max(omega.condition)),
    }
    diagnostics.update(dict(getattr(sampleset, "diagnostics", {}) or {}))
    return TestReport(
        T_n=T,
        c_n=c,
        params=params,
        p_value=pval,
        reject_at={a: pval < a for a in alphas},
        critical_values={a: critical_value(a, params) for a in alphas},
        adjusted=adjusted,
        diagnostics=diagnostics,
    )


# --------------------------------------------------------------------------
# asymptotic power

@dataclass(frozen=True)
class AsymptoticPowerInput:
    """Population quantities of the local-alternative power formula.

    Attributes
    ----------
    M_fn : (k, p, M) array
        Group mean functions on the grid.
    tau : (k,) array
        Limiting group proportions.
    cov : (k, M, p, M, p) array
        Covariance surfaces ``Gamma_a(t_m, t_m')`` on the grid.  The full
        surface is needed for the variance term; its diagonal blocks give
        ``Gamma_a(t, t)``.
    G : (q, k) array
    n : int
        Total sample size.
    grid : Grid
    alpha : float
    """

    M_fn: np.ndarray
    tau: np.ndarray
    cov: np.ndarray
    G: np.ndarray
    n: int
    grid: object
    alpha: float = 0.05

    def __post_init__(self):
        tau = np.asarray(self.tau, dtype=float)
        if np.any(tau <= 0) or np.any(tau >= 1) or abs(tau.sum() - 1) > 1e-12:
            raise ValueError(f"group proportions must lie in (0,1) and sum to 1, got {tau}")


def limit_quantities(inp: AsymptoticPowerInput) -> dict:
    """Drift and limiting cumulants entering the power formula."""
    tau = np.asarray(inp.tau, dtype=float)
    G = np.atleast_2d(np.asarray(inp.G, dtype=float))
    k, p, M = np.shape(inp.M_fn)
    w = inp.grid.weight
    A = G @ np.diag(1.0 / tau) @ G.T
    Hs = G.T @ np.linalg.solve(A, G)
    cov = np.asarray(inp.cov, dtype=float).reshape(k, M * p, M * p)
    diag = np.stack([cov[a].reshape(M, p, M, p)[np.arange(M), :, np.arange(M), :] for a in range(k)])
    omega = np.einsum("a,amhl->mhl", np.diag(Hs) / tau, diag)
    try:
        inverse, inv_sqrt, ridge, _ = regularized_inverse(omega)
    except SingularityError:
        raise SingularityError("limiting error matrix is singular on the grid") from None
    if np.any(ridge > 0):
        raise SingularityError("limiting error matrix is numerically singular on the grid")
    Mt = np.transpose(inp.M_fn, (2, 0, 1))  # (M, k, p)
    drift = inp.n * w * float(np.einsum("mak,ab,mbl,mlk->", Mt, Hs, Mt, inverse))
    S = np.zeros((M * p, M * p))
    for m in range(M):
        S[m * p : (m + 1) * p, m * p : (m + 1) * p] = inv_sqrt[m]
    std = np.stack([S @ cov[a] @ S / tau[a] for a in range(k)])  # tilde Gamma*_a
    pair = w**2 * np.einsum("aij,bji->ab", std, std)
    triple = w**3 * np.einsum("aij,bjk,cki->abc", std, std, std)
    K2 = 2.0 * float(np.sum(Hs**2 * pair))
    K3 = 8.0 * float(np.einsum("ab,bc,ca,abc->", Hs, Hs, Hs, triple))
    return {"drift": drift, "K2": K2, "K3": K3, "H_star": Hs}


def asymptotic_power(inp: AsymptoticPowerInput, mode: str = "normal") -> float:
    """Limiting power of the adjusted test at level ``inp.alpha``.

    ``mode="normal"`` is the large-``d`` normal form; ``mode="chisq"``
    keeps the finite-``d`` chi-square form with ``d`` matched to the
    limiting cumulants.
    """
    q = limit_quantities(inp)
    sd = math.sqrt(q["K2"])
    if mode == "normal":
        return float(norm.cdf(-norm.isf(inp.alpha) + q["drift"] / sd))
    if mode == "chisq":
        d = 8.0 * q["K2"] ** 3 / q["K3"] ** 2
        thresh = chi2.isf(inp.alpha, d) - math.sqrt(2.0 * d) * q["drift"] / sd
        return float(chi2.sf(thresh, d)) if thresh > 0 else 1.0
    raise ValueError(f"unknown mode {mode!r}")
