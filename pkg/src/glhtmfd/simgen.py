"""Generators for the two simulation designs.

Design 1: ``k = 3`` groups of ``p = 6`` dimensional curves on ``[0, 1]``
built from a Fourier basis with geometrically decaying variance components
``nu_a * rho**r`` and group means shifted by ``delta * g(t)``.

Design 2: ``k = 4`` groups of bivariate curves ``A_a (B_1, B_2)^T`` built
from two independent Brownian motions, either with added measurement error
(scenario S1) or thinned to a random subset of grid points (scenario S2),
then reconstructed on the full grid by smoothing splines.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .funcdata import Grid, MFDSample, RawObservation, SampleSet, smooth_to_grid

N1 = (50, 70, 70)
N2 = (75, 105, 105)
N3 = (100, 140, 140)
SIM1_SIZES = {"n1": N1, "n2": N2, "n3": N3}

SIM2_N1 = (15, 30, 50, 70)
SIM2_N2 = (18, 36, 60, 84)
SIM2_N3 = (24, 48, 80, 112)
SIM2_SIZES = {"n1": SIM2_N1, "n2": SIM2_N2, "n3": SIM2_N3}

ERROR_DISTS = ("gaussian", "t4_scaled", "chisq4_scaled")


@dataclass(frozen=True)
class Sim1Config:
    """Design-1 settings.

    ``scores="independent"`` draws a separate score for every component
    (component covariance ``diag(c_l**2)``); ``scores="shared"`` uses one
    score per basis function for all components, which makes every pointwise
    covariance matrix rank one.
    """

    sizes: tuple = N1
    M: int = 50
    p: int = 6
    q: int = 7
    rho: float = 0.1
    nu: tuple = (1.0, 2.0, 5.0)
    delta: float = 0.0
    error_dist: str = "gaussian"
    scores: str = "independent"
    seed: int = 0

    def __post_init__(self):
        if not 0 < self.rho < 1:
            raise ValueError(f"rho must be in (0, 1), got {self.rho}")
        if self.delta < 0:
            raise ValueError("delta must be nonnegative")
        if self.q % 2 != 1:
            raise ValueError("q must be odd (constant plus sine/cosine pairs)")
        if self.error_dist not in ERROR_DISTS:
            raise ValueError(f"unknown error distribution {self.error_dist!r}")
        if self.scores not in ("independent", "shared"):
            raise ValueError(f"unknown score structure {self.scores!r}")
        if len(self.nu) != len(self.sizes):
            raise ValueError("one variance scale nu per group is required")

    @property
    def grid(self) -> Grid:
        return Grid(0.0, 1.0, self.M)


@dataclass(frozen=True)
class Sim2Config:
    sizes: tuple = SIM2_N1
    M: int = 50
    dispersion: float = 0.2**2
    scenario: str = "S1"
    sigma: float = 0.1
    a: float = 0.5
    smoothing: str = "smoothing-spline"
    seed: int = 0

    def __post_init__(self):
        if self.scenario not in ("S1", "S2"):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.sigma < 0:
            raise ValueError("sigma must be nonnegative")
        if self.scenario == "S2" and math.ceil(self.a * self.M) < 2:
            raise ValueError("sparsification must keep at least 2 points per curve")
        if len(self.sizes) != 4:
            raise ValueError("design 2 has four groups")

    @property
    def grid(self) -> Grid:
        return Grid(0.0, 1.0, self.M)


def error_draw(dist: str, rng: np.random.Generator, size=None) -> np.ndarray:
    """Zero-mean, unit-variance errors: N(0,1), t_4/sqrt(2) or (chi2_4 - 4)/(2 sqrt(2))."""
    if dist == "gaussian":
        return rng.standard_normal(size)
    shape = () if size is None else tuple(np.atleast_1d(size))
    if dist == "t4_scaled":
        z = rng.standard_normal(shape)
        chi = np.sum(rng.standard_normal(shape + (4,)) ** 2, axis=-1)
        return z / np.sqrt(chi / 4.0) / math.sqrt(2.0)
    if dist == "chisq4_scaled":
        chi = np.sum(rng.standard_normal(shape + (4,)) ** 2, axis=-1)
        return (chi - 4.0) / (2.0 * math.sqrt(2.0))
    raise ValueError(f"unknown error distribution {dist!r}")


def fourier_basis(q: int, t: np.ndarray) -> np.ndarray:
    """``psi_1 = 1, psi_{2r} = sqrt2 sin(2 pi r t), psi_{2r+1} = sqrt2 cos(2 pi r t)``; shape (q, M)."""
    out = np.empty((q, len(t)))
    out[0] = 1.0
    for r in range(1, (q - 1) // 2 + 1):
        out[2 * r - 1] = math.sqrt(2.0) * np.sin(2 * math.pi * r * t)
        out[2 * r] = math.sqrt(2.0) * np.cos(2 * math.pi * r * t)
    return out


def component_weights(p: int) -> np.ndarray:
    """``c_l = l / sqrt(1^2 + ... + p^2)``."""
    ell = np.arange(1, p + 1, dtype=float)
    return ell / math.sqrt(np.sum(ell**2))


def base_mean(t: np.ndarray) -> np.ndarray:
    """The six mean functions of the first group; shape (6, M)."""
    return np.stack([
        np.sin(2 * np.pi * t**2) ** 5,
        np.cos(2 * np.pi * t**2) ** 5,
        np.cbrt(t) * (1 - t) - 5,
        math.sqrt(5) * t ** (2 / 3) * np.exp(-7 * t),
        np.sqrt(13 * t) * np.exp(-13 * t / 2),
        1 + 2.3 * t + 3.4 * t**2 + 1.5 * t**3,
    ])


def shift_direction(p: int, grid: Grid) -> np.ndarray:
    """``g_l(t) / (sqrt(p) ||g_l||)`` with ``g_l(t) = (M - 1) t^l + 1``; shape (p, M)."""
    t = grid.points
    ell = np.arange(1, p + 1)[:, None]
    g = (grid.M - 1) * t[None, :] ** ell + 1
    norms = np.sqrt(grid.weight * np.sum(g**2, axis=1, keepdims=True))
    return g / (math.sqrt(p) * norms)


def sim1_mean(group: int, config: Sim1Config) -> np.ndarray:
    """Mean of group ``group`` (1-based): ``eta_1 + (group - 1) * delta * g``."""
    if config.p != 6:
        raise ValueError("design-1 means are defined for p = 6")
    grid = config.grid
    return base_mean(grid.points) + (group - 1) * config.delta * shift_direction(config.p, grid)


def sim1_covariance(group: int, config: Sim1Config) -> np.ndarray:
    """Population covariance surface of group ``group`` as ``(M, p, M, p)``."""
    t = config.grid.points
    psi = fourier_basis(config.q, t)
    lam = config.nu[group - 1] * config.rho ** np.arange(1, config.q + 1)
    c = component_weights(config.p)
    kern = np.einsum("r,rs,rt->st", lam, psi, psi)
    comp = np.diag(c**2) if config.scores == "independent" else np.outer(c, c)
    return np.einsum("st,hl->shtl", kern, comp)


def sim1_generate(config: Sim1Config, rng: np.random.Generator | None = None) -> SampleSet:
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    grid = config.grid
    psi = fourier_basis(config.q, grid.points)  # (q, M)
    c = component_weights(config.p)
    r = np.arange(1, config.q + 1)
    groups = []
    for a, n in enumerate(config.sizes, start=1):
        sd = np.sqrt(config.nu[a - 1] * config.rho**r)
        if config.scores == "independent":
            eps = error_draw(config.error_dist, rng, (n, config.q, config.p))
            x = np.einsum("r,irh,h,rm->ihm", sd, eps, c, psi)
        else:
            eps = error_draw(config.error_dist, rng, (n, config.q))
            x = np.einsum("r,ir,h,rm->ihm", sd, eps, c, psi)
        groups.append(MFDSample(a, sim1_mean(a, config)[None] + x))
    return SampleSet(grid, tuple(groups))


A_MATRICES = tuple(
    w * np.eye(2) + (1 - w) * np.ones((2, 2)) for w in (0.7, 0.5, 0.3, 0.1)
)


def brownian_paths(n: int, grid: Grid, dispersion: float, rng: np.random.Generator) -> np.ndarray:
    """``n`` Brownian paths on the grid starting at 0 with increment variance ``dispersion * dt``."""
    dt = grid.volume / (grid.M - 1)
    inc = rng.standard_normal((n, grid.M - 1)) * math.sqrt(dispersion * dt)
    return np.concatenate([np.zeros((n, 1)), np.cumsum(inc, axis=1)], axis=1)


def sparse_design(M: int, a: float, rng: np.random.Generator) -> np.ndarray:
    """Sorted indices of ``ceil(a M)`` grid points; both ends are always kept."""
    keep = max(int(math.ceil(a * M - 1e-9)), 2)
    if keep >= M:
        return np.arange(M)
    interior = rng.choice(np.arange(1, M - 1), size=keep - 2, replace=False)
    return np.sort(np.concatenate([[0, M - 1], interior]))


def sim2_generate(config: Sim2Config, rng: np.random.Generator | None = None) -> SampleSet:
    """Null-model draw of design 2 (all group means zero)."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    grid = config.grid
    t = grid.points
    groups = []
    for a, n in enumerate(config.sizes):
        B = np.stack([brownian_paths(n, grid, config.dispersion, rng) for _ in range(2)], axis=1)
        y = np.einsum("hl,ilm->ihm", A_MATRICES[a], B)
        if config.scenario == "S1":
            y = y + config.sigma * rng.standard_normal(y.shape)
            if config.smoothing != "none":
                y = smooth_to_grid(t, y.reshape(-1, grid.M), grid, config.smoothing).reshape(y.shape)
        else:
            out = np.empty_like(y)
            for i in range(n):
                idx = sparse_design(grid.M, config.a, rng)
                out[i] = smooth_to_grid(t[idx], y[i][:, idx], grid, config.smoothing)
            y = out
        groups.append(MFDSample(a + 1, y))
    return SampleSet(grid, tuple(groups))


def sim2_observations(config: Sim2Config, rng: np.random.Generator | None = None) -> list:
    """Raw (pre-reconstruction) design-2 observations in long format."""
    rng = rng if rng is not None else np.random.default_rng(config.seed)
    grid = config.grid
    t = grid.points
    records = []
    for a, n in enumerate(config.sizes):
        B = np.stack([brownian_paths(n, grid, config.dispersion, rng) for _ in range(2)], axis=1)
        y = np.einsum("hl,ilm->ihm", A_MATRICES[a], B)
        for i in range(n):
            if config.scenario == "S1":
                idx = np.arange(grid.M)
                yi = y[i] + config.sigma * rng.standard_normal(y[i].shape)
            else:
                idx = sparse_design(grid.M, config.a, rng)
                yi = y[i]
            for h in range(2):
                for m in idx:
                    records.append(RawObservation(str(a + 1), f"{a + 1}-{i + 1}", h + 1, float(t[m]), float(yi[h, m])))
    return records
