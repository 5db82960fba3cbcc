"""Discretized multivariate functional samples.

Curves live on a common equispaced grid as dense ``(n, p, M)`` arrays.  Raw
long-format observations (possibly irregular, possibly sparse) are put on the
grid by :func:`reconstruct`, either by linear interpolation or by a natural
cubic smoothing spline whose penalty is chosen by generalized
cross-validation.
"""

from __future__ import annotations

import csv
import logging
import math
import os
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy.interpolate import CubicSpline

from .exceptions import DataError, SchemaError

logger = logging.getLogger(__name__)

COLUMNS = ("group", "subject", "component", "time", "value")

# Candidate roughness penalties, in units of (b - a)**3 of each series.
GCV_LOG10_PENALTIES = np.linspace(-10.0, 2.0, 49)
# Inflation of the effective degrees of freedom in the GCV score; values
# above 1 guard against the near-interpolating fits plain GCV picks on short
# noisy series.
GCV_GAMMA = 1.4


@dataclass(frozen=True)
class Grid:
    """``M`` equispaced points on ``[a, b]``, both ends included."""

    a: float
    b: float
    M: int

    def __post_init__(self):
        if not (math.isfinite(self.a) and math.isfinite(self.b)) or not self.a < self.b:
            raise ValueError(f"grid needs finite a < b, got [{self.a}, {self.b}]")
        if int(self.M) != self.M or self.M < 2:
            raise ValueError(f"grid needs M >= 2 points, got {self.M}")
        object.__setattr__(self, "a", float(self.a))
        object.__setattr__(self, "b", float(self.b))
        object.__setattr__(self, "M", int(self.M))

    @property
    def points(self) -> np.ndarray:
        m = np.arange(self.M)
        return self.a + m * (self.b - self.a) / (self.M - 1)

    @property
    def volume(self) -> float:
        return self.b - self.a

    @property
    def weight(self) -> float:
        """Riemann weight ``v(T)/M`` applied to every grid point."""
        return self.volume / self.M

    @classmethod
    def parse(cls, text: str) -> "Grid":
        """Build a grid from ``"a,b,M"``."""
        parts = [s.strip() for s in text.split(",")]
        if len(parts) != 3:
            raise ValueError(f"grid must be 'a,b,M', got {text!r}")
        return cls(float(parts[0]), float(parts[1]), int(parts[2]))


@dataclass(frozen=True)
class MFDSample:
    """One group of ``n`` curves with ``p`` components on a shared grid.

    ``values[i, h, m]`` is component ``h`` of curve ``i`` at grid point ``m``.
    """

    group_id: object
    values: np.ndarray
    subjects: tuple = ()

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim != 3 or min(values.shape) < 1:
            raise ValueError(f"sample values must be a nonempty (n, p, M) array, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise DataError(f"group {self.group_id!r} contains non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        subjects = tuple(self.subjects) if len(self.subjects) else tuple(range(1, values.shape[0] + 1))
        if len(subjects) != values.shape[0]:
            raise ValueError("one subject label per curve is required")
        object.__setattr__(self, "subjects", subjects)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    @property
    def M(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class SampleSet:
    """``k >= 2`` independent groups sharing the grid and the dimension ``p``."""

    grid: Grid
    groups: tuple
    diagnostics: Mapping = field(default_factory=dict, compare=False)

    def __post_init__(self):
        groups = tuple(self.groups)
        if len(groups) < 2:
            raise ValueError(f"at least two groups are required, got {len(groups)}")
        p = groups[0].p
        for g in groups:
            if g.p != p:
                raise ValueError(f"group {g.group_id!r} has p={g.p}, expected {p}")
            if g.M != self.grid.M:
                raise ValueError(f"group {g.group_id!r} has {g.M} grid points, grid has {self.grid.M}")
        object.__setattr__(self, "groups", groups)

    @classmethod
    def from_arrays(cls, arrays: Sequence[np.ndarray], grid: Grid, labels=None) -> "SampleSet":
        labels = list(labels) if labels is not None else list(range(1, len(arrays) + 1))
        return cls(grid, tuple(MFDSample(lab, arr) for lab, arr in zip(labels, arrays)))

    @property
    def k(self) -> int:
        return len(self.groups)

    @property
    def p(self) -> int:
        return self.groups[0].p

    @property
    def sizes(self) -> tuple:
        return tuple(g.n for g in self.groups)

    @property
    def n(self) -> int:
        return sum(self.sizes)

    @property
    def labels(self) -> tuple:
        return tuple(g.group_id for g in self.groups)

    def map_values(self, fn) -> "SampleSet":
        """Return a new set with ``fn`` applied to every group's value array."""
        return SampleSet(
            self.grid,
            tuple(MFDSample(g.group_id, fn(g.values), g.subjects) for g in self.groups),
        )


def resolution_of(sampleset: SampleSet) -> Grid:
    return sampleset.grid


def dims_of(sampleset: SampleSet) -> tuple:
    """``(k, p, n_1, ..., n_k)``."""
    return (sampleset.k, sampleset.p) + sampleset.sizes


class RawObservation(NamedTuple):
    group: str
    subject: str
    component: int
    time: float
    value: float


def ingest_long_csv(path, schema: Mapping[str, str] | None = None) -> list:
    """Read long-format observations from a CSV file.

    Parameters
    ----------
    path : path-like
        UTF-8 CSV file with a header row.
    schema : mapping, optional
        Maps each canonical column (``group, subject, component, time,
        value``) to the header name used in the file.  Unmapped columns keep
        their canonical name.

    Returns
    -------
    list of RawObservation
        One record per data row, in file order.
    """
    schema = dict(schema or {})
    names = {col: schema.get(col, col) for col in COLUMNS}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{os.fspath(path)} is empty") from None
        missing = [names[c] for c in COLUMNS if names[c] not in header]
        if missing:
            raise SchemaError(f"missing column(s) {', '.join(missing)} in {os.fspath(path)}")
        idx = {c: header.index(names[c]) for c in COLUMNS}
        records = []
        for line, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) < len(header):
                raise DataError(f"expected {len(header)} fields, got {len(row)}", line)
            try:
                comp = int(row[idx["component"]].strip())
                t = float(row[idx["time"]].strip())
                v = float(row[idx["value"]].strip())
            except ValueError as exc:
                raise DataError(f"cannot parse number ({exc})", line) from None
            if not (math.isfinite(t) and math.isfinite(v)):
                raise DataError("non-finite time or value", line)
            records.append(
                RawObservation(row[idx["group"]].strip(), row[idx["subject"]].strip(), comp, t, v)
            )
    if not records:
        raise SchemaError(f"{os.fspath(path)} has a header but no data rows")
    return records


def write_long_csv(path, sampleset: SampleSet) -> None:
    """Write a gridded sample set in long format (the inverse of ingestion)."""
    t = sampleset.grid.points
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for g in sampleset.groups:
            for subj, curve in zip(g.subjects, g.values):
                for h in range(g.p):
                    for m in range(g.M):
                        w.writerow([g.group_id, subj, h + 1, repr(float(t[m])), repr(float(curve[h, m]))])


def export_gridded(sampleset: SampleSet, directory) -> list:
    """Write one ``group_<id>.csv`` per group with columns ``subject,component,v1..vM``."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    header = ["subject", "component"] + [f"v{m + 1}" for m in range(sampleset.grid.M)]
    for g in sampleset.groups:
        path = os.path.join(directory, f"group_{g.group_id}.csv")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for subj, curve in zip(g.subjects, g.values):
                for h in range(g.p):
                    w.writerow([subj, h + 1] + [repr(float(x)) for x in curve[h]])
        paths.append(path)
    return paths


# --------------------------------------------------------------------------
# curve reconstruction

def linear_interp_matrix(x: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Matrix ``E`` with ``E @ y`` the piecewise-linear interpolant at ``target``.

    Outside ``[x[0], x[-1]]`` the boundary value is continued.
    """
    x = np.asarray(x, dtype=float)
    tt = np.clip(target, x[0], x[-1])
    j = np.clip(np.searchsorted(x, tt, side="right") - 1, 0, len(x) - 2)
    w = (tt - x[j]) / (x[j + 1] - x[j])
    E = np.zeros((len(tt), len(x)))
    rows = np.arange(len(tt))
    E[rows, j] = 1.0 - w
    E[rows, j + 1] += w
    return E


def spline_penalty_matrix(x: np.ndarray) -> np.ndarray:
    """Roughness penalty ``K = Q R^{-1} Q^T`` of the natural cubic spline on knots ``x``.

    ``y^T K y`` equals the integral of the squared second derivative of the
    natural cubic interpolant of ``y``.
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    h = np.diff(x)
    Q = np.zeros((n, n - 2))
    j = np.arange(n - 2)
    Q[j, j] = 1.0 / h[:-1]
    Q[j + 1, j] = -1.0 / h[:-1] - 1.0 / h[1:]
    Q[j + 2, j] = 1.0 / h[1:]
    R = np.diag((h[:-1] + h[1:]) / 3.0)
    off = h[1:-1] / 6.0
    R += np.diag(off, 1) + np.diag(off, -1)
    return Q @ np.linalg.solve(R, Q.T)


def smoothing_spline_fit(x: np.ndarray, Y: np.ndarray, penalties=None):
    """Fit natural cubic smoothing splines to every row of ``Y`` at knots ``x``.

    The penalty of each row is chosen independently by GCV over
    ``penalties`` (default: :data:`GCV_LOG10_PENALTIES` scaled by the cube of
    the knot range).

    Returns
    -------
    fitted : ndarray, shape (N, n)
        Smoothed values at the knots.
    chosen : ndarray, shape (N,)
        Selected penalty per row.
    """
    x = np.asarray(x, dtype=float)
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    n = len(x)
    if penalties is None:
        penalties = (x[-1] - x[0]) ** 3 * 10.0 ** GCV_LOG10_PENALTIES
    penalties = np.asarray(penalties, dtype=float)
    kappa, U = np.linalg.eigh(spline_penalty_matrix(x))
    kappa = np.clip(kappa, 0.0, None)
    C = Y @ U
    lk = np.outer(kappa, penalties)  # (n, L)
    shrink = 1.0 / (1.0 + lk)
    rss = (C**2) @ ((lk * shrink) ** 2)
    dof_resid = n - GCV_GAMMA * shrink.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        gcv = n * rss / dof_resid**2
    gcv[:, dof_resid <= 1e-8 * n] = np.inf
    best = np.argmin(gcv, axis=1)
    fitted = (C * shrink[:, best].T) @ U.T
    return fitted, penalties[best]


def _series_to_grid(x, Y, grid_points, method):
    """Put rows of ``Y`` (observed at sorted distinct ``x``) on the grid."""
    if method == "smoothing-spline" and len(x) >= 4:
        fitted, _ = smoothing_spline_fit(x, Y)
        spline = CubicSpline(x, fitted, axis=1, bc_type="natural")
        return spline(np.clip(grid_points, x[0], x[-1])), False
    return Y @ linear_interp_matrix(x, grid_points).T, method == "smoothing-spline"


def smooth_to_grid(times: np.ndarray, values: np.ndarray, grid: Grid, method: str = "smoothing-spline") -> np.ndarray:
    """Reconstruct many series that share one observation design.

    ``values`` has shape ``(N, len(times))``; the result has shape
    ``(N, grid.M)``.
    """
    _check_method(method)
    times = np.asarray(times, dtype=float)
    order = np.argsort(times, kind="stable")
    x, Y = times[order], np.atleast_2d(values)[:, order]
    if len(np.unique(x)) != len(x):
        raise DataError("duplicate observation times in a shared design")
    if len(x) < 2:
        raise DataError("need at least 2 distinct time points")
    out, _ = _series_to_grid(x, Y, grid.points, method)
    return out


def _check_method(method):
    if method not in ("linear", "smoothing-spline"):
        raise ValueError(f"unknown reconstruction method {method!r}")


def reconstruct(observations: Iterable[RawObservation], grid: Grid, method: str = "linear", p: int | None = None) -> SampleSet:
    """Evaluate every observed series on ``grid``.

    Series are keyed by ``(group, subject, component)``.  Groups and subjects
    keep their order of first appearance.  Repeated times within a series
    are averaged.  Series with fewer than four distinct times fall back to
    linear interpolation under ``method="smoothing-spline"``; outside a
    series' observed range its boundary value is continued.
    """
    _check_method(method)
    series: "OrderedDict[str, OrderedDict]" = OrderedDict()
    max_comp = 0
    for obs in observations:
        comp = int(obs.component)
        if comp < 1 or (p is not None and comp > p):
            raise DataError(f"component {comp} of subject {obs.subject!r} outside 1..{p if p else 'p'}")
        max_comp = max(max_comp, comp)
        subj = series.setdefault(obs.group, OrderedDict()).setdefault(obs.subject, {})
        subj.setdefault(comp, []).append((float(obs.time), float(obs.value)))
    if p is None:
        p = max_comp
    if not series:
        raise DataError("no observations to reconstruct")

    # Batch series sharing the same observation times.
    designs: dict = {}
    keys = []
    for g, subjects in series.items():
        for s, comps in subjects.items():
            for h in range(1, p + 1):
                if h not in comps:
                    raise DataError(f"subject {s!r} in group {g!r} has no observations for component {h}")
                pts = np.array(comps[h])
                t, inv = np.unique(pts[:, 0], return_inverse=True)
                if len(t) < 2:
                    raise DataError(f"subject {s!r} (group {g!r}, component {h}) has fewer than 2 distinct time points")
                y = np.bincount(inv, weights=pts[:, 1]) / np.bincount(inv)
                designs.setdefault(t.tobytes(), (t, []))[1].append((len(keys), y))
                keys.append((g, s, h))

    gp = grid.points
    out = np.empty((len(keys), grid.M))
    fallback = 0
    extrapolated = 0
    for t, members in designs.values():
        rows = [i for i, _ in members]
        Y = np.array([y for _, y in members])
        out[rows], fell_back = _series_to_grid(t, Y, gp, method)
        fallback += len(rows) if fell_back else 0
        extrapolated += len(rows) * int(np.sum((gp < t[0]) | (gp > t[-1])))
    if extrapolated:
        logger.info("constant extrapolation used at %d series-gridpoint pairs", extrapolated)

    groups = []
    i = 0
    for g, subjects in series.items():
        arr = out[i : i + len(subjects) * p].reshape(len(subjects), p, grid.M)
        i += len(subjects) * p
        groups.append(MFDSample(g, arr, tuple(subjects)))
    diagnostics = {"method": method, "linear_fallback_series": fallback, "extrapolated_points": extrapolated}
    return SampleSet(grid, tuple(groups), diagnostics)


def infer_grid(observations: Sequence[RawObservation]) -> Grid:
    """Grid spanning the observed times with as many points as the densest series."""
    times = np.array([o.time for o in observations])
    counts: dict = {}
    for o in observations:
        counts.setdefault((o.group, o.subject, o.component), set()).add(o.time)
    M = max(len(v) for v in counts.values())
    return Grid(float(times.min()), float(times.max()), max(M, 2))
