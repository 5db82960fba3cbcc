"""Monte Carlo size/power experiments and result tables."""

from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .bootstrap import bootstrap_test
from .exceptions import GLHTError, HypothesisError
from .glht import parse_matrix, run_test
from .simgen import Sim1Config, Sim2Config, sim1_generate, sim2_generate

logger = logging.getLogger(__name__)

METHODS = ("new", "new-unadjusted", "bootstrap")
NOMINAL = 5.0


def contrast_matrix(tag, k: int = 3) -> np.ndarray:
    """Coefficient matrix for a tag ``G1``..``G5`` or matrix text like ``"1,-2,1"``."""
    if isinstance(tag, np.ndarray):
        return np.atleast_2d(tag.astype(float))
    t = str(tag).strip().upper()
    if t == "G1":
        return np.hstack([np.eye(k - 1), -np.ones((k - 1, 1))])
    fixed = {
        "G2": [[1, -1, 0]],
        "G3": [[1, 0, -1]],
        "G4": [[0, 1, -1]],
        "G5": [[1, -2, 1]],
    }
    if t in fixed:
        if k != 3:
            raise HypothesisError(f"{t} is defined for k = 3 groups, not {k}")
        return np.array(fixed[t], dtype=float)
    return parse_matrix(str(tag))


@dataclass(frozen=True)
class Experiment:
    config: Sim1Config | Sim2Config
    hypothesis: object = "G1"
    methods: tuple = ("new",)
    reps: int = 1000
    alpha: float = 0.05
    seed: int = 0
    B: int = 300

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be >= 1")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must be in (0, 1)")
        methods = (self.methods,) if isinstance(self.methods, str) else tuple(self.methods)
        for m in methods:
            if m not in METHODS:
                raise ValueError(f"unknown method {m!r}; choose from {METHODS}")
        object.__setattr__(self, "methods", methods)

    @property
    def G(self) -> np.ndarray:
        return contrast_matrix(self.hypothesis, len(self.config.sizes))

    def key(self) -> str:
        d = asdict(self)
        d["design"] = type(self.config).__name__
        hyp = self.hypothesis
        d["hypothesis"] = hyp.tolist() if isinstance(hyp, np.ndarray) else str(hyp)
        return json.dumps(d, sort_keys=True, default=list)


def replication_seed(seed: int, rep: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=(rep,))


def generate(config, rng):
    if isinstance(config, Sim1Config):
        return sim1_generate(config, rng)
    return sim2_generate(config, rng)


def run_replication(exp: Experiment, rep: int) -> dict:
    """One replication: ``{method: p_value}`` on a single data draw."""
    ss = replication_seed(exp.seed, rep)
    data_seq, boot_seq = ss.spawn(2)
    try:
        data = generate(exp.config, np.random.default_rng(data_seq))
        G = exp.G
        out = {}
        for m in exp.methods:
            if m == "bootstrap":
                seed = int(boot_seq.generate_state(1, dtype=np.uint32)[0])
                out[m] = bootstrap_test(data, G, exp.B, seed).p_value
            else:
                out[m] = run_test(data, G, adjusted=(m == "new")).p_value
    except GLHTError as exc:
        raise GLHTError(f"replication {rep} (seed {exp.seed}) failed: {exc}") from exc
    return out


def _load_log(path, key):
    done = {}
    if not path or not os.path.exists(path):
        return done
    with open(path, encoding="utf-8") as fh:
        lines = [json.loads(line) for line in fh if line.strip()]
    if lines and lines[0].get("experiment") != key:
        raise GLHTError(f"run log {path} belongs to a different experiment")
    for rec in lines[1:]:
        done[int(rec["rep"])] = rec["p_values"]
    return done


def run_experiment(exp: Experiment, log_path=None, n_jobs: int = 1) -> dict:
    """Empirical rejection percentage of each method over ``exp.reps`` replications.

    With ``log_path`` every finished replication is appended to a JSON-lines
    log; rerunning with the same log resumes where it stopped.
    """
    key = exp.key()
    done = _load_log(log_path, key)
    todo = [r for r in range(exp.reps) if r not in done]
    log = None
    if log_path:
        fresh = not os.path.exists(log_path) or os.path.getsize(log_path) == 0
        log = open(log_path, "a", encoding="utf-8")
        if fresh:
            log.write(json.dumps({"experiment": key}) + "\n")
    try:
        if n_jobs > 1 and todo:
            with ProcessPoolExecutor(n_jobs) as pool:
                results = pool.map(run_replication, itertools.repeat(exp), todo, chunksize=8)
                for r, res in zip(todo, results):
                    done[r] = res
                    if log:
                        log.write(json.dumps({"rep": r, "p_values": res}) + "\n")
        else:
            for r in todo:
                done[r] = run_replication(exp, r)
                if log:
                    log.write(json.dumps({"rep": r, "p_values": done[r]}) + "\n")
                    log.flush()
    finally:
        if log:
            log.close()
    return {
        m: 100.0 * sum(done[r][m] < exp.alpha for r in range(exp.reps)) / exp.reps
        for m in exp.methods
    }


def are_of(sizes) -> float:
    """Average relative error ``100 * mean(|s - 5|) / 5`` of empirical sizes (in %)."""
    sizes = np.asarray(list(sizes), dtype=float)
    if sizes.size == 0:
        raise ValueError("ARE of an empty list")
    return float(100.0 * np.mean(np.abs(sizes - NOMINAL)) / NOMINAL)


@dataclass
class ResultTable:
    key_names: tuple
    methods: tuple
    rows: list = field(default_factory=list)  # (key tuple, {method: pct})
    summary: bool = True  # append the ARE row (meaningful for sizes only)

    def add(self, key, cells: dict):
        for v in cells.values():
            if not 0.0 <= v <= 100.0:
                raise ValueError(f"cell value {v} outside [0, 100]")
        self.rows.append((tuple(key), dict(cells)))

    def column(self, method) -> list:
        return [cells[method] for _, cells in self.rows]

    def are(self) -> dict:
        return {m: are_of(self.column(m)) for m in self.methods}

    def to_csv(self, with_are: bool | None = None) -> str:
        with_are = self.summary if with_are is None else with_are
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(list(self.key_names) + list(self.methods))
        for key, cells in self.rows:
            w.writerow([_fmt_key(k) for k in key] + [f"{cells[m]:.1f}" for m in self.methods])
        if with_are and self.rows:
            are = self.are()
            w.writerow(["ARE"] + [""] * (len(self.key_names) - 1) + [f"{are[m]:.2f}" for m in self.methods])
        return buf.getvalue()

    def render(self, with_are: bool | None = None) -> str:
        with_are = self.summary if with_are is None else with_are
        header = list(self.key_names) + list(self.methods)
        body = [[_fmt_key(k) for k in key] + [f"{cells[m]:.1f}" for m in self.methods] for key, cells in self.rows]
        if with_are and self.rows:
            are = self.are()
            body.append(["ARE"] + [""] * (len(self.key_names) - 1) + [f"{are[m]:.2f}" for m in self.methods])
        widths = [max(len(str(r[i])) for r in [header] + body) for i in range(len(header))]
        line = lambda r: "  ".join(str(c).rjust(wd) for c, wd in zip(r, widths))
        rule = "-" * (sum(widths) + 2 * (len(widths) - 1))
        return "\n".join([line(header), rule] + [line(r) for r in body]) + "\n"


def _fmt_key(k):
    if isinstance(k, tuple):
        return "/".join(str(x) for x in k)
    return str(k)


def simulate_table(base: Experiment, grid: dict, log_dir=None, n_jobs: int = 1) -> ResultTable:
    """Run ``base`` at every combination of the config overrides in ``grid``.

    ``grid`` maps config field names to lists of values, e.g.
    ``{"error_dist": [...], "sizes": [...], "M": [50, 100]}``.  The ARE
    summary row is dropped when any cell has a nonzero mean shift.
    """
    names = tuple(grid)
    shifted = any(v for v in grid.get("delta", [])) or getattr(base.config, "delta", 0) > 0
    table = ResultTable(names, base.methods, summary=not shifted)
    for values in itertools.product(*(grid[n] for n in names)):
        cfg = replace(base.config, **dict(zip(names, values)))
        exp = replace(base, config=cfg)
        log_path = None
        if log_dir:
            os.makedirs(log_dir, exist_ok=True)
            tag = "_".join(_fmt_key(v) for v in values) or "cell"
            log_path = os.path.join(log_dir, f"run_{tag}.jsonl")
        logger.info("running cell %s", dict(zip(names, values)))
        table.add(values, run_experiment(exp, log_path, n_jobs))
    return table
