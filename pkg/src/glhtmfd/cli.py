"""Command-line entry point.

Subcommands: ``test``, ``bootstrap``, ``simulate``, ``power`` and
``reconstruct``.  Exit status is 0 on success, 1 on a usage error and 2 on
a data or numerical error.  Every option may also be given in a YAML
key-value file passed with ``--config``; keys are the long option names
(dashes or underscores) and command-line values take precedence.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

import numpy as np
import yaml

from .bootstrap import bootstrap_test
from .exceptions import GLHTError
from .funcdata import Grid, export_gridded, infer_grid, ingest_long_csv, reconstruct
from .glht import AsymptoticPowerInput, asymptotic_power, run_test
from .harness import Experiment, ResultTable, contrast_matrix, simulate_table
from .simgen import SIM1_SIZES, SIM2_SIZES, Sim1Config, Sim2Config, sim1_covariance, sim1_mean

logger = logging.getLogger("glhtmfd")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _csv_floats(text):
    return [float(x) for x in str(text).split(",") if x.strip()]


def _csv_words(text):
    return [x.strip() for x in str(text).split(",") if x.strip()]


def _sizes_list(text, table):
    """``"n1,n3"`` or explicit sizes ``"100:140:140"`` (lists separated by commas)."""
    out = []
    for tok in _csv_words(text):
        if tok in table:
            out.append(table[tok])
        else:
            out.append(tuple(int(x) for x in tok.split(":")))
    return out


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="YAML file with option values")
    common.add_argument("--out", help="write the primary output here instead of stdout")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--alpha", type=float, default=0.05)
    common.add_argument("-v", "--verbose", action="store_true")

    data = _Parser(add_help=False)
    data.add_argument("--data", help="long CSV: group,subject,component,time,value")
    data.add_argument("--grid", help="a,b,M (default: inferred from the data)")
    data.add_argument("--contrast", help='coefficient matrix, rows split by ";" e.g. "1,-1,0"')
    data.add_argument("--hypothesis", help="tag G1..G5 (alternative to --contrast)")
    data.add_argument("--method", choices=["linear", "smoothing-spline"],
                      help="reconstruction onto the grid (default linear; smoothing-spline for reconstruct)")

    parser = _Parser(prog="glhtmfd", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("test", parents=[common, data], help="global test on a data file")
    p.add_argument("--no-adjust", action="store_true", help="skip the finite-sample adjustment")

    p = sub.add_parser("bootstrap", parents=[common, data], help="bootstrap test on a data file")
    p.add_argument("--B", type=int, default=300)
    p.add_argument("--omit-stats", action="store_true", help="leave replicate statistics out of the JSON")

    sim = _Parser(add_help=False)
    sim.add_argument("--design", default="sim1", choices=["sim1", "sim2"])
    sim.add_argument("--hypothesis", default="G1")
    sim.add_argument("--contrast", help="custom coefficient matrix (overrides --hypothesis)")
    sim.add_argument("--sizes", help="n1,n2,n3 tags or explicit a:b:c sizes")
    sim.add_argument("--M", default=None, help="grid sizes, comma separated")
    sim.add_argument("--rho", default="0.1", help="design 1 correlation levels")
    sim.add_argument("--delta", default="0", help="design 1 shift sizes")
    sim.add_argument("--dist", default="gaussian", help="design 1 error distributions")
    sim.add_argument("--scores", default="independent", choices=["independent", "shared"])
    sim.add_argument("--scenario", default="S1", choices=["S1", "S2"])
    sim.add_argument("--sigma", default="0.1", help="design 2 noise levels (S1)")
    sim.add_argument("--a", default="0.5", help="design 2 kept fractions (S2)")

    p = sub.add_parser("simulate", parents=[common, sim], help="Monte Carlo size or power table")
    p.add_argument("--method", default="new", help="new, new-unadjusted, bootstrap (comma separated)")
    p.add_argument("--reps", type=int, default=1000)
    p.add_argument("--B", type=int, default=300)
    p.add_argument("--format", default="csv", choices=["csv", "text"])
    p.add_argument("--log-dir", help="directory for resumable run logs")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("power", parents=[common, sim], help="limiting power for design 1")
    p.add_argument("--mode", default="normal", choices=["normal", "chisq"])

    sub.add_parser("reconstruct", parents=[common, data], help="put raw curves on a grid and export")
    return parser


def _merge_config(parser, argv):
    args = parser.parse_args(argv)
    if not args.config:
        return args
    try:
        with open(args.config, encoding="utf-8") as fh:
            conf = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    if not isinstance(conf, dict):
        raise UsageError(f"config {args.config} must be a key-value mapping")
    extra = []
    for key, value in conf.items():
        flag = "--" + str(key).replace("_", "-")
        if key in ("B", "M"):
            flag = "--" + key
        if isinstance(value, bool):
            if value:
                extra.append(flag)
            continue
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        extra += [flag, str(value)]
    # config first so explicit flags override it
    return parser.parse_args([argv[0]] + extra + list(argv[1:]))


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _load_data(args):
    if not args.data:
        raise UsageError("--data is required")
    obs = ingest_long_csv(args.data)
    grid = Grid.parse(args.grid) if args.grid else infer_grid(obs)
    method = args.method or ("smoothing-spline" if args.command == "reconstruct" else "linear")
    return reconstruct(obs, grid, method)


def _require_contrast(args):
    if not (args.contrast or args.hypothesis):
        raise UsageError("one of --contrast or --hypothesis is required")


def _G(args, k):
    _require_contrast(args)
    return contrast_matrix(args.contrast or args.hypothesis, k)


def cmd_test(args):
    _require_contrast(args)
    data = _load_data(args)
    report = run_test(data, _G(args, data.k), adjusted=not args.no_adjust, alphas=(args.alpha,))
    _emit(report.to_json(indent=2, sort_keys=True) + "\n", args.out)


def cmd_bootstrap(args):
    _require_contrast(args)
    data = _load_data(args)
    report = bootstrap_test(data, _G(args, data.k), args.B, args.seed)
    out = report.to_dict(include_stats=not args.omit_stats)
    out["alpha"] = args.alpha
    out["reject"] = bool(report.p_value < args.alpha)
    _emit(json.dumps(out, indent=2, sort_keys=True) + "\n", args.out)


def _design_grid(args):
    """Base config plus the lists of values to sweep."""
    grid = {}
    if args.design == "sim1":
        grid["error_dist"] = _csv_words(args.dist)
        grid["sizes"] = _sizes_list(args.sizes or "n1", SIM1_SIZES)
        grid["M"] = [int(m) for m in _csv_floats(args.M or "50")]
        grid["rho"] = _csv_floats(args.rho)
        grid["delta"] = _csv_floats(args.delta)
        base = Sim1Config(scores=args.scores, seed=args.seed)
    else:
        grid["sizes"] = _sizes_list(args.sizes or "n1", SIM2_SIZES)
        grid["M"] = [int(m) for m in _csv_floats(args.M or "50")]
        if args.scenario == "S1":
            grid["sigma"] = _csv_floats(args.sigma)
        else:
            grid["a"] = _csv_floats(args.a)
        base = Sim2Config(scenario=args.scenario, seed=args.seed)
    return base, grid


def cmd_simulate(args):
    base, grid = _design_grid(args)
    exp = Experiment(
        base,
        hypothesis=args.contrast or args.hypothesis,
        methods=tuple(_csv_words(args.method)),
        reps=args.reps,
        alpha=args.alpha,
        seed=args.seed,
        B=args.B,
    )
    table: ResultTable = simulate_table(exp, grid, args.log_dir, args.jobs)
    _emit(table.to_csv() if args.format == "csv" else table.render(), args.out)


def cmd_power(args):
    if args.design != "sim1":
        raise UsageError("limiting power is available for design 1 only")
    base, grid = _design_grid(args)
    rows = []
    for dist in grid["error_dist"]:
        for sizes in grid["sizes"]:
            for M in grid["M"]:
                for rho in grid["rho"]:
                    for delta in grid["delta"]:
                        cfg = Sim1Config(sizes=sizes, M=M, rho=rho, delta=delta, error_dist=dist, scores=args.scores)
                        k = len(sizes)
                        n = sum(sizes)
                        inp = AsymptoticPowerInput(
                            M_fn=np.stack([sim1_mean(a, cfg) for a in range(1, k + 1)]),
                            tau=np.asarray(sizes, dtype=float) / n,
                            cov=np.stack([sim1_covariance(a, cfg) for a in range(1, k + 1)]),
                            G=_G(args, k),
                            n=n,
                            grid=cfg.grid,
                            alpha=args.alpha,
                        )
                        rows.append({
                            "sizes": list(sizes), "M": M, "rho": rho, "delta": delta,
                            "power": asymptotic_power(inp, args.mode),
                        })
    _emit(json.dumps({"mode": args.mode, "alpha": args.alpha, "rows": rows}, indent=2) + "\n", args.out)


def cmd_reconstruct(args):
    if not args.out:
        raise UsageError("reconstruct needs --out DIRECTORY")
    data = _load_data(args)
    os.makedirs(args.out, exist_ok=True)
    paths = export_gridded(data, args.out)
    summary = {"grid": [data.grid.a, data.grid.b, data.grid.M], "files": [os.path.basename(p) for p in paths],
               "diagnostics": data.diagnostics}
    sys.stdout.write(json.dumps(summary, indent=2, sort_keys=True, default=str) + "\n")


COMMANDS = {
    "test": cmd_test,
    "bootstrap": cmd_bootstrap,
    "simulate": cmd_simulate,
    "power": cmd_power,
    "reconstruct": cmd_reconstruct,
}


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        if not argv:
            parser.print_help(sys.stderr)
            return 1
        if argv[0] in ("-h", "--help"):
            parser.parse_args(argv)
        args = _merge_config(parser, argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
        COMMANDS[args.command](args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (GLHTError, OSError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # bad option values (e.g. malformed numbers) are usage errors
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    return 0
