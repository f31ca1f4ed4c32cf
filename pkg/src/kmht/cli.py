"""Command-line entry point: ``kmht <subcommand> ...``.

Exit codes: 0 success, 2 usage or configuration error, 3 infeasible balance constraint.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from kmht.core import SortedSample
from kmht.distributions import RandomStream, from_json as dist_from_json
from kmht.errors import ConstraintError, DomainError
from kmht.experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    geometric_schedule,
    records_to_csv,
    run_trajectory,
    seeds_from_env,
)
from kmht.population import landscape_1d, tail_diagnostic
from kmht.solvers import BalanceConstraint, exact_kmeans_1d

EXIT_OK, EXIT_CONFIG, EXIT_INFEASIBLE = 0, 2, 3

_DIST_PARAMS = {
    "sym_pareto2": ("alpha",),
    "one_sided_pareto2": ("alpha",),
    "asym_pareto2": ("p", "alpha"),
    "gaussian": ("mu", "sigma"),
    "uniform": ("a", "b"),
}


class ConfigError(Exception):
    pass


def _add_dist_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--dist", required=required, choices=sorted(_DIST_PARAMS), help="distribution family")
    p.add_argument("--p", type=float, help="positive-tail mass for asym_pareto2")
    p.add_argument("--alpha", type=float, help="Pareto tail exponent (default 2)")
    p.add_argument("--mu", type=float)
    p.add_argument("--sigma", type=float)
    p.add_argument("--a", type=float, help="uniform lower end")
    p.add_argument("--b", type=float, help="uniform upper end")


def _dist_from_args(args: argparse.Namespace):
    names = _DIST_PARAMS[args.dist]
    params = {n: getattr(args, n) for n in names if getattr(args, n) is not None}
    stray = [n for n in ("p", "alpha", "mu", "sigma", "a", "b") if n not in names and getattr(args, n) is not None]
    if stray:
        raise ConfigError(f"{args.dist} does not take {', '.join('--' + s for s in stray)}")
    return dist_from_json({"family": args.dist, "params": params})


def _balance_from_args(args: argparse.Namespace) -> BalanceConstraint | None:
    given = [(m, v) for m, v in (("absolute", args.gamma), ("linear", args.balance_fraction), ("polylog", args.polylog)) if v is not None]
    if len(given) > 1:
        raise ConfigError("give at most one of --gamma, --balance-fraction, --polylog")
    if not given:
        return None
    mode, value = given[0]
    return BalanceConstraint(mode, value)


def _add_balance_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--gamma", type=int, help="absolute minimum cluster size")
    p.add_argument("--balance-fraction", type=float, help="minimum cluster size ceil(fraction * n)")
    p.add_argument("--polylog", type=float, help="minimum cluster size ceil(log(n) ** exponent)")


def _read_text(path: str | None) -> str:
    return sys.stdin.read() if path in (None, "-") else Path(path).read_text()


def _emit(text: str, path: str | None) -> None:
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


# --- subcommands -----------------------------------------------------------

def cmd_sample(args: argparse.Namespace) -> int:
    dist = _dist_from_args(args)
    if args.n < 0:
        raise ConfigError("--n must be nonnegative")
    x = dist.sample(args.n, RandomStream(args.seed, args.stream_id))
    _emit("x\n" + "".join(f"{v!r}\n" for v in x.tolist()), args.out)
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    s = SortedSample.from_csv(_read_text(args.input))
    rep = exact_kmeans_1d(s, args.k, _balance_from_args(args))
    _emit(_dumps(rep.to_json()), args.out)
    return EXIT_OK


def cmd_landscape(args: argparse.Namespace) -> int:
    dist = _dist_from_args(args)
    if args.steps < 1 or (args.steps > 1 and not args.r_max > args.r_min):
        raise ConfigError("need --steps >= 1 and --r-max > --r-min")
    grid = np.linspace(args.r_min, args.r_max, args.steps)
    rep = landscape_1d(dist, grid)
    _emit(rep.to_csv(), args.out)
    if args.summary:
        _emit(_dumps(rep.to_json()), args.summary)
    return EXIT_OK


def cmd_diagnose(args: argparse.Namespace) -> int:
    s = SortedSample.from_csv(_read_text(args.input))
    _emit(_dumps(tail_diagnostic(s).to_json()), args.out)
    return EXIT_OK


def _experiment_config(args: argparse.Namespace) -> ExperimentConfig:
    obj = json.loads(Path(args.config).read_text()) if args.config else {}
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    # command-line flags override the file
    if args.dist:
        obj["dist"] = _dist_from_args(args).to_json()
    bc = _balance_from_args(args)
    if bc is not None:
        obj["balance"] = bc.to_json()
    if args.k is not None:
        obj["k"] = args.k
    if args.n_max is not None:
        obj.pop("n_schedule", None)
        obj["n_max"] = args.n_max
    if args.n_schedule:
        obj["n_schedule"] = [int(t) for t in args.n_schedule.split(",")]
        obj.pop("n_max", None)
    if args.seeds:
        obj["seeds"] = [int(t) for t in args.seeds.split(",")]
    if args.jump_multiplier is not None:
        obj["jump_multiplier"] = args.jump_multiplier
    if args.workers is not None:
        obj["workers"] = args.workers
    if args.output:
        obj["output_path"] = args.output
    obj.setdefault("output_path", args.name)
    return ExperimentConfig.from_json(obj)


def cmd_experiment(args: argparse.Namespace) -> int:
    cfg = _experiment_config(args)
    result = EXPERIMENTS[args.name](cfg)
    sys.stdout.write(result.summary_json())
    return EXIT_OK


def cmd_figure1(args: argparse.Namespace) -> int:
    dist = _dist_from_args(args) if args.dist else dist_from_json({"family": "sym_pareto2", "params": {}})
    seed = args.seed if args.seed is not None else seeds_from_env()[0]
    cfg = ExperimentConfig(dist=dist, k=args.k, n_schedule=geometric_schedule(args.n_max), seeds=(seed,))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    x = dist.sample(cfg.n_max, RandomStream(seed))
    (out / "samples.csv").write_text("index,x\n" + "".join(f"{i + 1},{v!r}\n" for i, v in enumerate(x.tolist())))
    (out / "trajectory.csv").write_text(records_to_csv(run_trajectory(cfg), cfg.k))
    sys.stdout.write(f"{out / 'samples.csv'}\n{out / 'trajectory.csv'}\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kmht", description="k-means under heavy tails: solvers, landscapes, experiments")
    parser.add_argument("-v", "--verbose", action="store_true", help="log skipped checkpoints")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw a seeded sample as CSV")
    _add_dist_args(p)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--stream-id", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("solve", help="exact 1D k-means of a CSV column 'x'")
    p.add_argument("--input", help="CSV file (default stdin)")
    p.add_argument("--k", type=int, required=True)
    _add_balance_args(p)
    p.add_argument("--out")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("landscape", help="two-cell excess distortion D(r) on a grid")
    _add_dist_args(p)
    p.add_argument("--r-min", type=float, required=True)
    p.add_argument("--r-max", type=float, required=True)
    p.add_argument("--steps", type=int, default=601)
    p.add_argument("--out")
    p.add_argument("--summary", help="write the landscape report JSON here")
    p.set_defaults(func=cmd_landscape)

    p = sub.add_parser("diagnose", help="tail diagnostic of a CSV column 'x'")
    p.add_argument("--input")
    p.add_argument("--out")
    p.set_defaults(func=cmd_diagnose)

    p = sub.add_parser("experiment", help="run a seeded experiment")
    p.add_argument("name", choices=sorted(EXPERIMENTS))
    p.add_argument("--config", help="JSON config file")
    _add_dist_args(p, required=False)
    _add_balance_args(p)
    p.add_argument("--k", type=int)
    p.add_argument("--n-max", type=int, help="geometric checkpoints up to this n")
    p.add_argument("--n-schedule", help="comma-separated checkpoints")
    p.add_argument("--seeds", help="comma-separated seeds")
    p.add_argument("--jump-multiplier", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--output", help="output prefix for .records.csv and .summary.json")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("figure1", help="samples plus one unbalanced trajectory")
    _add_dist_args(p, required=False)
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--n-max", type=int, default=3000)
    p.add_argument("--out-dir", default="figure1")
    p.set_defaults(func=cmd_figure1)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConstraintError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except (ConfigError, DomainError, ValueError, KeyError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
