"""Command-line interface.

Subcommands:
    simulate        run one configured simulation, write metrics CSV
    sweep           run an algorithm x n x seed grid into one CSV
    fit             fit log-log scaling exponents from a metrics CSV
    kernel-verify   run the numerical kernel oracle/bound table
    dump-hierarchy  print the square partition for a sampled point set

Exit codes: 0 success, 1 configuration error, 2 verification failure,
3 delivery-fault threshold exceeded.
"""

import argparse
import sys

from . import engine, experiment, metrics
from .geometry import sample_points
from .hierarchy import EmptyCellError, ScheduleOverflowError, \
    build_hierarchy, dump_hierarchy

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_VERIFY = 2
EXIT_FAULTS = 3


def _add_override_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value config file")
    p.add_argument("--algorithm", choices=experiment.ALGORITHMS)
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--radius-c", dest="radius_c", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--mode", choices=("paper", "practical"))
    p.add_argument("--a", type=float)
    p.add_argument("--gamma", type=float)
    p.add_argument("--c1", type=float)
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--max-ticks", dest="max_ticks", type=int)
    p.add_argument("--init", choices=engine.INIT_DISTRIBUTIONS)
    p.add_argument("--output")
    p.add_argument("--stride", type=int)
    p.add_argument("--stop-on-root", dest="stop_on_root",
                   action="store_const", const=True)
    p.add_argument("--fault-limit", dest="fault_limit", type=int)


def _merged_config(args) -> experiment.ExperimentConfig:
    cfg = experiment.ExperimentConfig()
    if args.config:
        cfg = experiment.load_config(args.config, cfg)
    overrides = {key: getattr(args, key)
                 for key in experiment._KEY_PARSERS if hasattr(args, key)}
    return experiment.apply_overrides(cfg, overrides)


def _cmd_simulate(args) -> int:
    cfg = _merged_config(args)
    cfg.require_seed()
    out_path = cfg.output or "metrics.csv"
    event_fh = None
    try:
        with open(out_path, "w") as csv_fh:
            if args.event_log:
                event_fh = open(args.event_log, "w")
            try:
                result = experiment.run_experiment(cfg, csv_fh=csv_fh,
                                                   event_fh=event_fh)
            finally:
                if event_fh is not None:
                    event_fh.close()
    except (EmptyCellError, ScheduleOverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(result.summary)
    print(f"wrote {out_path}")
    if result.delivery_faults() > cfg.fault_limit:
        print(f"delivery faults {result.delivery_faults()} exceed limit "
              f"{cfg.fault_limit}", file=sys.stderr)
        return EXIT_FAULTS
    return EXIT_OK


def _parse_int_list(text: str, what: str) -> list:
    try:
        return [int(tok) for tok in text.split(",") if tok.strip()]
    except ValueError as exc:
        raise experiment.ConfigError(f"bad {what} list {text!r}: {exc}")


def _cmd_sweep(args) -> int:
    cfg = _merged_config(args)
    ns = _parse_int_list(args.ns, "n")
    seeds = _parse_int_list(args.seeds, "seed")
    if not ns or not seeds:
        raise experiment.ConfigError("sweep needs at least one n and one "
                                     "seed")
    algorithms = None
    if args.algorithms:
        algorithms = [tok.strip() for tok in args.algorithms.split(",")
                      if tok.strip()]
    out_path = cfg.output or "sweep.csv"
    try:
        with open(out_path, "w") as csv_fh:
            results = experiment.sweep(cfg, ns, seeds,
                                       algorithms=algorithms, csv_fh=csv_fh)
    except (EmptyCellError, ScheduleOverflowError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    worst = 0
    for result in results:
        print(result.summary)
        worst = max(worst, result.delivery_faults())
    print(f"wrote {out_path} ({len(results)} runs)")
    if worst > cfg.fault_limit:
        print(f"delivery faults {worst} exceed limit {cfg.fault_limit}",
              file=sys.stderr)
        return EXIT_FAULTS
    return EXIT_OK


def _cmd_fit(args) -> int:
    records = metrics.read_csv(args.csv)
    try:
        fits = metrics.fit_scaling(records, args.target)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for algo in sorted(fits):
        print(fits[algo])
    return EXIT_OK


def _cmd_kernel_verify(args) -> int:
    rows = experiment.kernel_verify(trials=args.trials, seed=args.seed)
    ok = True
    for row in rows:
        print(row)
        ok = ok and row.passed
    if not ok:
        return EXIT_VERIFY
    print("all kernel checks passed")
    return EXIT_OK


def _cmd_dump_hierarchy(args) -> int:
    points = sample_points(args.n, args.seed)
    hierarchy = build_hierarchy(points, args.threshold)
    print(dump_hierarchy(hierarchy))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="geogossip",
        description="Gossip averaging simulators on geometric random "
                    "graphs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one simulation")
    _add_override_flags(p)
    p.add_argument("--event-log", help="write a line-per-event log "
                                       "(tick node action target hops)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("sweep", help="run a grid of simulations")
    _add_override_flags(p)
    p.add_argument("--ns", required=True, help="comma-separated n values")
    p.add_argument("--seeds", required=True,
                   help="comma-separated seed values")
    p.add_argument("--algorithms",
                   help="comma-separated subset of hier,boyd,geo")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("fit", help="fit scaling exponents from a CSV")
    p.add_argument("--csv", required=True)
    p.add_argument("--target", type=float, default=0.1,
                   help="error ratio defining convergence (default 0.1)")
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("kernel-verify", help="check the averaging kernel "
                                             "against oracles and bounds")
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=_cmd_kernel_verify)

    p = sub.add_parser("dump-hierarchy", help="print the square partition")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--threshold", type=float, required=True)
    p.set_defaults(func=_cmd_dump_hierarchy)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except experiment.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except EmptyCellError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
