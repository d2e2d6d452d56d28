"""``sst-track`` command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, load_config
from .experiment import ExperimentError, run_experiment, write_outputs
from .metrics import TraceSummary

log = logging.getLogger("sst_track")

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def build_parser():
    parser = argparse.ArgumentParser(prog="sst-track", description="Robust sparse subspace tracking experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write CSV/JSON outputs")
    run.add_argument("--config", required=True, help="path to a JSON config file")
    run.add_argument("--seed", type=int, action="append", dest="seeds", help="override seeds (repeatable)")
    run.add_argument("--out", help="output directory (overrides output_dir)")
    run.add_argument("--stride", type=int, help="write every N-th step only")
    run.add_argument("-q", "--quiet", action="store_true")

    val = sub.add_parser("validate", help="check a config file and print the resolved settings")
    val.add_argument("--config", required=True)
    return parser


def _describe(summary):
    if isinstance(summary, TraceSummary):
        return (f"median SEP {summary.median:.3e}, mean {summary.mean:.3e}, "
                f"last-decile mean {summary.last_decile_mean:.3e}, divergent {summary.n_divergent}/{summary.n_steps}")
    errs = ", ".join(f"{e:.3f}" for e in summary["median_abs_err_deg"])
    return f"median abs error per track [{errs}] deg over {summary['n_steps']} steps"


def _cmd_validate(args):
    cfg = load_config(args.config)
    for key in sorted(cfg.resolved):
        print(f"{key} = {cfg.resolved[key]!r}")
    print(f"config_digest = {cfg.digest}")
    return EXIT_OK


def _cmd_run(args):
    cfg = load_config(args.config)
    overrides = {}
    if args.seeds:
        overrides["seeds"] = args.seeds
    if args.out:
        overrides["output_dir"] = args.out
    if args.stride is not None:
        overrides["stride"] = args.stride
    if overrides:
        cfg = cfg.with_overrides(**overrides)
    log.info("running %s (digest %s) for seeds %s", cfg.experiment, cfg.digest, list(cfg.seeds))
    result = run_experiment(cfg)
    paths = write_outputs(result)
    for (alg, seed), summary in sorted(result.summaries().items()):
        log.info("%s seed %d: %s", alg, seed, _describe(summary))
    log.info("wrote %d files to %s", len(paths), cfg.output_dir)
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING if getattr(args, "quiet", False) else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s %(message)s", stream=sys.stderr)
    try:
        if args.command == "validate":
            return _cmd_validate(args)
        return _cmd_run(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (ExperimentError, OSError, ArithmeticError) as exc:
        print(f"runtime error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
