"""
Command line interface::

    adaptive-htucker run --config experiment.json
    adaptive-htucker run --d 8 --rhs series --tau 0.5 --eps 1e-3 --out results
    adaptive-htucker run --long
    adaptive-htucker diag --input results/d8_rank1_eps0.001.htrep.json --s 1

``run`` without ``--d`` or ``--config`` runs the default dimension sweep and
writes the merged plot table ``plots.csv`` into the output directory.
"""
import argparse
import json
import logging
import pathlib
import sys

import attr

from . import io
from ._common import BINARY_BINNING
from ._exceptions import ConfigError, FormatError, ParameterError
from ._reduce import GrowthSequence
from .experiment import (
    ExperimentConfig,
    emit_plots_data,
    run_experiment,
    sparsity_diagnostics,
)

logger = logging.getLogger("adaptive_htucker")

DEFAULT_DIMENSIONS = (4, 8, 16, 32)
LONG_DIMENSIONS = (64, 128)

_LOG_LEVELS = (logging.WARNING, logging.INFO, logging.DEBUG)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="adaptive-htucker",
        description="Adaptive hierarchical Tucker solver experiments.",
    )
    parser.add_argument(
        "-v",
        "--verbose",
        action="count",
        default=0,
        help="Increase logging output (repeat for debug output).",
    )
    commands = parser.add_subparsers(dest="command")
    commands.required = True

    run = commands.add_parser("run", help="Run Volterra experiments.")
    run.add_argument("--config", type=pathlib.Path, help="JSON configuration")
    run.add_argument("--d", type=int, help="number of dimensions")
    run.add_argument("--rhs", choices=("rank1", "series"))
    run.add_argument("--tau", type=float)
    run.add_argument("--eps", type=float)
    run.add_argument("--out", help="output directory")
    run.add_argument(
        "--binning",
        action="store_true",
        help="select entries by binary binning instead of sorting",
    )
    run.add_argument(
        "--long",
        action="store_true",
        help="include d = 64 and d = 128 in the default sweep",
    )
    run.add_argument(
        "--progress-json",
        action="store_true",
        help="write one JSON record per inner iteration to stdout",
    )

    diag = commands.add_parser(
        "diag", help="Sparsity diagnostics of a stored representation."
    )
    diag.add_argument("--input", type=pathlib.Path, required=True)
    diag.add_argument("--s", type=float, required=True)
    diag.add_argument(
        "--gamma-d",
        type=float,
        default=1.0,
        help="rate of the growth sequence exp(d * n**(1/b))",
    )
    diag.add_argument("--gamma-b", type=float, default=1.0)
    return parser


def _overrides(args):
    out = {}
    for key in ("d", "rhs", "tau", "eps", "out"):
        value = getattr(args, key)
        if value is not None:
            out[key] = value
    if args.binning:
        out["sorting"] = BINARY_BINNING
    return out


def _configs(args):
    overrides = _overrides(args)
    if args.config is not None:
        config = ExperimentConfig.from_json(args.config)
        return [attr.evolve(config, **overrides)], False

    if "d" in overrides:
        return [ExperimentConfig.from_dict(overrides)], False

    dims = DEFAULT_DIMENSIONS + (LONG_DIMENSIONS if args.long else ())
    configs = [ExperimentConfig.from_dict(dict(overrides, d=d)) for d in dims]
    return configs, True


def _run(args):
    configs, sweep = _configs(args)
    progress = sys.stdout if args.progress_json else None
    records = []
    for config in configs:
        record = run_experiment(config, progress=progress)
        records.append(record)
        logger.info(
            "%s: %s, %d outer steps, %d ops",
            config.name,
            record.summary["termination"],
            record.summary["outer_steps"],
            record.summary["total_ops"],
        )
    if sweep:
        plots = pathlib.Path(configs[0].out) / "plots.csv"
        path = emit_plots_data(records, plots)
        logger.info("wrote %s", path)
    return 0


def _diag(args):
    with open(args.input, "r") as f:
        v = io.load(f)
    gamma = GrowthSequence(args.gamma_d, args.gamma_b)
    report = sparsity_diagnostics(v, args.s, gamma)
    json.dump(attr.asdict(report), sys.stdout, indent=2, sort_keys=True)
    sys.stdout.write("\n")
    return 0


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    level = _LOG_LEVELS[min(args.verbose, len(_LOG_LEVELS) - 1)]
    logging.basicConfig(
        level=level, format="%(asctime)s %(name)s %(levelname)s: %(message)s"
    )

    try:
        if args.command == "run":
            return _run(args)
        return _diag(args)
    except ConfigError as e:
        parser.exit(2, "error: %s (fields: %s)\n" % (e, ", ".join(e.fields)))
    except (FormatError, ParameterError, OSError) as e:
        parser.exit(2, "error: %s\n" % e)


if __name__ == "__main__":
    sys.exit(main())
