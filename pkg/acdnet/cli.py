"""Command line: acdnet <subcommand> [flags].

Exit codes: 0 on success, 1 when the gradient check fails, 2 on any
acdnet error (configuration, data, checkpoint, numerics).
"""
__author__ = "acdnet developers"
__license__ = "GPLv3"

import argparse
import logging
import sys

from acdnet import settings as acdnet_settings
from acdnet import tasks, utils
from acdnet.exceptions import AcdnetError
from acdnet.models import VariantChoices

LOGGER = logging.getLogger(__name__)

# flag destination -> (section, key) in the settings
OVERRIDES = {
    "dataset": ("paths", "dataset"),
    "checkpoint": ("paths", "checkpoint"),
    "out": ("paths", "out"),
    "rounds": ("eval", "rounds"),
    "fraction": ("eval", "fraction"),
    "workers": ("eval", "workers"),
    "threshold": ("train", "threshold"),
    "epochs": ("train", "epochs"),
    "lr": ("train", "lr"),
    "lam": ("train", "lambda"),
    "dim": ("encoder", "dim"),
    "heads": ("encoder", "heads"),
    "layers": ("encoder", "layers"),
}


def common_parser():
    """Flags shared by every subcommand."""
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument("--config", help="YAML settings file")
    parser.add_argument("--preset", choices=sorted(acdnet_settings.PRESETS))
    parser.add_argument("--seed", type=int)
    parser.add_argument("--dataset", help="dataset container path")
    parser.add_argument("--checkpoint", help="checkpoint path")
    parser.add_argument("--out", help="output path")
    parser.add_argument(
        "--variant", action="append", choices=VariantChoices.values(), help="model variant (repeatable)"
    )
    parser.add_argument("--rounds", type=int)
    parser.add_argument("--fraction", type=float)
    parser.add_argument("--workers", type=int)
    parser.add_argument("--threshold", type=float)
    parser.add_argument("--epochs", type=int)
    parser.add_argument("--lr", type=float)
    parser.add_argument("--lambda", dest="lam", type=float)
    parser.add_argument("--dim", type=int)
    parser.add_argument("--heads", type=int)
    parser.add_argument("--layers", type=int)
    parser.add_argument("--no-positional-encoding", action="store_true")
    parser.add_argument("--log-file", help="also log to this file")
    return parser


def build_parser():
    """Return the acdnet argument parser."""
    common = common_parser()
    parser = argparse.ArgumentParser(prog="acdnet", description="Medication recommendation")
    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("gen-data", parents=[common], help="generate the synthetic corpus")
    train = commands.add_parser("train", parents=[common], help="train a model")
    train.add_argument("--resume", help="resumable checkpoint to continue from")
    evaluate = commands.add_parser("eval", parents=[common], help="bootstrap evaluation")
    evaluate.add_argument("--split", choices=tasks.SPLITS, default="test")
    evaluate.add_argument("--baseline", choices=["random", "most_frequent_k"])
    commands.add_parser("ablate", parents=[common], help="compare model variants")
    predict = commands.add_parser("predict", parents=[common], help="recommend for a patient file")
    predict.add_argument("--patients", required=True, help="patient records file")
    gradcheck = commands.add_parser("gradcheck", parents=[common], help="finite-difference self check")
    gradcheck.add_argument("--corrupt", choices=["matmul"], help="break a backward on purpose")
    sweep = commands.add_parser("sweep", parents=[common], help="parameter experiment")
    sweep.add_argument("--parameter", choices=sorted(tasks.SWEEPS), default="lambda")
    sweep.add_argument("--values", type=float, nargs="+")
    return parser


def overrides_from(args):
    """Return the settings overrides given on the command line."""
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    for dest, (section, key) in OVERRIDES.items():
        value = getattr(args, dest)
        if value is not None:
            overrides.setdefault(section, {})[key] = value
    if args.no_positional_encoding:
        overrides.setdefault("encoder", {})["positional_encoding"] = False
    if args.variant:
        overrides["ablation"] = {"variants": args.variant}
    return overrides


def run(args, settings):
    """Dispatch args.command; return (exit code, text)."""
    paths = settings["paths"]
    if args.command == "gen-data":
        return 0, tasks.cmd_gen_data(settings, paths["out"] or paths["dataset"])
    if args.command == "train":
        return 0, tasks.cmd_train(
            settings, paths["dataset"], paths["checkpoint"], args.resume, paths["out"]
        )
    if args.command == "eval":
        return 0, tasks.cmd_eval(
            settings, paths["dataset"], paths["checkpoint"], paths["out"], args.split, args.baseline
        )
    if args.command == "ablate":
        return 0, tasks.cmd_ablate(settings, paths["dataset"], out_path=paths["out"])
    if args.command == "predict":
        return 0, tasks.cmd_predict(
            settings, paths["checkpoint"], args.patients, paths["dataset"], paths["out"]
        )
    if args.command == "gradcheck":
        report, text = tasks.cmd_gradcheck(settings, args.corrupt, paths["out"])
        return (0 if report.passed else 1), text
    values = args.values
    if values and args.parameter == "dim":
        values = [int(value) for value in values]
    return 0, tasks.cmd_sweep(settings, paths["dataset"], args.parameter, values, paths["out"])


def main(argv=None):
    """Entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    utils.configure_logging(args.log_file)
    try:
        settings = acdnet_settings.load_settings(args.config, overrides_from(args), args.preset)
        code, text = run(args, settings)
    except AcdnetError as exc:
        LOGGER.debug("command failed", exc_info=True)
        print(f"acdnet: error: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
