"""Command line entry point.

Subcommands: reference, fixed, adaptive, grid. Options come from an
optional JSON config file (flat key/value, keys matching ExperimentSpec
fields) with command line flags taking precedence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from .harness import ExperimentSpec, cmd_adaptive, cmd_fixed, cmd_grid, cmd_reference


def _add_common(p):
    p.add_argument("--config", help="JSON config file (flags override its keys)")
    p.add_argument("--data", help="LIBSVM data file")
    p.add_argument(
        "--data-dimension", type=int, dest="data_dimension",
        help="override the inferred feature dimension of --data",
    )
    p.add_argument("--synth-n", type=int, dest="synth_n", help="synthetic example count")
    p.add_argument("--synth-d", type=int, dest="synth_d", help="synthetic dimension")
    p.add_argument("--synth-noise", type=float, dest="synth_noise", help="synthetic label noise")
    p.add_argument("--model", choices=("ridge", "logistic"))
    p.add_argument("--lambda", type=float, dest="lam", help="regularization weight")
    p.add_argument(
        "--logistic-sign", type=float, choices=(1.0, -1.0), dest="logistic_sign",
        help="sign inside the logistic exponent (+1 default, -1 conventional)",
    )
    p.add_argument("--ref-tol", type=float, dest="ref_tol", help="reference solver tolerance")
    p.add_argument("--partitions", type=int, help="number of cells K")
    p.add_argument("--partition-scheme", choices=("contiguous", "shuffled"), dest="partition_scheme")
    p.add_argument("--partition-probs", choices=("proportional", "uniform"), dest="partition_probs")
    p.add_argument("--sampling", choices=("nice", "independent"))
    p.add_argument("--eps", type=float, help="target neighborhood")
    p.add_argument("--cap", type=float, dest="C", help="variance cap C")
    p.add_argument("--max-epochs", type=float, dest="max_epochs")
    p.add_argument("--seeds", type=int, help="number of seeds")
    p.add_argument("--seed", type=int, help="base seed")
    p.add_argument("--workers", type=int, help="parallel workers (1 = serial)")
    p.add_argument("--out", dest="out_dir", help="output directory")


def build_spec(args):
    overrides = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "config", "func") and v is not None
    }
    if args.config:
        return ExperimentSpec.from_config(args.config, overrides)
    known = {f.name for f in dataclasses.fields(ExperimentSpec)}
    unknown = set(overrides) - known
    if unknown:
        raise ValueError(f"unknown options: {sorted(unknown)}")
    return ExperimentSpec(**overrides)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="adabatch")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ref = sub.add_parser("reference", help="solve and store the reference solution")
    _add_common(p_ref)
    p_ref.set_defaults(func=cmd_reference)

    p_fixed = sub.add_parser("fixed", help="fixed batch-size runs")
    _add_common(p_fixed)
    p_fixed.add_argument("--tau", type=int, help="batch size")
    p_fixed.set_defaults(func=cmd_fixed)

    p_ad = sub.add_parser("adaptive", help="adaptive batch-size runs")
    _add_common(p_ad)
    p_ad.set_defaults(func=cmd_adaptive)

    p_grid = sub.add_parser("grid", help="batch-size grid search")
    _add_common(p_grid)
    p_grid.add_argument(
        "--tau-grid", dest="tau_grid", help="comma separated batch sizes (default: doubling grid)"
    )
    p_grid.set_defaults(func=cmd_grid)

    args = parser.parse_args(argv)
    if getattr(args, "tau_grid", None) is not None:
        args.tau_grid = [int(t) for t in args.tau_grid.split(",")]

    try:
        spec = build_spec(args)
        result = args.func(spec)
    except Exception as err:  # surface a diagnostic, not a traceback
        print(f"adabatch: error: {err}", file=sys.stderr)
        return 1
    if isinstance(result, dict):
        json.dump(result, sys.stdout, indent=2, sort_keys=True)
        print()
    else:
        print(result)
    return 0


if __name__ == "__main__":
    sys.exit(main())
