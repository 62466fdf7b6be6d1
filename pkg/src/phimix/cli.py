"""Command line interface: ``phimix {run,check-mixability,estimate-eta,bound}``.

Every subcommand prints JSON on stdout and reports its verdict through the
exit code (see :mod:`phimix.harness` for the code table).
"""

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .core import check_simplex
from .entropy import EntropySpec
from .exceptions import OutOfRangeError, PhimixError
from .gaa import regret_bound
from .harness import (
    EXIT_BOUND_VIOLATED,
    EXIT_INFEASIBLE,
    EXIT_INVALID,
    EXIT_NOT_MIXABLE,
    EXIT_OK,
    EXIT_OUT_OF_RANGE,
    load_config,
    rounded,
    run_config,
)
from .losses import LossSpec
from .mixability import bracket_mixability_constant, certify_mixability


def _entropy(args, prefix=""):
    return EntropySpec(getattr(args, f"{prefix}entropy"), getattr(args, f"{prefix}eta"), getattr(args, f"{prefix}q"))


def _loss(args):
    entropy = None
    if args.loss == "proper":
        entropy = EntropySpec(args.loss_entropy, args.loss_eta, args.loss_q)
    return LossSpec(args.loss, args.outcomes, entropy)


def _run_one(config_path, out_dir, seed):
    try:
        config = load_config(config_path, seed=seed)
        report = run_config(config, out_dir, config_name=str(config_path))
    except PhimixError as exc:
        return {"config": str(config_path), "error": str(exc), "exit_code": EXIT_INVALID}
    return report.summary


def cmd_run(config_paths, out_dir, seed=None, jobs=1):
    """Run one or more game configs; with several, each writes to ``out_dir/<config stem>``."""
    out_dir = Path(out_dir)
    if len(config_paths) == 1:
        targets = [out_dir]
    else:
        targets = [out_dir / Path(p).stem for p in config_paths]
    if jobs > 1 and len(config_paths) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            summaries = list(pool.map(_run_one, config_paths, targets, [seed] * len(config_paths)))
    else:
        summaries = [_run_one(p, t, seed) for p, t in zip(config_paths, targets)]
    codes = {s["exit_code"] for s in summaries}
    for code in (EXIT_INVALID, EXIT_BOUND_VIOLATED, EXIT_INFEASIBLE):
        if code in codes:
            break
    else:
        code = EXIT_OK
    payload = summaries[0] if len(summaries) == 1 else {"runs": summaries}
    return payload, code


def cmd_check_mixability(entropy, loss, samples=200, seed=0, n_experts=None):
    verdict = certify_mixability(entropy, loss, samples, seed, n_experts)
    payload = {
        "entropy": str(entropy),
        "loss": str(loss),
        "samples_tested": verdict.samples_tested,
        "mixable_on_samples": verdict.mixable_on_samples,
        "witnesses": [
            {
                "mixture": [rounded(v) for v in w.mixture],
                "panel": [[rounded(v) for v in row] for row in w.panel],
                "worst_slack": rounded(w.worst_slack),
                "certificate": rounded(w.certificate),
            }
            for w in verdict.witness_failures
        ],
    }
    return payload, EXIT_OK if verdict.mixable_on_samples else EXIT_NOT_MIXABLE


def cmd_estimate_eta(entropy_base, loss, precision, samples=200, seed=0):
    try:
        low, high = bracket_mixability_constant(entropy_base, loss, precision, samples, seed)
    except OutOfRangeError as exc:
        return {"entropy": str(entropy_base), "loss": str(loss), "error": str(exc)}, EXIT_OUT_OF_RANGE
    payload = {
        "entropy": str(entropy_base),
        "loss": str(loss),
        "bracket": [rounded(low), rounded(high)],
        "midpoint": rounded(0.5 * (low + high)),
    }
    return payload, EXIT_OK


def cmd_bound(entropy, prior):
    prior = check_simplex(prior, name="prior")
    bounds = [rounded(regret_bound(entropy, prior, k)) for k in range(prior.size)]
    return {"entropy": str(entropy), "prior": [rounded(v) for v in prior], "bound": bounds}, EXIT_OK


def _parse_prior(text, n_experts):
    if text == "uniform":
        if n_experts is None:
            raise argparse.ArgumentTypeError("--experts is required with a uniform prior")
        return np.full(n_experts, 1.0 / n_experts)
    prior = np.array([float(v) for v in text.split(",")])
    if n_experts is not None and prior.size != n_experts:
        raise PhimixError(f"prior has {prior.size} entries but --experts is {n_experts}")
    return prior


def _add_entropy_args(parser, prefix="", with_eta=True):
    dest = prefix.replace("-", "_")
    parser.add_argument(f"--{prefix}entropy", dest=f"{dest}entropy", default="shannon",
                        choices=["shannon", "tsallis", "quadratic"])
    if with_eta:
        parser.add_argument(f"--{prefix}eta", dest=f"{dest}eta", type=float, default=1.0)
    parser.add_argument(f"--{prefix}q", dest=f"{dest}q", type=float, default=None)


def _add_loss_args(parser):
    parser.add_argument("--loss", default="log", choices=["log", "brier", "proper"])
    parser.add_argument("--outcomes", type=int, default=2, help="number of outcomes")
    _add_entropy_args(parser, prefix="loss-")


def build_parser():
    parser = argparse.ArgumentParser(prog="phimix", description="Generalised aggregating algorithm toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="play games described by JSON configs")
    run.add_argument("--config", action="append", required=True, metavar="PATH")
    run.add_argument("--out", required=True, metavar="DIR")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--jobs", type=int, default=1)

    check = sub.add_parser("check-mixability", help="sample-based mixability check")
    _add_entropy_args(check)
    _add_loss_args(check)
    check.add_argument("--experts", type=int, default=None, help="fixed expert count (default: 2-4 at random)")
    check.add_argument("--samples", type=int, default=200)
    check.add_argument("--seed", type=int, default=0)

    est = sub.add_parser("estimate-eta", help="bisect for the largest mixable eta")
    _add_entropy_args(est, with_eta=False)
    _add_loss_args(est)
    est.add_argument("--precision", type=float, default=0.05)
    est.add_argument("--samples", type=int, default=200)
    est.add_argument("--seed", type=int, default=0)

    bound = sub.add_parser("bound", help="regret penalty D(delta_theta, prior) per expert")
    _add_entropy_args(bound)
    bound.add_argument("--prior", default="uniform", help="'uniform' or comma-separated weights")
    bound.add_argument("--experts", type=int, default=None)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run":
            payload, code = cmd_run(args.config, args.out, args.seed, args.jobs)
        elif args.command == "check-mixability":
            payload, code = cmd_check_mixability(_entropy(args), _loss(args), args.samples, args.seed, args.experts)
        elif args.command == "estimate-eta":
            payload, code = cmd_estimate_eta(EntropySpec(args.entropy, 1.0, args.q), _loss(args), args.precision,
                                             args.samples, args.seed)
        else:
            payload, code = cmd_bound(_entropy(args), _parse_prior(args.prior, args.experts))
    except (PhimixError, argparse.ArgumentTypeError, ValueError) as exc:
        print(json.dumps({"error": str(exc)}), file=sys.stderr)
        return EXIT_INVALID
    print(json.dumps(payload, indent=2, sort_keys=True))
    return code


if __name__ == "__main__":
    sys.exit(main())
