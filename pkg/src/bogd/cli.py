"""Command-line entry point.

Subcommands:

    bogd run        --config FILE --out DIR [--seed-override name=int ...]
    bogd replicate  --config FILE --out DIR [--replications N]
                    [--vary randomization|all] [--seed-override name=int ...]
    bogd synthetic  --config FILE --out DIR [--replications N]
    bogd bounds     --n N --step-scale A --grad-l2 L2 --rounds T
                    [--grad-l1 L1] [--block-length T0] [--variation V]

The first three write CSVs plus a manifest into --out; `bounds` prints
name,value rows to stdout.  Exit code is 0 on success and 1 on failure,
with a single `category: message` line on stderr (categories: config,
domain, io).
"""

from __future__ import annotations

import argparse
import sys

from .experiments import (
    ConfigError,
    ReplicationSpec,
    bounds_report,
    run_replications,
    run_scenario,
    run_synthetic,
)
from .regret import BoundInputs, ConvergenceError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bogd",
        description="Binary online gradient descent experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p: argparse.ArgumentParser) -> None:
        p.add_argument("--config", required=True, help="TOML config file")
        p.add_argument("--out", required=True, help="output directory")

    run_p = sub.add_parser("run", help="single scenario run")
    add_io(run_p)
    run_p.add_argument(
        "--seed-override",
        action="append",
        default=[],
        metavar="NAME=INT",
        help="override one seed stream; repeatable",
    )

    rep_p = sub.add_parser("replicate", help="Monte-Carlo replications")
    add_io(rep_p)
    rep_p.add_argument("--replications", type=int, default=None)
    rep_p.add_argument("--vary", choices=("randomization", "all"), default=None)
    rep_p.add_argument(
        "--seed-override", action="append", default=[], metavar="NAME=INT"
    )

    syn_p = sub.add_parser("synthetic", help="small-n drifting-quadratic study")
    add_io(syn_p)
    syn_p.add_argument("--replications", type=int, default=None)

    bounds_p = sub.add_parser("bounds", help="evaluate the closed-form regret bounds")
    bounds_p.add_argument("--n", type=int, required=True)
    bounds_p.add_argument("--step-scale", type=float, required=True)
    bounds_p.add_argument("--grad-l2", type=float, required=True)
    bounds_p.add_argument("--rounds", type=int, required=True)
    bounds_p.add_argument("--grad-l1", type=float, default=0.0)
    bounds_p.add_argument("--block-length", type=int, default=1)
    bounds_p.add_argument("--variation", type=float, default=0.0)
    return parser


def _dispatch(args: argparse.Namespace) -> None:
    if args.command == "run":
        out = run_scenario(args.config, args.out, seed_overrides=args.seed_override)
        print(out)
    elif args.command == "replicate":
        spec = None
        if args.replications is not None or args.vary is not None:
            spec = ReplicationSpec(
                replications=args.replications,
                vary=args.vary if args.vary is not None else "randomization",
            )
        out = run_replications(
            args.config, args.out, spec=spec, seed_overrides=args.seed_override
        )
        print(out)
    elif args.command == "synthetic":
        out = run_synthetic(args.config, args.out, replications=args.replications)
        print(out)
    elif args.command == "bounds":
        inputs = BoundInputs(
            n=args.n,
            step_scale=args.step_scale,
            grad_l2=args.grad_l2,
            rounds=args.rounds,
            grad_l1=args.grad_l1,
            block_length=args.block_length,
            variation=args.variation,
        )
        print("name,value")
        for name, value in bounds_report(inputs):
            print(f"{name},{'%.12g' % value}")
    else:  # pragma: no cover - argparse enforces the choices
        raise ValueError(f"unknown command {args.command!r}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        _dispatch(args)
    except ConfigError as exc:
        print(f"config: {exc}", file=sys.stderr)
        return 1
    except (ValueError, ConvergenceError) as exc:
        print(f"domain: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
