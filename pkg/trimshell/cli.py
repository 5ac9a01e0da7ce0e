"""
Command-line front end.

Usage:
    trimshell run <config>
    trimshell sweep <config> --axis eps --values 1e-1,1e-2,1e-4
    trimshell spectrum <config>
    trimshell convergence <config> --levels 3

Exit codes: 0 on success, 1 on a package error, 2 on any other failure.
"""

import argparse
import logging
import sys
from typing import List, Optional

from . import harness
from .config import load_config
from .errors import TrimShellError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trimshell",
        description="Explicit dynamics of trimmed isogeometric Reissner-Mindlin shells",
    )
    parser.add_argument("-v", "--verbose", action="store_true", help="print progress")
    parser.add_argument("--out", default=None, help="override out.dir")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configuration")
    p_run.add_argument("config")

    p_sweep = sub.add_parser("sweep", help="sweep one parameter over all configured mass kinds")
    p_sweep.add_argument("config")
    p_sweep.add_argument("--axis", required=True, choices=sorted(harness.SWEEP_AXES))
    p_sweep.add_argument("--values", required=True, help="comma-separated values")

    p_spec = sub.add_parser("spectrum", help="spectral report of the four mass kinds")
    p_spec.add_argument("config")

    p_conv = sub.add_parser("convergence", help="dyadic refinement study")
    p_conv.add_argument("config")
    p_conv.add_argument("--levels", type=int, default=3)
    p_conv.add_argument("--static", action="store_true", help="skip the dynamic runs")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Entry point of the ``trimshell`` console script."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        config = load_config(args.config)
        if args.out is not None:
            config = config.replace(out_dir=args.out)

        if args.command == "run":
            outcome = harness.run(config, verbose=args.verbose)
            e = outcome.final_errors
            print(f"✅ {outcome.result.n_steps} steps, dt = {outcome.result.dt:.6e}")
            print(f"📊 L2(u) = {e.l2_u:.6e}, Linf(u) = {e.linf_u:.6e}")
            for path in outcome.files:
                print(f"📁 {path}")
        elif args.command == "sweep":
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            table = harness.sweep(config, args.axis, values, verbose=args.verbose)
            failed = int((table["status"] != "ok").sum())
            print(f"✅ {len(table)} rows, {failed} failed")
        elif args.command == "spectrum":
            table = harness.spectrum(config, verbose=args.verbose)
            print(table.to_string(index=False))
        elif args.command == "convergence":
            table = harness.convergence(
                config, args.levels, dynamic=not args.static, verbose=args.verbose
            )
            print(table.to_string(index=False))
    except TrimShellError as exc:
        print(f"❌ {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001
        print(f"❌ Unexpected failure: {exc!r}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
