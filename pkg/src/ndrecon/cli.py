"""Command-line entry point: ``ndrecon {exp1,exp2,exp3,exp4,run} [flags]``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .exceptions import NDReconError, NumericalError
from .harness import load_config, parse_lambda, preset_config, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4


def _lambda_arg(text: str) -> complex:
    try:
        return parse_lambda(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ndrecon",
        description="Reconstruct elliptic ND maps from hyperbolic ND maps (1D experiments).",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI file with an [experiment] section")
    common.add_argument("--nx", type=int, help="spatial nodes (overrides --profile)")
    common.add_argument("--t-final", type=float, help="observation time T")
    common.add_argument("--lambda", dest="lambdas", type=_lambda_arg, action="append",
                        metavar="RE[,IM]", help="frequency; repeatable")
    common.add_argument("--alpha", dest="alphas", type=float, action="append", help="regularization; repeatable")
    common.add_argument("--noise", dest="noise_levels", type=float, action="append",
                        help="noise level as a fraction; repeatable")
    common.add_argument("--seed", type=int)
    common.add_argument("--out", metavar="DIR", help="output directory for CSV files")
    common.add_argument("--snapshot", action="store_true", default=None,
                        help="also compute wave snapshots u(T)")
    common.add_argument("--profile", choices=["full", "ci"])
    common.add_argument("--workers", type=int)
    common.add_argument("--cache", metavar="DIR", help="directory for cached hyperbolic maps")
    common.add_argument("--coefficients", help="preset: euclid-q, conformal, eigen-sweep")
    common.add_argument("--c", dest="c_expr", help="wave speed expression in x")
    common.add_argument("--q", dest="q_expr", help="potential expression in x")
    common.add_argument("--closure", choices=["one_sided", "ghost"], help="Neumann closure of the reference solver")
    common.add_argument("-v", "--verbose", action="store_true")

    for name, help_ in [
        ("exp1", "noise study, Euclidean geometry"),
        ("exp2", "regularization sweep"),
        ("exp3", "noise study, variable wave speed"),
        ("exp4", "frequency sweep across Neumann eigenvalues"),
        ("run", "custom job"),
    ]:
        p = sub.add_parser(name, parents=[common], help=help_)
        if name == "exp4":
            p.add_argument("--axis", choices=["real", "imag", "both"], default="both")
    return parser


_OVERRIDES = (
    "nx", "t_final", "lambdas", "alphas", "noise_levels", "seed", "out", "snapshot",
    "profile", "workers", "cache", "coefficients", "c_expr", "q_expr", "closure",
)
_ATTR = {"nx": "n_x", "out": "out_dir", "cache": "cache_dir"}


def config_from_args(args):
    preset = args.command
    if preset == "exp4" and args.axis != "both":
        preset = f"exp4-{args.axis}"
    cfg = preset_config(preset)
    if args.config:
        cfg = load_config(args.config, base=cfg)
    for key in _OVERRIDES:
        value = getattr(args, key)
        if value is not None:
            setattr(cfg, _ATTR.get(key, key), value)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        report = run_experiment(cfg)
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except NDReconError as exc:
        # everything else traces back to the inputs: grid, coefficients, flags
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    for row in report.rows:
        snap = "" if row.snapshot_rel_err is None else f"  snapshot {row.snapshot_rel_err:.4%}"
        print(f"lambda={row.lam:g} alpha={row.alpha:.0e} noise={row.noise:.3g}  "
              f"rel_frob {row.rel_frob_err:.4%}{snap}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
