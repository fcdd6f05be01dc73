"""``pnp`` command line.

::

    pnp run CONFIG [--threads K] [--out DIR]
    pnp mms-table CONFIG [--threads K] [--out DIR]
    pnp check

Exit status: 0 success, 2 configuration error, 3 solver failure,
4 invariant violation.
"""
import argparse
import logging
import sys
from dataclasses import replace

from .config import MMS_N_LIST, load_config
from .errors import ConfigParseError, ConfigValidationError
from .runner import EXIT_CONFIG, EXIT_INVARIANT, EXIT_OK, run
from .selfcheck import run_checks


def _load(path):
    try:
        return load_config(path)
    except (ConfigParseError, ConfigValidationError) as exc:
        print(f'pnp: error kind={exc.kind} detail="{exc}"', file=sys.stderr)
        return None
    except OSError as exc:
        print(f'pnp: error kind=ConfigIO detail="{exc}"', file=sys.stderr)
        return None


def cmd_run(args):
    config = _load(args.config)
    if config is None:
        return EXIT_CONFIG
    return run(config, out_dir=args.out, threads=args.threads)


def cmd_mms_table(args):
    config = _load(args.config)
    if config is None:
        return EXIT_CONFIG
    if config.mode == "simulate":
        print('pnp: error kind=ValidationError detail="mode: mms-table needs an mms '
              'mode, got simulate"', file=sys.stderr)
        return EXIT_CONFIG
    if config.mode == "mms-single":
        # promote to the full study on the standard grid sequence
        config = replace(config, mode="mms-convergence",
                         grid=replace(config.grid, N=tuple(MMS_N_LIST)),
                         time=replace(config.time, dt=None))
    return run(config, out_dir=args.out, threads=args.threads)


def cmd_check(args):
    results = run_checks(seed=args.seed)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_INVARIANT


def build_parser():
    parser = argparse.ArgumentParser(prog="pnp", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="progress logging")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn, help_ in (("run", cmd_run, "run a configuration"),
                            ("mms-table", cmd_mms_table, "manufactured-solution convergence table")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("config")
        p.add_argument("--threads", type=int, default=None,
                       help="cap on BLAS/OpenMP threads (1 gives bit-identical reruns)")
        p.add_argument("--out", default=None, help="output directory (overrides io.output_dir)")
        p.set_defaults(func=fn)

    p = sub.add_parser("check", help="operator and identity self-tests")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_check)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
