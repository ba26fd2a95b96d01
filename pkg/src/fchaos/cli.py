"""Command line front end for the named experiments.

Only standard-library modules load at import time; the numeric stack is
pulled in inside :func:`main` after the --threads cap has been written
to the BLAS environment variables, which must happen before numpy first
loads its backend.

Exit status: 0 when every ``pass_`` check in the report is true, 2 when
any check fails (the report still prints, so the numbers behind the
failure are visible), 1 for usage errors such as an unknown experiment,
an option the experiment does not accept, or CSV output for an
experiment that produces no trace table.
"""

import argparse
import os
import sys

_THREAD_ENV_VARS = (
    "OMP_NUM_THREADS",
    "OPENBLAS_NUM_THREADS",
    "MKL_NUM_THREADS",
    "VECLIB_MAXIMUM_THREADS",
    "NUMEXPR_NUM_THREADS",
)

# forwarded to run_experiment when present; each experiment validates its own
_OPTION_KEYS = ("seed", "tol", "T", "N", "order", "kind", "k_max", "d", "trials")


class _Parser(argparse.ArgumentParser):
    """argparse exits with 2 on bad usage; the report contract reserves
    2 for failed checks, so usage errors are remapped to 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def build_parser():
    parser = _Parser(
        prog="fchaos",
        description="Run a named chaos-calculus experiment and emit its report.",
    )
    parser.add_argument(
        "--experiment",
        required=True,
        metavar="NAME",
        help="registered experiment name (try an invalid one to see the list)",
    )
    parser.add_argument("--out", metavar="PATH", help="also write the report here")
    parser.add_argument(
        "--format",
        choices=("json", "csv"),
        default="json",
        help="csv renders the trace table and needs a sequence experiment",
    )
    parser.add_argument("--seed", type=int, help="base seed for random inputs")
    parser.add_argument(
        "--threads",
        type=int,
        metavar="K",
        help="cap BLAS worker threads (set before the numeric stack loads)",
    )
    parser.add_argument("--tol", type=float, help="tolerance override")
    parser.add_argument("--T", type=float, help="time horizon")
    parser.add_argument("--N", type=int, help="grid cells")
    parser.add_argument("--order", type=int, help="kernel order")
    parser.add_argument("--kind", choices=("wigner", "free_poisson"))
    parser.add_argument("--k-max", type=int, dest="k_max", help="highest moment")
    parser.add_argument("--d", type=int, help="matrix dimension")
    parser.add_argument("--trials", type=int, help="Monte Carlo trials")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.threads is not None:
        if args.threads < 1:
            parser.error("--threads must be positive")
        for var in _THREAD_ENV_VARS:
            os.environ[var] = str(args.threads)

    from ._guard import TensorBudgetError
    from .experiments import UnknownExperimentError, run_experiment
    from .reports import failed_checks, render_csv, render_json

    options = {k: getattr(args, k) for k in _OPTION_KEYS if getattr(args, k) is not None}
    try:
        report = run_experiment(args.experiment, **options)
    except UnknownExperimentError as err:
        parser.error(str(err))
    except TensorBudgetError as err:
        parser.error(str(err))
    except ValueError as err:
        parser.error(str(err))
    try:
        text = render_json(report) if args.format == "json" else render_csv(report)
    except ValueError as err:
        parser.error(str(err))
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)
    bad = failed_checks(report)
    if bad:
        print("failed checks: " + ", ".join(bad), file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
