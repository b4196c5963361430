"""Command line entry point: ``twostream run|table|compare``.

Exit codes: 0 success, 1 invalid configuration or parameters, 2 runtime failure.
"""
import argparse
import sys
import warnings

from . import kernels
from .config import load_config
from .errors import CFLError, ConfigError, MassDefectWarning, MeshError, ParameterError
from .experiment import compare_runs, run_experiment, run_table

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def build_parser():
    ap = argparse.ArgumentParser(prog="twostream", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (("run", "run snapshots / steady state"),
                           ("table", "compute a mesh-convergence table")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("config", help="YAML experiment file")
        p.add_argument("--seed", type=int, help="override the seed of the file")
        p.add_argument("--out", help="output directory (default: file's output, then $TWOSTREAM_OUT)")
        p.add_argument("--threads", type=int, help="worker threads for the compiled kernels")
    p = sub.add_parser("compare", help="compare rho profiles of two runs")
    p.add_argument("run_a")
    p.add_argument("run_b")
    p.add_argument("--out", help="where to write compare.csv (default: run_a)")
    p.add_argument("--seed", type=int, help=argparse.SUPPRESS)
    p.add_argument("--threads", type=int, help=argparse.SUPPRESS)
    return ap


def set_threads(n):
    if n is None:
        return
    if n < 1:
        raise ConfigError(f"--threads: expected a positive count, got {n}")
    if kernels.BACKEND == "numba":
        import numba

        numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def _main(args):
    set_threads(args.threads)
    if args.command == "compare":
        for label, ia, ib, err in compare_runs(args.run_a, args.run_b, args.out):
            print(f"{label}: I={ia} vs I={ib}  linf_rel_err={err:.3e}")
        return EXIT_OK
    cfg = load_config(args.config)
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("--seed: must be nonnegative")
        cfg.seed = args.seed
    with warnings.catch_warnings():
        warnings.simplefilter("always", MassDefectWarning)
        out = run_experiment(cfg, args.out) if args.command == "run" else run_table(cfg, args.out)
    print(out)
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return _main(args)
    except (ConfigError, ParameterError, CFLError, MeshError) as exc:
        errs = getattr(exc, "errors", [str(exc)])
        for e in errs:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
