"""``scca`` command line: simulate, fit, evaluate, diagnose."""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import __version__
from .errors import InputError, SccaError
from .gibbs import ChainConfig
from .pipeline import diagnose_file, evaluate_dirs, fit_files, fit_replicates, simulate_to_dir

log = logging.getLogger("bscca")


def _setup_logging() -> None:
    level = os.environ.get("SCCA_LOG", "WARNING").upper()
    logging.basicConfig(
        level=getattr(logging, level, logging.WARNING),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="scca", description="Bayesian sparse canonical correlation analysis")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="generate synthetic replicates of a simulation setting")
    s.add_argument("--setting", type=int, required=True, choices=range(1, 8))
    s.add_argument("--replicates", type=int, default=1)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--out", required=True)

    f = sub.add_parser("fit", help="run the Gibbs sampler on a pair of views")
    src = f.add_mutually_exclusive_group(required=True)
    src.add_argument("--view1", help="CSV of view 1 (rows = subjects)")
    src.add_argument("--replicates-dir", help="simulation directory; fits every rep_* inside")
    f.add_argument("--view2", help="CSV of view 2")
    f.add_argument("--model", choices=["ndfsm", "dfsm", "auto"], default="auto")
    f.add_argument("--iters", type=int, default=15000)
    f.add_argument("--burnin", type=int, default=5000)
    f.add_argument("--thin", type=int, default=5)
    f.add_argument("--d", type=int, default=None, help="latent truncation (default min(15, n-1, p1, p2))")
    f.add_argument("--zeta", type=float, default=0.5)
    f.add_argument("--n-cc", type=int, default=2, help="canonical correlations to store")
    f.add_argument("--seed", type=int, default=0)
    f.add_argument("--jobs", type=int, default=1, help="worker processes for --replicates-dir")
    f.add_argument("--no-standardize", action="store_true")
    f.add_argument("--out", required=True)

    e = sub.add_parser("evaluate", help="score fits against a simulation truth")
    e.add_argument("--truth", required=True)
    e.add_argument("--fits", nargs="+", required=True)
    e.add_argument("--out", required=True)

    g = sub.add_parser("diagnose", help="ESS and autocorrelation of stored traces")
    g.add_argument("--draws", required=True)
    g.add_argument("--out", required=True)
    return p


def _run(args) -> None:
    if args.command == "simulate":
        simulate_to_dir(args.setting, args.replicates, args.seed, args.out)
    elif args.command == "fit":
        config = ChainConfig(
            iters=args.iters,
            burnin=args.burnin,
            thin=args.thin,
            d=args.d,
            zeta=args.zeta,
            n_cc=args.n_cc,
            seed=args.seed,
        )
        std = not args.no_standardize
        if args.replicates_dir:
            fit_replicates(args.replicates_dir, args.model, config, args.out, args.jobs, std)
        else:
            if not args.view2:
                raise InputError("--view2 is required with --view1")
            res = fit_files(args.view1, args.view2, args.model, config, args.out, std)
            log.info("model used: %s, rho_hat=%s", res.summary.model_used.value, res.summary.rho_hat)
    elif args.command == "evaluate":
        evaluate_dirs(args.truth, args.fits, args.out)
    elif args.command == "diagnose":
        report = diagnose_file(args.draws, args.out)
        for msg in report["warnings"]:
            print(f"warning: {msg}", file=sys.stderr)


def main(argv=None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    try:
        _run(args)
    except SccaError as exc:
        msg = " ".join(str(exc).split())
        print(f"error[{exc.code}]: {msg}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error[E_IO]: {' '.join(str(exc).split())}", file=sys.stderr)
        return 4
    return 0


if __name__ == "__main__":
    sys.exit(main())
