"""Command line entry point: ``cooprs run | compare | oracle-check``.

Exit codes: 0 success, 2 partial infeasibility (or oracle gap exceeded),
1 error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .experiment import (EXIT_ERROR, EXIT_OK, EXIT_PARTIAL, ExperimentConfig, compare_report,
                         load_config, oracle_check, run_experiment, with_seed)

log = logging.getLogger("cooprs")


def _config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    return with_seed(cfg, args.seed)


def _cmd_run(args) -> int:
    cfg = _config(args)
    code = run_experiment(cfg, args.out, args.jobs)
    print(f"wrote {len(cfg.schemes)} region(s) to {args.out}")
    return code


def _cmd_compare(args) -> int:
    text = compare_report(args.regions, args.tol)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _cmd_oracle(args) -> int:
    cfg = _config(args)
    rows, ok = oracle_check(cfg, count=args.count, delta=args.delta)
    lines = ["seed,theta,wsr_ao,wsr_oracle,gap,passed"]
    lines += [f"{r[0]},{r[1]!r},{r[2]!r},{r[3]!r},{r[4]!r},{int(r[5])}" for r in rows]
    text = "\n".join(lines) + "\n"
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "oracle_check.csv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK if ok else EXIT_PARTIAL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cooprs", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="sweep weights for the configured schemes")
    run.add_argument("--config", help="experiment config file (defaults if omitted)")
    run.add_argument("--out", required=True, help="output directory")
    run.add_argument("--jobs", type=int, default=1, help="worker processes")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.set_defaults(func=_cmd_run)

    cmp_ = sub.add_parser("compare", help="compare region CSV files of one scenario")
    cmp_.add_argument("regions", nargs="+", help="region CSV files")
    cmp_.add_argument("--tol", type=float, default=1e-3, help="dominance tolerance")
    cmp_.add_argument("--out", help="write the report here instead of stdout")
    cmp_.set_defaults(func=_cmd_compare)

    orc = sub.add_parser("oracle-check", help="optimizer vs brute-force grid on n_t=2")
    orc.add_argument("--config", help="config file (snr_db, eps, max_iter, seed are used)")
    orc.add_argument("--out", help="directory for oracle_check.csv")
    orc.add_argument("--count", type=int, default=10, help="number of random scenarios")
    orc.add_argument("--delta", type=float, default=0.05, help="allowed oracle excess")
    orc.add_argument("--jobs", type=int, default=1, help="accepted for symmetry; unused")
    orc.add_argument("--seed", type=int, default=None, help="first scenario seed")
    orc.set_defaults(func=_cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "jobs", 1) < 1:
        print("error: --jobs must be >= 1", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except Exception as exc:  # solver panics and the like
        log.exception("unexpected failure")
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
