"""Command line entry point: ``ustat-gof {test,size,power,figure1}``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import sys

from . import mc_lab
from .epd_test import EPDTestConfig
from .errors import DataError, DomainError, NumericalError

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_NUMERICAL = 4


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma separated numbers, got {text!r}") from None


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be a 64-bit unsigned integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="ustat-gof",
        description="EPD modified score goodness-of-fit test and Monte Carlo laboratory.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p, lam_default=None, est_required=True):
        p.add_argument("--lambda", dest="lam", type=float, required=lam_default is None,
                       default=lam_default, help="EPD exponent, > 1")
        if est_required:
            p.add_argument("--estimator", choices=["ml", "mom"], required=True)
        p.add_argument("--alpha", type=float, default=0.05)

    def simulation(p, defaults=False):
        p.add_argument("--n", type=int, required=not defaults, default=2000 if defaults else None)
        p.add_argument("--reps", type=int, required=not defaults, default=10_000 if defaults else None)
        p.add_argument("--seed", type=_seed, required=not defaults, default=0 if defaults else None)
        p.add_argument("--workers", type=int, default=1,
                       help="worker processes; results do not depend on it")

    p = sub.add_parser("test", help="test a data file against EPD_lambda")
    p.add_argument("--data", required=True, help="one observation per line")
    common(p)

    p = sub.add_parser("size", help="empirical size under the null")
    common(p)
    simulation(p)
    p.add_argument("--mu0", type=float, default=0.0)
    p.add_argument("--sigma0", type=float, default=1.0)

    p = sub.add_parser("power", help="empirical vs predicted local power (CSV)")
    common(p)
    simulation(p)
    p.add_argument("--delta1", type=_float_list, required=True)
    p.add_argument("--delta2", type=_float_list, required=True)
    p.add_argument("--delta3", type=float, default=0.0, help="location drift mu0 + delta3/sqrt(n)")
    p.add_argument("--delta4", type=float, default=0.0,
                   help="scale drift sigma0 (1 + delta4/sqrt(n))")
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("figure1", help="power curves of both estimators (CSV)")
    p.add_argument("--out", required=True)
    common(p, lam_default=1.5, est_required=False)
    simulation(p, defaults=True)
    p.add_argument("--empirical", action="store_true", help="add simulated power columns")
    return parser


def _pair_grid(d1: list[float], d2: list[float]) -> list[tuple[float, float]]:
    if len(d1) == 1:
        d1 = d1 * len(d2)
    if len(d2) == 1:
        d2 = d2 * len(d1)
    if len(d1) != len(d2) or not d1:
        raise DomainError("--delta1 and --delta2 need equal lengths (or one of length 1)")
    return list(zip(d1, d2))


def _dispatch(args) -> None:
    if args.command == "test":
        cfg = EPDTestConfig(args.lam, args.estimator, args.alpha)
        result = mc_lab.run_data_test(args.data, cfg)
        print(mc_lab.format_test_result(result, cfg))
    elif args.command == "size":
        cfg = mc_lab.MCConfig(
            lam=args.lam, estimator=args.estimator, n=args.n, reps=args.reps, alpha=args.alpha,
            seed=args.seed, mode=mc_lab.Mode.SIZE, mu0=args.mu0, sigma0=args.sigma0,
            workers=args.workers,
        )
        print(mc_lab.report_json(mc_lab.run_size_experiment(cfg)))
    elif args.command == "power":
        cfg = mc_lab.MCConfig(
            lam=args.lam, estimator=args.estimator, n=args.n, reps=args.reps, alpha=args.alpha,
            seed=args.seed, delta_grid=_pair_grid(args.delta1, args.delta2),
            mode=mc_lab.Mode.POWER, nuisance_delta=(args.delta3, args.delta4),
            workers=args.workers,
        )
        rows = mc_lab.report_rows(mc_lab.run_power_experiment(cfg), cfg.estimator)
        if args.out:
            with open(args.out, "w", encoding="utf-8", newline="") as fh:
                mc_lab.write_csv(rows, fh)
        else:
            mc_lab.write_csv(rows, sys.stdout)
    elif args.command == "figure1":
        cfg = mc_lab.MCConfig(
            lam=args.lam, n=args.n, reps=args.reps, alpha=args.alpha, seed=args.seed,
            delta_grid=mc_lab.figure1_grid(), mode=mc_lab.Mode.FIGURE1, workers=args.workers,
        )
        mc_lab.emit_figure1(cfg, args.out, empirical=args.empirical)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _dispatch(args)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except DomainError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
