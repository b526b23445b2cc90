"""``skewfit simulate|fit|elicit``.

Exit codes: 0 success, 2 usage error, 3 data error.
"""

import argparse
import logging
import sys
import time
from pathlib import Path

from ._validation import DataError
from .distributions import CentralMoments
from .gibbs import GibbsConfig, NigPrior
from .harness import (ESTIMANDS, SCENARIOS, ExperimentSpec, cmd_elicit, cmd_fit, cmd_simulate,
                      read_sample_csv, synthetic_grades_path, write_fig1, write_fit, write_json,
                      write_simstudy)
from .posterior import NormalPrior, SkewNormalPrior
from .sun import DEFAULT_SWEEPS

log = logging.getLogger("skewfit")

EXIT_USAGE = 2
EXIT_DATA = 3


class UsageError(Exception):
    pass


def _int_list(text):
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _add_prior_flags(p, prior_default, psi0_default, lambda0_default):
    p.add_argument("--prior", choices=("normal", "skewnormal"), default=prior_default)
    p.add_argument("--alpha0", type=float, default=0.0)
    p.add_argument("--psi0", type=float, default=psi0_default)
    p.add_argument("--lambda0", type=float, default=lambda0_default)


def _shape_prior(args):
    try:
        if args.prior == "normal":
            return NormalPrior(args.alpha0, args.psi0)
        return SkewNormalPrior(args.alpha0, args.psi0, args.lambda0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def build_parser():
    parser = argparse.ArgumentParser(prog="skewfit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="bias/MSE study of the shape estimate")
    sim.add_argument("--scenario", choices=sorted(SCENARIOS), default="scenario3")
    sim.add_argument("--alpha-true", type=float, default=None,
                     help="override the scenario's true shape")
    sim.add_argument("--n", type=_int_list, default=[10, 50, 100],
                     help="sample sizes, comma separated")
    sim.add_argument("--reps", type=int, default=1000)
    sim.add_argument("--estimand", choices=ESTIMANDS + ("both",), default="both")
    sim.add_argument("--prior", choices=("normal", "skewnormal"), default=None,
                     help="single prior row; default runs the scenario's preset rows")
    sim.add_argument("--alpha0", type=float, default=0.0)
    sim.add_argument("--psi0", type=float, default=1.0)
    sim.add_argument("--lambda0", type=float, default=0.0)
    sim.add_argument("--draws", type=int, default=1000, help="posterior draws per replication")
    sim.add_argument("--sweeps", type=int, default=DEFAULT_SWEEPS)
    sim.add_argument("--workers", type=int, default=None)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", type=Path, default=Path("."))

    fit = sub.add_parser("fit", help="Gibbs fit of (xi, omega, alpha) to a one-column CSV")
    fit.add_argument("csv", nargs="?", default=None,
                     help="data file; defaults to the shipped synthetic grades")
    _add_prior_flags(fit, "skewnormal", 7.0, 20.0)
    fit.add_argument("--xi0", type=float, default=0.0)
    fit.add_argument("--kappa", type=float, default=100.0)
    fit.add_argument("--a", type=float, default=1.0)
    fit.add_argument("--b", type=float, default=1.0)
    fit.add_argument("--iters", type=int, default=12000)
    fit.add_argument("--burnin", type=int, default=2000)
    fit.add_argument("--thin", type=int, default=1)
    fit.add_argument("--sweeps", type=int, default=DEFAULT_SWEEPS)
    fit.add_argument("--seed", type=int, default=0)
    fit.add_argument("--out", type=Path, default=Path("."))

    el = sub.add_parser("elicit", help="hyperparameters from moments and the Pr(alpha<0) curve")
    el.add_argument("--mean", type=float)
    el.add_argument("--sd", type=float)
    el.add_argument("--skew", type=float)
    el.add_argument("--strength", type=float, default=1.0)
    el.add_argument("--alpha0", type=float, default=0.0)
    el.add_argument("--psi0", type=float, default=10.0)
    el.add_argument("--lambda0", type=float, default=None)
    el.add_argument("--seed", type=int, default=0, help="accepted for uniformity; unused")
    el.add_argument("--out", type=Path, default=Path("."))
    return parser


def run_simulate(args):
    true, presets = SCENARIOS[args.scenario]
    if args.alpha_true is not None:
        true = type(true)(true.xi, true.omega, args.alpha_true)
    priors = [_shape_prior(args)] if args.prior else list(presets)
    estimands = ESTIMANDS if args.estimand == "both" else (args.estimand,)
    rows = []
    for prior in priors:
        for estimand in estimands:
            for n in args.n:
                try:
                    spec = ExperimentSpec(true, n, args.reps, estimand, prior, seed=args.seed,
                                          n_draws=args.draws, ltn_sweeps=args.sweeps)
                except ValueError as exc:
                    raise UsageError(str(exc)) from None
                row = cmd_simulate(spec, args.scenario, args.workers)
                log.info("%s %s n=%d bias=%.4f mse=%.4f", row.prior, estimand, n, row.bias, row.mse)
                rows.append(row)
    args.out.mkdir(parents=True, exist_ok=True)
    write_simstudy(args.out / "simstudy.csv", rows)


def run_fit(args):
    if args.csv is None:
        path = synthetic_grades_path()
        y = read_sample_csv(path)
        source = "synthetic_grades.csv"
    else:
        y = read_sample_csv(args.csv)
        source = Path(args.csv).name
    try:
        cfg = GibbsConfig(args.iters, args.burnin, args.seed, args.sweeps, args.thin)
        nig = NigPrior(args.xi0, args.kappa, args.a, args.b)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    report = cmd_fit(y, _shape_prior(args), nig, cfg, source=source)
    args.out.mkdir(parents=True, exist_ok=True)
    write_fit(report, args.out)


def run_elicit(args):
    given = [v is not None for v in (args.mean, args.sd, args.skew)]
    if any(given) and not all(given):
        raise UsageError("--mean, --sd and --skew must be given together")
    try:
        moments = CentralMoments(args.mean, args.sd, args.skew) if all(given) else None
        report, curve = cmd_elicit(moments, args.strength, args.psi0, args.lambda0, args.alpha0)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    args.out.mkdir(parents=True, exist_ok=True)
    write_json(args.out / "elicit.json", report)
    write_fig1(args.out / "fig1.csv", curve)


COMMANDS = {"simulate": run_simulate, "fit": run_fit, "elicit": run_elicit}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s", stream=sys.stderr)
    start = time.perf_counter()
    try:
        COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"skewfit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"skewfit: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    log.info("wall time %.2f s", time.perf_counter() - start)
    return 0


if __name__ == "__main__":
    sys.exit(main())
