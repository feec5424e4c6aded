"""Command-line interface: ``pottslab <command> [options]``.

Every command that writes files puts them under ``--out`` together with a
``manifest.json`` recording the command, all arguments, the seed and the
timings.  ``--config manifest.json`` replays a run; flags given on the
command line override the stored values.

Exit codes: 0 success, 1 usage error, 2 degenerate data, 3 the fit or
search did not converge (its report is still written).
"""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from . import io
from .errors import ConvergenceError, DegenerateDataError, PottsError, TauSearchError
from .inference import SteppingConfig, fit_pseudolikelihood, mcmcmle
from .lattice import (BOUNDARIES, PERIODIC, PottsParams, TaperingSpec, exact_distribution,
                      suff_stats)
from .samplers import METHODS, SITE_UPDATES, SWAP_RULES, ChainConfig, draw
from .scenario import ScenarioConfig, builtin_scenarios, generate_scenario
from .tapering import ROUTES, TauSearchConfig, assess, choose_tau, diagnose

EXIT_OK, EXIT_USAGE, EXIT_DEGENERATE, EXIT_NOT_CONVERGED = 0, 1, 2, 3

# per-configuration probabilities are listed by `exact` up to this many states
_MAX_LISTED_STATES = 1 << 12


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _floats(text: str) -> tuple:
    try:
        return tuple(float(v) for v in text.split(",") if v.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> tuple:
    """Return the top-level parser and a dict of its sub-parsers."""
    common = _Parser(add_help=False)
    common.add_argument("--config", help="manifest.json of an earlier run to replay")
    common.add_argument("--out", default=".", help="output directory (default: current)")
    common.add_argument("--seed", type=_seed, default=0, help="master seed (default 0)")
    common.add_argument("--chains", type=int, default=1, help="independent chains run on threads")

    model = _Parser(add_help=False)
    model.add_argument("--model", choices=("classical", "tapered"), default="classical")
    model.add_argument("--tau", type=float, help="common tapering strength for colors 1..K-1")
    model.add_argument("--center", type=_floats,
                       help="tapering center m_1..m_{K-1} (default: observed or M/K)")

    chain = _Parser(add_help=False)
    chain.add_argument("--sample-size", type=int, default=500)
    chain.add_argument("--burn-in", type=int, default=500)
    chain.add_argument("--thinning", type=int, default=1)
    chain.add_argument("--swap-rule", choices=SWAP_RULES, default="metropolis")
    chain.add_argument("--site-update", choices=SITE_UPDATES, default="auto")
    chain.add_argument("--method", choices=METHODS, default="gibbs")

    stepping = _Parser(add_help=False)
    stepping.add_argument("--final-sample-size", type=int, default=1000)
    stepping.add_argument("--check-sample-size", type=int, default=1000)
    stepping.add_argument("--max-iterations", type=int, default=50)
    stepping.add_argument("--approx", choices=("cumulant", "naive"), default="cumulant")
    stepping.add_argument("--margin-anchor", choices=("paper", "mean"), default="paper")

    grid_in = _Parser(add_help=False)
    grid_in.add_argument("--grid", help="input grid CSV")

    lattice = _Parser(add_help=False)
    lattice.add_argument("--width", type=int, default=30)
    lattice.add_argument("--height", type=int, default=30)
    lattice.add_argument("--colors", "-K", type=int, default=4, dest="colors")
    lattice.add_argument("--boundary", choices=BOUNDARIES, default=PERIODIC)
    lattice.add_argument("--beta", type=float, default=0.0)
    lattice.add_argument("--alpha", type=_floats, help="alpha_1..alpha_{K-1} (default zeros)")

    parser = _Parser(prog="pottslab", description="Potts model simulation and fitting.")
    parser.add_argument("--version", action="version", version=f"pottslab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    subs = {}
    subs["sample"] = sub.add_parser(
        "sample", parents=[common, lattice, model, chain],
        help="simulate from the classical or tapered model")
    subs["sample"].add_argument("--keep-grids", action="store_true",
                                help="also dump every retained draw as a grid CSV")
    subs["sample"].add_argument("--bins", type=int, default=30,
                                help="histogram bins over [0, M] for figure data")
    subs["fit"] = sub.add_parser(
        "fit", parents=[common, grid_in, model, chain, stepping],
        help="pseudo-likelihood start, then MCMC-MLE")
    subs["diagnose"] = sub.add_parser(
        "diagnose", parents=[common, grid_in, chain, stepping],
        help="check whether the classical model fits a grid")
    subs["choose-tau"] = sub.add_parser(
        "choose-tau", parents=[common, grid_in, chain, stepping],
        help="search the tapering strength")
    subs["choose-tau"].add_argument("--tau-init", type=float, default=0.002)
    subs["choose-tau"].add_argument("--shrink", type=float, default=0.9)
    subs["choose-tau"].add_argument("--max-steps", type=int, default=30)
    subs["choose-tau"].add_argument("--route", choices=ROUTES, default="auto")
    subs["scenario"] = sub.add_parser(
        "scenario", parents=[common], help="generate a benchmark grid from latent Gaussian fields")
    sc = subs["scenario"]
    sc.add_argument("--preset", type=int, choices=range(1, 7), help="built-in preset 1-6")
    sc.add_argument("--width", type=int, default=30)
    sc.add_argument("--height", type=int, default=30)
    sc.add_argument("--colors", "-K", type=int, default=4, dest="colors")
    sc.add_argument("--mu", type=_floats, help="class means (default zeros)")
    sc.add_argument("--length", type=float, default=1.5)
    sc.add_argument("--exponent", type=float, default=1.5)
    sc.add_argument("--nugget", type=float, default=0.25)
    sc.add_argument("--boundary", choices=BOUNDARIES, default=PERIODIC)
    subs["stats"] = sub.add_parser("stats", parents=[grid_in],
                                   help="print the sufficient statistics of a grid")
    subs["exact"] = sub.add_parser(
        "exact", parents=[common, lattice, model],
        help="exact distribution of the statistics on a tiny lattice")
    subs["exact"].add_argument("--cap", type=int, default=10**7, help="maximum number of states")
    subs["exact"].set_defaults(width=3, height=3, colors=2)
    return parser, subs


# --- helpers ----------------------------------------------------------------


def _params(args) -> PottsParams:
    alpha = args.alpha if args.alpha is not None else (0.0,) * (args.colors - 1)
    if len(alpha) != args.colors - 1:
        raise UsageError(f"--alpha needs {args.colors - 1} values for K={args.colors}")
    return PottsParams(tuple(alpha), args.beta)


def _tapering(args, num_colors: int, default_center) -> Optional[TaperingSpec]:
    if args.model == "classical":
        if args.tau is not None:
            raise UsageError("--tau needs --model tapered")
        return None
    if args.tau is None:
        raise UsageError("--model tapered needs --tau")
    center = args.center if args.center is not None else tuple(default_center)
    if len(center) != num_colors - 1:
        raise UsageError(f"--center needs {num_colors - 1} values")
    return TaperingSpec((args.tau,) * (num_colors - 1), center)


def _chain_config(args, keep_grids=False) -> ChainConfig:
    return ChainConfig(sample_size=args.sample_size, burn_in=args.burn_in,
                       thinning=args.thinning, seed=args.seed, keep_grids=keep_grids,
                       swap_rule=args.swap_rule, chains=args.chains,
                       site_update=args.site_update)


def _stepping_config(args) -> SteppingConfig:
    return SteppingConfig(sample_size=args.sample_size, burn_in=args.burn_in,
                          thinning=args.thinning, final_sample_size=args.final_sample_size,
                          check_sample_size=args.check_sample_size,
                          max_iterations=args.max_iterations, approx=args.approx,
                          margin_anchor=args.margin_anchor, method=args.method,
                          swap_rule=args.swap_rule, site_update=args.site_update,
                          chains=args.chains, seed=args.seed)


def _read_input_grid(args):
    if not args.grid:
        raise UsageError("--grid is required")
    return io.read_grid(args.grid)


def _outdir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _manifest_args(args) -> dict:
    return {k: v for k, v in vars(args).items() if k not in ("config", "out", "command")}


def _write_manifest(args, out: Path, outputs: list, timings: dict, status: int) -> None:
    io.write_json(out / "manifest.json", {
        "command": args.command, "args": _manifest_args(args), "seed": args.seed,
        "version": __version__, "exit_code": status,
        "outputs": sorted(str(Path(p).relative_to(out)) for p in outputs),
        "timings": timings})


# --- commands ---------------------------------------------------------------


def cmd_sample(args):
    params = _params(args)
    m = args.width * args.height
    tapering = _tapering(args, args.colors, [m / args.colors] * (args.colors - 1))
    config = _chain_config(args, keep_grids=args.keep_grids)
    start = time.perf_counter()
    batch = draw(args.width, args.height, args.colors, params, config, tapering=tapering,
                 method=args.method, boundary=args.boundary)
    elapsed = time.perf_counter() - start
    out = _outdir(args)
    outputs = [io.write_batch_csv(out / "stats.csv", batch),
               io.write_counts_csv(out / "counts_long.csv", [batch]),
               io.write_histogram_csv(out / "histogram.csv", batch, args.bins)]
    if args.keep_grids:
        outputs += io.write_grid_dumps(out / "grids", batch)
    return EXIT_OK, outputs, {"sampling_seconds": elapsed}


def cmd_fit(args):
    grid = _read_input_grid(args)
    tapering = _tapering(args, grid.num_colors, suff_stats(grid).t[:-1])
    config = _stepping_config(args)
    start = time.perf_counter()
    pl = fit_pseudolikelihood(grid)
    report = mcmcmle(grid, pl.estimates, tapering=tapering, config=config)
    if tapering is None and not report.converged:
        report.diagnosis = diagnose(grid, report.trace, pl_fit=pl).to_dict()
    elapsed = time.perf_counter() - start
    out = _outdir(args)
    payload = report.to_dict(include_timing=False)
    payload["pseudo_likelihood"] = pl.estimates.to_dict()
    path = io.write_json(out / "report.json", payload)
    status = EXIT_OK if report.converged else EXIT_NOT_CONVERGED
    return status, [path], {"fit_seconds": elapsed}


def cmd_diagnose(args):
    grid = _read_input_grid(args)
    start = time.perf_counter()
    pl, fit, diag = assess(grid, _stepping_config(args))
    elapsed = time.perf_counter() - start
    out = _outdir(args)
    path = io.write_json(out / "diagnosis.json", {
        "diagnosis": diag.to_dict(), "pseudo_likelihood": pl.estimates.to_dict(),
        "classical_fit": fit.to_dict(include_timing=False)})
    return EXIT_OK, [path], {"diagnose_seconds": elapsed}


def cmd_choose_tau(args):
    grid = _read_input_grid(args)
    search = TauSearchConfig(args.tau_init, args.shrink, args.max_steps, args.route)
    out = _outdir(args)
    start = time.perf_counter()
    try:
        result = choose_tau(grid, search, _stepping_config(args))
    except TauSearchError as err:
        path = io.write_json(out / "tau_search.json",
                             {"error": str(err), "search": search.to_dict(), "seed": args.seed})
        print(f"pottslab: {err}", file=sys.stderr)
        return EXIT_NOT_CONVERGED, [path], {"search_seconds": time.perf_counter() - start}
    payload = result.to_dict()
    payload["search"] = search.to_dict()
    payload["seed"] = args.seed
    path = io.write_json(out / "tau_search.json", payload)
    return EXIT_OK, [path], {"search_seconds": time.perf_counter() - start}


def _scenario_config(args) -> ScenarioConfig:
    if args.preset is not None:
        return builtin_scenarios(args.seed)[args.preset]
    mu = args.mu if args.mu is not None else (0.0,) * args.colors
    return ScenarioConfig(args.width, args.height, args.colors, mu, args.length,
                          args.exponent, args.nugget, args.seed, args.boundary)


def cmd_scenario(args):
    config = _scenario_config(args)
    start = time.perf_counter()
    grid = generate_scenario(config)
    elapsed = time.perf_counter() - start
    out = _outdir(args)
    outputs = [io.write_grid(out / "grid.csv", grid),
               io.write_json(out / "scenario.json", config.to_dict())]
    return EXIT_OK, outputs, {"generate_seconds": elapsed}


def cmd_stats(args):
    grid = _read_input_grid(args)
    stats = suff_stats(grid)
    sys.stdout.write(io.dumps({"width": grid.width, "height": grid.height,
                               "K": grid.num_colors, "boundary": grid.boundary,
                               **stats.to_dict()}))
    return EXIT_OK, None, {}


def cmd_exact(args):
    params = _params(args)
    m = args.width * args.height
    tapering = _tapering(args, args.colors, [m / args.colors] * (args.colors - 1))
    start = time.perf_counter()
    dist = exact_distribution(args.width, args.height, args.colors, params, tapering,
                              boundary=args.boundary, cap=args.cap)
    payload = {
        "params": params.to_dict(),
        "tapering": None if tapering is None else tapering.to_dict(),
        "log_normalizer": dist.log_normalizer,
        "mean_t": dist.mean_t, "mean_s": dist.mean_s,
        "table": [{"t": st.t, "s": st.s, "count": int(round(float(np.exp(lc)))), "prob": p}
                  for (st, p), lc in zip(dist.table(), dist.log_count)],
    }
    if args.colors ** m <= _MAX_LISTED_STATES:
        payload["state_probabilities"] = dist.state_probabilities()
    elapsed = time.perf_counter() - start
    out = _outdir(args)
    path = io.write_json(out / "exact.json", payload)
    print(f"{len(dist.t)} distinct statistic values over {args.colors ** m} states; "
          f"log Z = {dist.log_normalizer:.6f}")
    return EXIT_OK, [path], {"enumeration_seconds": elapsed}


COMMANDS = {"sample": cmd_sample, "fit": cmd_fit, "diagnose": cmd_diagnose,
            "choose-tau": cmd_choose_tau, "scenario": cmd_scenario, "stats": cmd_stats,
            "exact": cmd_exact}


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    """Parse ``argv``, layering a ``--config`` manifest under explicit flags."""
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        try:
            manifest = io.read_json(args.config)
        except (OSError, ValueError) as err:
            parser.error(f"cannot read --config: {err}")
        if manifest.get("command") != args.command:
            parser.error(f"--config was written by {manifest.get('command')!r}, "
                         f"not {args.command!r}")
        stored = dict(manifest.get("args", {}))
        for key, value in stored.items():
            if isinstance(value, list):
                stored[key] = tuple(value)
        subs[args.command].set_defaults(**stored)
        args = parser.parse_args(argv)
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = parse_args(argv)
    start = time.perf_counter()
    try:
        status, outputs, timings = COMMANDS[args.command](args)
    except UsageError as err:
        print(f"pottslab: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except DegenerateDataError as err:
        print(f"pottslab: degenerate data: {err}", file=sys.stderr)
        return EXIT_DEGENERATE
    except ConvergenceError as err:
        print(f"pottslab: did not converge: {err}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except (PottsError, ValueError, OSError) as err:
        print(f"pottslab: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    if outputs is not None:
        timings["total_seconds"] = time.perf_counter() - start
        _write_manifest(args, Path(args.out), outputs, timings, status)
    return status


if __name__ == "__main__":
    sys.exit(main())
