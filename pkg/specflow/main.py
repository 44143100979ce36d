"""
Command line entry point.

    python app.py dist S.json T.json --norm p2
    python app.py tracks path.json --out out/
    python app.py flow path.json --theta 0.1:6.2:64
    python app.py verify --suite bhatia-sinha --count 1000
    python app.py gen --recipe random_loop --dim 4 --steps 256 --out loop.json
    python app.py plot path.json --theta 1.0:5.0:3

Data goes to stdout, diagnostics to stderr.
"""

import argparse
import logging
import os
import sys
from typing import List, Optional

import numpy as np
from dotenv import load_dotenv

from .config import settings
from .exceptions import ParameterError, SpecflowError
from .services import io
from .services.campaigns import CampaignRunner
from .services.enumeration import enumerate_path, validate_tracks
from .services.multisets import optimal_matching
from .services.plotting import plot_tracks
from .services.spectra import OperatorModel, PathRecipe, branch_point_family, generate_path, haar_unitary
from .services.spectral_flow import FlowEvaluator, parse_theta_grid
from .services.symmetric_norms import parse_norm

load_dotenv()

logger = logging.getLogger("specflow")


def _log_level() -> str:
    return "DEBUG" if settings.DEBUG else settings.LOG_LEVEL


def _fmt(value: float, digits: int) -> str:
    return f"{value:.{digits}g}"


def _out_path(args, name: str) -> str:
    return os.path.join(args.out or settings.OUTPUT_DIR, name)


# ==================== COMMANDS ====================

def cmd_dist(args) -> int:
    S = io.read_multiset(args.first)
    T = io.read_multiset(args.second)
    matching = optimal_matching(S, T, parse_norm(args.norm), tie_break=True)
    print(_fmt(matching.value, args.digits))
    for (i, j), cost in zip(matching.pairs, matching.costs):
        print(f"{i} {j} {_fmt(float(cost), args.digits)}")
    return 0


def cmd_tracks(args) -> int:
    samples, params, _ = io.read_path_samples(args.path)
    spec = parse_norm(args.norm)
    ts = enumerate_path(samples, params, spec)
    report = validate_tracks(ts, samples, spec)
    io.write_tracks_csv(ts, _out_path(args, "tracks.csv"), args.digits)
    io.write_tracks_json(ts, _out_path(args, "tracks.json"))
    inadequate = [step.index for step in ts.steps if not step.adequate]
    print(f"tracks={len(ts.tracks)} samples={ts.size} "
          f"max_reconstruction={_fmt(float(report.reconstruction.max()), args.digits)} "
          f"inadequate_steps={len(inadequate)}")
    for failure in report.failures:
        logger.error(failure)
    return 0 if report.ok else 1


def cmd_flow(args) -> int:
    samples, params, _ = io.read_path_samples(args.path)
    spec = parse_norm(args.norm)
    thetas = parse_theta_grid(args.theta)
    result = FlowEvaluator(spec).evaluate(samples, params, thetas)
    io.write_flow_csv(result, _out_path(args, "flow.csv"), args.digits)
    io.write_flow_diagnostics(result, _out_path(args, "flow_diagnostics.json"))
    ts = enumerate_path(samples, params, spec)
    plot_tracks(ts, _out_path(args, "tracks.svg"), thetas=thetas)
    sys.stdout.write(result.to_frame().to_csv(index=False, float_format=f"%.{args.digits}g"))
    return 0


def cmd_verify(args) -> int:
    runner = CampaignRunner(seed=args.seed, steps=args.steps)
    reports = runner.run_suites(args.suite, args.count)
    failed = False
    for report in reports:
        print(report.summary())
        for failure in report.failures[:20]:
            print(f"  {failure}")
        failed = failed or not report.passed
    stats = runner.get_statistics()
    logger.info(f"Ran {stats['instances']} instances, {stats['failures']} failure(s)")
    return 1 if failed else 0


def _diag_generator(text: Optional[str], dim: int) -> np.ndarray:
    if not text:
        values = np.zeros(dim)
        values[0] = 1.0
    else:
        values = np.array([float(x) for x in text.split(",")])
        if values.size != dim:
            raise ParameterError(f"--diag has {values.size} entries for dimension {dim}")
    return np.diag(values).astype(np.complex128)


def cmd_gen(args) -> int:
    out = args.out or _out_path(args, f"{args.recipe}.json")
    if args.recipe == "branch_point":
        samples, params = branch_point_family(args.steps, omega=args.omega)
        io.write_multiset_path(samples, params, out)
        print(out)
        return 0
    model = OperatorModel.unitary_identity(args.dim)
    if args.recipe == "exp_loop":
        recipe = PathRecipe.exp_loop(_diag_generator(args.diag, args.dim))
    elif args.recipe == "random_loop":
        recipe = PathRecipe.random_loop(args.seed, args.amplitude)
    else:
        rng = np.random.default_rng(args.seed)
        recipe = PathRecipe.segment(haar_unitary(args.dim, rng), haar_unitary(args.dim, rng))
    path = generate_path(recipe, model, args.steps)
    io.write_operator_path(path, out)
    print(out)
    return 0


def cmd_plot(args) -> int:
    samples, params, _ = io.read_path_samples(args.path)
    ts = enumerate_path(samples, params, parse_norm(args.norm))
    thetas = parse_theta_grid(args.theta) if args.theta else None
    out = plot_tracks(ts, _out_path(args, "tracks.svg"), thetas=thetas)
    print(out)
    return 0


COMMANDS = {
    "dist": cmd_dist,
    "tracks": cmd_tracks,
    "flow": cmd_flow,
    "verify": cmd_verify,
    "gen": cmd_gen,
    "plot": cmd_plot,
}


# ==================== PARSER ====================

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--norm", default=settings.DEFAULT_NORM, help="p1, p2, p1.5, pinf or kyfan<k>")
    common.add_argument("--out", default=None, help="output directory (file for gen)")
    common.add_argument("--tol", type=float, default=None, help="override the basepoint tolerance")
    common.add_argument("--digits", type=int, default=settings.SIG_DIGITS, help="significant digits")
    common.add_argument("--seed", type=int, default=settings.DEFAULT_SEED)
    common.add_argument("--steps", type=int, default=settings.DEFAULT_STEPS)

    parser = argparse.ArgumentParser(prog=settings.APP_NAME, description="Phi-distances, eigenvalue tracks and spectral flow")
    parser.add_argument("--version", action="version", version=f"{settings.APP_NAME} {settings.APP_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dist", parents=[common], help="d_Phi between two multiset files")
    p.add_argument("first")
    p.add_argument("second")

    p = sub.add_parser("tracks", parents=[common], help="continuous enumeration of a path file")
    p.add_argument("path")

    p = sub.add_parser("flow", parents=[common], help="spectral flow over a theta grid")
    p.add_argument("path")
    p.add_argument("--theta", default=settings.DEFAULT_THETA_GRID, help="a:b:n")

    p = sub.add_parser("verify", parents=[common], help="seeded verification campaigns")
    p.add_argument("--suite", default="all")
    p.add_argument("--count", type=int, default=100)

    p = sub.add_parser("gen", parents=[common], help="generate a path file")
    p.add_argument("--recipe", choices=["exp_loop", "random_loop", "segment", "branch_point"], default="random_loop")
    p.add_argument("--dim", type=int, default=4)
    p.add_argument("--diag", default=None, help="integer diagonal of the exp_loop generator, e.g. 1,0,0,0")
    p.add_argument("--amplitude", type=float, default=0.3)
    p.add_argument("--omega", type=float, default=3.0)

    p = sub.add_parser("plot", parents=[common], help="SVG of the tracks of a path file")
    p.add_argument("path")
    p.add_argument("--theta", default=None, help="a:b:n rays to draw")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=_log_level(), stream=sys.stderr,
                        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    base_tol = settings.TOL_BASE
    try:
        if args.tol is not None:
            if not args.tol >= np.finfo(float).eps:
                raise ParameterError(f"--tol must be at least machine epsilon, got {args.tol}")
            settings.TOL_BASE = args.tol
        logger.info(f"Running {args.command}")
        code = COMMANDS[args.command](args)
        logger.info(f"{args.command} finished with exit code {code}")
        return code
    except SpecflowError as e:
        logger.error(f"{type(e).__name__}: {e.message}")
        return e.exit_code
    finally:
        settings.TOL_BASE = base_tol


if __name__ == "__main__":
    sys.exit(main())
