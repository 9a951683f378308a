"""Command-line entry point: one subcommand per report."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Optional, Sequence

import juliaspec
from juliaspec.boettcher.green import connectivity_check
from juliaspec.boettcher.identities import distortion_probe, identity_sweep, psi_check_grid
from juliaspec.boettcher.rays import trace_rays
from juliaspec.classify.brjuno import brjuno_data, parse_alpha
from juliaspec.classify.cycles import indifferent_cycles, small_multiplier_scan
from juliaspec.dynamics.polynomial import Polynomial, parse_complex, parse_polynomial
from juliaspec.ergodic.brolin import lyapunov_streams, ruelle_check
from juliaspec.errors import (
    EmptySpectrumError,
    InsufficientDataError,
    JuliaspecError,
    NumericalError,
    ValidationError,
)
from juliaspec.reports.config import RENDER_MODES, RunConfig
from juliaspec.reports.record import (
    RAY_COLUMNS,
    TREE_COLUMNS,
    load_report,
    read_ray_csv,
    report_header,
    spectrum_points,
    write_csv,
    write_report,
)
from juliaspec.reports.render import ImageSpec, overlay, render_julia, render_rays_svg, save_png, to_image
from juliaspec.spectrum.orbits import SOLVERS, MultiplierSpectrum, growth_check, multiplier_spectrum
from juliaspec.tree.pipeline import theorem_pipeline_report
from juliaspec.tree.preimage import build_tree, summability_report

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(levelname)s %(name)s: %(message)s"


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with status 1."""

    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def _polynomial(config: RunConfig) -> Polynomial:
    if not config.poly:
        raise ValidationError("no polynomial given; pass --poly or set 'poly' in the config file")
    c = parse_complex(config.c) if config.c else None
    return parse_polynomial(config.poly, c=c)


def _compute_spectrum(poly: Polynomial, config: RunConfig) -> MultiplierSpectrum:
    return multiplier_spectrum(
        poly,
        config.nmax,
        solver_name=config.solver,
        budget=config.root_budget,
        workers=config.workers,
        sieve_tol=config.sieve_tol,
        indifference_tol=config.indifference_tol,
        escalate=config.escalate,
    )


def _growth_or_none(spectrum: MultiplierSpectrum, epsilon: float):
    try:
        return growth_check(spectrum, epsilon)
    except (InsufficientDataError, EmptySpectrumError) as exc:
        logger.warning("growth check skipped: %s", exc)
        return None


def _write_json(config: RunConfig, poly: Optional[Polynomial], name: str, body: dict, seeds=()) -> Path:
    path = write_report(config.output_path(name), report_header(config, poly, seeds), body)
    logger.info("wrote %s", path)
    return path


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def _run_spectrum(config: RunConfig) -> int:
    poly = _polynomial(config)
    try:
        spectrum = _compute_spectrum(poly, config)
    except NumericalError as exc:
        partial = getattr(exc, "partial_spectrum", None)
        body = {"spectrum": partial, "growth": None, "error": str(exc)}
        _write_json(config, poly, "spectrum.json", body)
        raise
    body = {"spectrum": spectrum, "growth": _growth_or_none(spectrum, config.epsilon)}
    _write_json(config, poly, "spectrum.json", body)
    return 0


def _run_tree(config: RunConfig) -> int:
    poly = _polynomial(config)
    tree = build_tree(
        poly,
        parse_complex(config.w0),
        config.depth,
        budget=config.tree_budget,
        min_green=config.min_green,
    )
    csv_path = config.output_path("tree.csv")
    rows = (
        (level.depth, index, node.parent, node.point.real, node.point.imag, node.log_derivative)
        for level in tree
        for index, node in enumerate(level)
    )
    write_csv(csv_path, TREE_COLUMNS, rows)
    summary = None
    if tree.depth >= 3:
        summary = summability_report(tree.levels, config.ratio_margin, config.raabe_margin)
    else:
        logger.warning("depth %d is too shallow for a summability verdict", tree.depth)
    body = {
        "base_point": tree.base_point,
        "base_green": tree.base_green,
        "depth": tree.depth,
        "summability": summary,
    }
    write_report(csv_path.with_suffix(".json"), report_header(config, poly), body)
    return 0


def _run_ray(config: RunConfig) -> int:
    poly = _polynomial(config)
    rays = trace_rays(
        poly,
        config.angles(),
        s_hi=config.s_hi,
        s_lo=config.s_lo,
        steps=config.steps,
        landing_tol=config.landing_tol,
        workers=config.workers,
    )
    csv_path = config.output_path("rays.csv")
    rows = []
    for ray in rays:
        label = f"{ray.angle.numerator}/{ray.angle.denominator}"
        rows += [(label, s, re, im) for s, re, im in ray.rows()]
        if ray.landing is not None:
            rows.append((label, 0.0, ray.landing.real, ray.landing.imag))
    write_csv(csv_path, RAY_COLUMNS, rows)
    write_report(csv_path.with_suffix(".json"), report_header(config, poly), {"rays": rays})
    return 0


def _run_psi_check(config: RunConfig) -> int:
    poly = _polynomial(config)
    rows, cols = config.grid_shape()
    grid = psi_check_grid(poly, rows=rows, cols=cols)
    identities = identity_sweep(poly, count=config.identity_samples, seed=config.seed)
    distortion = distortion_probe(poly, samples=config.distortion_samples, seed=config.seed)
    body = {
        "functional_equation": grid,
        "derivative_identity": {
            "max_residual": max(r.residual for r in identities),
            "passed": all(r.passed for r in identities),
            "samples": identities,
        },
        "distortion": distortion,
    }
    _write_json(config, poly, "psi_check.json", body, seeds=(config.seed,))
    return 0


def _run_lyapunov(config: RunConfig) -> int:
    poly = _polynomial(config)
    z0 = parse_complex(config.z0 if config.z0 else config.w0)
    seeds = config.stream_seeds()
    estimate = lyapunov_streams(
        poly,
        z0,
        seeds,
        burn=config.burn,
        count=config.samples // len(seeds),
        workers=config.workers,
    )
    body = {"estimate": estimate, "ruelle": ruelle_check(estimate)}
    _write_json(config, poly, "lyapunov.json", body, seeds=seeds)
    return 0


def _run_classify(config: RunConfig) -> int:
    poly = _polynomial(config)
    spectrum = _compute_spectrum(poly, config)
    body = {
        "indifferent_cycles": indifferent_cycles(spectrum),
        "small_multiplier_scan": small_multiplier_scan(poly, spectrum, config.epsilon),
    }
    _write_json(config, poly, "classify.json", body)
    return 0


def _run_brjuno(config: RunConfig) -> int:
    if not config.alpha:
        raise ValidationError("brjuno needs --alpha")
    data = brjuno_data(
        parse_alpha(config.alpha),
        depth=config.brjuno_depth,
        divergence_threshold=config.divergence_threshold,
        tail_tolerance=config.tail_tolerance,
        decay_ratio=config.decay_ratio,
        rational_cap=config.rational_cap,
    )
    _write_json(config, None, "brjuno.json", {"rotation": data})
    return 0


def _image_spec(config: RunConfig) -> ImageSpec:
    return ImageSpec(
        center=parse_complex(config.center),
        width=config.width,
        resolution=config.res,
        max_iter=config.max_iter,
        mode=config.mode,
    )


def _run_render(config: RunConfig) -> int:
    poly = _polynomial(config)
    spec = _image_spec(config)
    rays = read_ray_csv(config.overlay_rays) if config.overlay_rays else {}
    points = spectrum_points(load_report(config.overlay_spectrum)) if config.overlay_spectrum else []
    path = config.output_path("julia.png")
    if path.suffix.lower() == ".svg":
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(render_rays_svg(spec, rays, points) + "\n")
        return 0
    image = to_image(render_julia(poly, spec, workers=config.workers))
    if rays or points:
        image = overlay(image, spec, rays, points)
    save_png(image, path)
    logger.info("wrote %s", path)
    return 0


def _run_pipeline(config: RunConfig) -> int:
    poly = _polynomial(config)
    spectrum = _compute_spectrum(poly, config)
    growth = growth_check(spectrum, config.epsilon)
    tree = build_tree(
        poly,
        parse_complex(config.w0),
        config.depth,
        budget=config.tree_budget,
        min_green=config.min_green,
    )
    report = theorem_pipeline_report(
        spectrum,
        tree,
        config.epsilon,
        growth=growth,
        ratio_margin=config.ratio_margin,
        raabe_margin=config.raabe_margin,
    )
    sums = report.summability.partial_sums
    body = {
        "c_star": growth.best_constant,
        "c2_star": report.best_constant,
        "partial_sum": sums[-1] if sums else None,
        "connectivity": connectivity_check(poly),
        "pipeline": report,
        "spectrum": spectrum,
    }
    _write_json(config, poly, "pipeline.json", body)
    return 0


COMMANDS: dict[str, Callable[[RunConfig], int]] = {
    "spectrum": _run_spectrum,
    "tree": _run_tree,
    "ray": _run_ray,
    "psi-check": _run_psi_check,
    "lyapunov": _run_lyapunov,
    "classify": _run_classify,
    "brjuno": _run_brjuno,
    "render": _run_render,
    "pipeline": _run_pipeline,
}


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _common_options() -> argparse.ArgumentParser:
    common = _Parser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--poly", help='polynomial, e.g. "z^2 - 1", "[-1, 0, 1]" or "z^2 + c; c=0.25"')
    common.add_argument("--c", help="value for a free parameter c, as re,im")
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--out", help="output file")
    common.add_argument("--out-dir", help="output directory when --out is not given")
    common.add_argument("--workers", type=int)
    common.add_argument("--seed", type=int)
    return common


def _spectrum_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--nmax", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--solver", choices=sorted(SOLVERS))
    p.add_argument("--root-budget", type=int)
    p.add_argument("--sieve-tol", type=float)
    p.add_argument("--indifference-tol", type=float)
    p.add_argument("--no-escalate", dest="escalate", action="store_false")


def _tree_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--w0", help="base point outside K, as re,im")
    p.add_argument("--depth", type=int)
    p.add_argument("--tree-budget", type=int)
    p.add_argument("--min-green", type=float)
    p.add_argument("--ratio-margin", type=float)
    p.add_argument("--raabe-margin", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="juliaspec", description="Numerical diagnostics for polynomial Julia sets.")
    parser.add_argument("--version", action="version", version=f"juliaspec {juliaspec.__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="count", default=0)
    verbosity.add_argument("-q", "--quiet", action="store_true")
    common = _common_options()
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name: str, help_text: str) -> argparse.ArgumentParser:
        return sub.add_parser(
            name, help=help_text, parents=[common], argument_default=argparse.SUPPRESS
        )

    _spectrum_options(add("spectrum", "periodic orbits, multipliers and the growth check"))

    _tree_options(add("tree", "backward orbit tree of w0 and the summability of 1/omega_n"))

    p = add("ray", "trace external rays and locate their landing points")
    p.add_argument("--angle", "--theta", dest="theta", help='angles in turns, comma separated, e.g. "1/3,2/3"')
    p.add_argument("--shi", "--s-hi", dest="s_hi", type=float)
    p.add_argument("--slo", "--s-lo", dest="s_lo", type=float)
    p.add_argument("--steps", type=int)
    p.add_argument("--landing-tol", type=float)

    p = add("psi-check", "functional equation, chain-rule identity and distortion of psi")
    p.add_argument("--grid", help="rows x cols, e.g. 16x16")
    p.add_argument("--identity-samples", type=int)
    p.add_argument("--distortion-samples", type=int)

    p = add("lyapunov", "Lyapunov exponent of the balanced measure by inverse iteration")
    p.add_argument("--z0", help="starting point, as re,im")
    p.add_argument("--w0", help="used as the starting point when --z0 is absent")
    p.add_argument("--samples", type=int)
    p.add_argument("--burn", type=int)
    p.add_argument("--streams", type=int)

    _spectrum_options(add("classify", "indifferent cycles and the small-multiplier scan"))

    p = add("brjuno", "continued fraction and Brjuno sums of a rotation number")
    p.add_argument("--alpha", help='e.g. "3/7", "0.1", "(sqrt(5)-1)/2"')
    p.add_argument("--depth", "--brjuno-depth", dest="brjuno_depth", type=int)
    p.add_argument("--divergence-threshold", type=float)
    p.add_argument("--tail-tolerance", type=float)
    p.add_argument("--decay-ratio", type=float)
    p.add_argument("--rational-cap", type=int)

    p = add("render", "PNG of the filled Julia set, or an SVG overlay when --out ends in .svg")
    p.add_argument("--mode", choices=RENDER_MODES)
    p.add_argument("--res", type=int)
    p.add_argument("--center", help="viewport centre, as re,im")
    p.add_argument("--width", type=float)
    p.add_argument("--max-iter", type=int)
    p.add_argument("--overlay-rays", help="ray CSV from the ray command")
    p.add_argument("--overlay-spectrum", help="spectrum or pipeline JSON report")

    p = add("pipeline", "spectrum, growth, tree and summability in one report")
    _spectrum_options(p)
    _tree_options(p)
    return parser


def resolve_config(args: argparse.Namespace) -> RunConfig:
    """Defaults, then the --config file, then explicit flags."""
    flags = {
        k: v
        for k, v in vars(args).items()
        if k not in ("command", "config", "verbose", "quiet")
    }
    base = RunConfig.load(args.config) if getattr(args, "config", None) else RunConfig()
    return RunConfig.from_dict(flags, base)


def _configure_logging(verbose: int, quiet: bool) -> None:
    if quiet:
        level = logging.ERROR
    elif verbose >= 2:
        level = logging.DEBUG
    elif verbose == 1:
        level = logging.INFO
    else:
        level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def run(argv: Sequence[str]) -> int:
    """Parse argv, run one subcommand, return the exit status."""
    parser = build_parser()
    try:
        args = parser.parse_args(list(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    _configure_logging(args.verbose, args.quiet)
    try:
        config = resolve_config(args)
        return COMMANDS[args.command](config)
    except JuliaspecError as exc:
        print(f"juliaspec {args.command}: {exc}", file=sys.stderr)
        return exc.exit_code


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(sys.argv[1:] if argv is None else argv)
