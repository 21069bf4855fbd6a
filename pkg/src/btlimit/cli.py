"""Command-line experiment harness.

    btlimit basis|extrapolate|sweep|multiband [--config FILE] [--seed N]
            [--epsilon X] [--out DIR] ...

Exit codes: 0 success, 2 usage error, 3 solver failure, 4 numerical
resolution failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .btsignal import BandSpec, random_bt_signal, save_density, save_signal, spectral_support_check, synth_multiband, unit_components
from .config import ExperimentConfig, load_config
from .exceptions import ConvergenceError, ResolutionError
from .extrapolate import CELL_COLUMNS, default_eval_grid, epsilon_sweep, run_cell, trial_rngs
from .io import write_columns, write_csv
from .pswf import BandParams, build_basis, kernel_apply, save_basis

EXIT_OK, EXIT_USAGE, EXIT_SOLVER, EXIT_RESOLUTION = 0, 2, 3, 4

log = logging.getLogger("btlimit")


class UsageError(Exception):
    pass


def _basis(cfg: ExperimentConfig):
    return build_basis(BandParams(cfg.omega, cfg.t_half), cfg.basis_count, cfg.resolution)


def _eval_grid(cfg: ExperimentConfig):
    lo, hi = cfg.eval_range
    return default_eval_grid(cfg.t_half, lo, hi, cfg.eval_rate)


def _figures(cfg):
    if not cfg.figures:
        return None
    from . import plotting

    return plotting


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------
def cmd_basis(cfg: ExperimentConfig, out: Path) -> int:
    basis = build_basis(BandParams(cfg.omega, cfg.t_half), cfg.basis_count, cfg.resolution,
                        check_resolution=True)
    paths = save_basis(basis, out, cfg.comment())
    print(f"c = omega * T = {basis.params.c:.6g}, N = {basis.resolution}")
    print(f"{'k':>3}  {'lambda_k':>22}")
    for k, lam in enumerate(basis.eigenvalues):
        print(f"{k:>3}  {lam:>22.15e}")
    plotting = _figures(cfg)
    if plotting:
        t = np.linspace(-3 * cfg.t_half, 3 * cfg.t_half, 601)
        plotting.plot_basis(t, basis.phi(t)[: min(basis.count, 6)], out / "basis_phi.svg")
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def cmd_extrapolate(cfg: ExperimentConfig, out: Path) -> int:
    basis = _basis(cfg)
    eps = cfg.epsilon
    cell, result, truth, obs = run_cell(basis, cfg.seed, 0, eps, _eval_grid(cfg), cfg.smoothness,
                                        cfg.sample_rate, cfg.solver_tol, cfg.max_iters)
    tag = f"extrapolate_eps{eps:g}"
    comment = cfg.comment()
    clean = _clean_segment(basis, cfg, obs)
    write_columns(out / f"{tag}_observed.csv",
                  {"t": obs.times, "true": clean, "noisy": obs.values}, comment)
    write_columns(out / f"{tag}_extrapolated.csv",
                  {"t": result.eval_grid, "true": truth, "extrapolated": result.extrapolated}, comment)
    write_csv(out / f"{tag}_metrics.csv", CELL_COLUMNS, [cell.row()], comment)
    save_density(out / f"{tag}_density.csv", result.density,
                 {"omega": cfg.omega, "t_half": cfg.t_half, "seed": cfg.seed, "epsilon": eps,
                  "smoothness": cfg.smoothness, "normalization": "max |f| = 1 on 201 points of [-T, T]",
                  "kind": "minimum-norm density"}, comment)
    plotting = _figures(cfg)
    if plotting:
        plotting.plot_observation(obs.times, clean, obs.values, out / f"{tag}_a.svg", eps)
        plotting.plot_extrapolation(result.eval_grid, truth, result.extrapolated, out / f"{tag}_b.svg",
                                    cfg.t_half)
    print(f"epsilon = {eps:g}  seed = {cfg.seed}  iterations = {cell.iterations}  "
          f"converged = {cell.converged}")
    print(f"max error = {cell.max_error:.6e} (inside {cell.max_error_inside:.6e}, "
          f"outside {cell.max_error_outside:.6e}), rms = {cell.rms:.6e}")
    if eps > 0:
        print(f"R(eps) = max error / eps^(1/3) = {cell.ratio:.6f}")
    if not cell.converged:
        print("solver did not converge", file=sys.stderr)
        return EXIT_SOLVER
    return EXIT_OK


def _clean_segment(basis, cfg, obs):
    # regenerate the trial-0 truth density; same RNG stream as run_cell
    sig_rng, _ = trial_rngs(cfg.seed, 0)
    q, _ = random_bt_signal(basis, sig_rng, cfg.smoothness)
    return kernel_apply(basis, q, obs.times)


def cmd_sweep(cfg: ExperimentConfig, out: Path) -> int:
    if len(cfg.epsilons) < 2:
        raise UsageError("sweep needs at least two epsilons")
    basis = _basis(cfg)
    report = epsilon_sweep(basis, cfg.seed, cfg.trials, cfg.epsilons, _eval_grid(cfg), cfg.smoothness,
                           cfg.sample_rate, cfg.solver_tol, cfg.max_iters, cfg.workers)
    comment = cfg.comment()
    report.to_csv(out / "sweep.csv", comment)
    eps = report.epsilons
    mean_err, mean_r, max_r = report.mean_max_error(), report.mean_ratio(), report.max_ratio()
    counts = [sum(c.converged for c in report.cells if c.epsilon == e) for e in eps]
    write_csv(out / "sweep_summary.csv",
              ["epsilon", "mean_max_error", "mean_ratio", "max_ratio", "converged_trials"],
              zip(eps, mean_err, mean_r, max_r, counts), comment)
    plotting = _figures(cfg)
    if plotting:
        plotting.plot_sweep(eps, mean_err, mean_r, out / "sweep.svg")

    print(f"{'epsilon':>10}  {'mean max err':>13}  {'mean R':>9}  {'max R':>9}  ok")
    for row in zip(eps, mean_err, mean_r, max_r, counts):
        print(f"{row[0]:>10.4g}  {row[1]:>13.6e}  {row[2]:>9.5f}  {row[3]:>9.5f}  {row[4]}/{cfg.trials}")
    bounded = report.ratio_bounded(2.0)
    print(f"R(eps) bounded (max mean R <= 2 x median mean R): {'pass' if bounded else 'fail'}")
    total = len(report.cells)
    if report.failed:
        print(f"{report.failed}/{total} cells did not converge", file=sys.stderr)
    if report.failed > 0.1 * total:
        return EXIT_SOLVER
    return EXIT_OK


def cmd_multiband(cfg: ExperimentConfig, out: Path) -> int:
    if not cfg.bands:
        raise UsageError("multiband needs at least one band")
    try:
        bands = [BandSpec(*map(float, b)) for b in cfg.bands]
    except (TypeError, ValueError) as exc:
        raise UsageError(f"bad band list: {exc}") from exc
    for i, a in enumerate(bands):
        for b in bands[i + 1:]:
            if a.overlaps(b):
                log.warning("bands [%g, %g] and [%g, %g] overlap", a.freq_lo, a.freq_hi, b.freq_lo, b.freq_hi)
    try:
        comps = unit_components(bands, cfg.alphas)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    dt = 1.0 / cfg.spectral_rate
    n = int(round(cfg.spectral_half_span * cfg.spectral_rate))
    t = np.arange(-n, n + 1) * dt
    samples = synth_multiband(comps, t)
    report = spectral_support_check(samples, dt, bands)

    comment = cfg.comment()
    rows = [[i, b.freq_lo, b.freq_hi, frac] for i, (b, frac) in enumerate(zip(bands, report.band_fractions))]
    rows.append(["outside", "", "", report.outside_fraction])
    write_csv(out / "multiband_energy.csv", ["band", "freq_lo", "freq_hi", "fraction"], rows, comment)
    save_signal(out / "multiband_signal.csv", t, samples,
                {"bands": [list(b) for b in cfg.bands], "alphas": cfg.alphas, "density": "unit",
                 "rate": cfg.spectral_rate, "half_span": cfg.spectral_half_span}, comment)
    plotting = _figures(cfg)
    if plotting:
        plotting.plot_spectrum(report.frequencies, report.power, [(b.freq_lo, b.freq_hi) for b in bands],
                               out / "multiband_spectrum.svg")
    if report.degenerate:
        print("zero signal: all fractions reported as 0")
    for b, frac in zip(bands, report.band_fractions):
        print(f"band [{b.freq_lo:.4g}, {b.freq_hi:.4g}] rad/s: {frac:.6f}")
    print(f"outside all bands: {report.outside_fraction:.3e}")
    return EXIT_OK


COMMANDS = {
    "basis": cmd_basis,
    "extrapolate": cmd_extrapolate,
    "sweep": cmd_sweep,
    "multiband": cmd_multiband,
}


# ---------------------------------------------------------------------------
# Argument handling
# ---------------------------------------------------------------------------
def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _band_list(text):
    if not text.strip():
        return []
    return [_float_list(chunk) for chunk in text.split(";") if chunk.strip()]


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="flat JSON (or TOML on Python 3.11+) config file")
    common.add_argument("--seed", type=int)
    common.add_argument("--epsilon", type=float, help="noise bound for 'extrapolate'")
    common.add_argument("--out", type=Path, help="output directory")
    common.add_argument("--epsilons", type=_float_list, help="comma-separated sweep grid")
    common.add_argument("--trials", type=int)
    common.add_argument("--count", type=int, dest="basis_count", help="retained eigenpairs")
    common.add_argument("--resolution", type=int, help="quadrature nodes on [-T, T]")
    common.add_argument("--smoothness", type=float)
    common.add_argument("--bands", type=_band_list, help="'A,B,a,b;A,B,a,b' for 'multiband'")
    common.add_argument("--solver-tol", type=float, dest="solver_tol", help="splitting solver stopping tolerance")
    common.add_argument("--workers", type=int)
    common.add_argument("--no-figures", action="store_true", help="skip SVG output")

    parser = argparse.ArgumentParser(prog="btlimit", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"btlimit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("basis", parents=[common], help="build and export the prolate basis")
    sub.add_parser("extrapolate", parents=[common], help="single noisy-segment extrapolation")
    sub.add_parser("sweep", parents=[common], help="error-law sweep over epsilon and trials")
    sub.add_parser("multiband", parents=[common], help="multiband synthesis and spectral support")
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE

    overrides = {
        "seed": args.seed,
        "epsilon": args.epsilon,
        "epsilons": args.epsilons,
        "trials": args.trials,
        "basis_count": args.basis_count,
        "resolution": args.resolution,
        "smoothness": args.smoothness,
        "bands": args.bands,
        "workers": args.workers,
        "solver_tol": args.solver_tol,
        "output_dir": str(args.out) if args.out is not None else None,
        "figures": False if args.no_figures else None,
    }
    try:
        cfg = load_config(args.config, **overrides)
    except (OSError, ValueError) as exc:
        print(f"btlimit: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return COMMANDS[args.command](cfg, out)
    except UsageError as exc:
        print(f"btlimit {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ResolutionError as exc:
        print(f"btlimit {args.command}: {exc}", file=sys.stderr)
        return EXIT_RESOLUTION
    except ConvergenceError as exc:
        print(f"btlimit {args.command}: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def run():
    sys.exit(main())


if __name__ == "__main__":
    run()
