"""Minimum-norm extrapolation of a BT-limited signal from a noisy segment.

Given samples f_eps(t_i) on [-T, T] with |f_eps - f| <= eps, find the density
q of smallest L2[-T, T] norm with |(Kq)(t_i) - f_eps(t_i)| <= 2 eps at every
sample, then extrapolate with Kq on the whole line.  The quadratic program is
solved by over-relaxed ADMM with residual balancing.  A Tikhonov solution is
provided as a baseline.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .btsignal import KernelDensity, add_noise, random_bt_signal
from .exceptions import MismatchError
from .io import write_csv
from .numerics import SeededRng
from .pswf import PswfBasis, kernel_apply

DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 200_000

__all__ = [
    "ObservationSet",
    "MnsProblem",
    "ExtrapolationResult",
    "ErrorMetrics",
    "SweepCell",
    "SweepReport",
    "observe",
    "default_eval_grid",
    "min_norm_tube",
    "mns_extrapolate",
    "tikhonov_extrapolate",
    "error_metrics",
    "run_cell",
    "epsilon_sweep",
    "trial_rngs",
]


@dataclass(frozen=True, eq=False)
class ObservationSet:
    """Noisy samples on a uniform grid spanning [-T, T]."""

    times: np.ndarray
    values: np.ndarray
    epsilon: float

    def __post_init__(self):
        times = np.asarray(self.times, dtype=np.float64)
        values = np.asarray(self.values, dtype=np.float64)
        if times.ndim != 1 or times.shape != values.shape or times.size < 2:
            raise ValueError("times and values must be equal-length 1-D arrays")
        if not np.isclose(times[0], -times[-1]):
            raise ValueError("observation grid must be symmetric about zero")
        steps = np.diff(times)
        if np.any(steps <= 0) or np.ptp(steps) > 1e-9 * steps.mean():
            raise ValueError("observation grid must be uniform and increasing")
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        object.__setattr__(self, "times", times)
        object.__setattr__(self, "values", values)

    @property
    def t_half(self) -> float:
        return float(self.times[-1])

    @property
    def spacing(self) -> float:
        return float(self.times[1] - self.times[0])

    @classmethod
    def grid(cls, t_half: float, rate: float) -> np.ndarray:
        """rate * 2T + 1 uniform times on [-T, T]."""
        n = int(round(rate * 2 * t_half)) + 1
        return np.linspace(-t_half, t_half, n)


@dataclass(frozen=True)
class MnsProblem:
    basis: PswfBasis
    obs: ObservationSet
    solver_tol: float = DEFAULT_TOL
    max_iters: int = DEFAULT_MAX_ITERS

    @property
    def constraint_slack(self) -> float:
        """Half-width of the residual tube, 2 eps.

        For eps = 0 the tube is empty and exact interpolation is sought; the
        result is still accepted with a residual up to ``solver_tol``.
        """
        return 2.0 * self.obs.epsilon


@dataclass(frozen=True, eq=False)
class ExtrapolationResult:
    density: KernelDensity
    eval_grid: np.ndarray
    extrapolated: np.ndarray
    residual_inf: float
    density_norm: float
    iterations: int
    converged: bool
    info: dict = field(default_factory=dict)


def _check_compatible(basis: PswfBasis, obs: ObservationSet):
    if not np.isclose(obs.t_half, basis.params.t_half, rtol=0, atol=1e-12):
        raise MismatchError("observation interval does not match the basis half-width")


def _kernel_svd(basis: PswfBasis, times):
    # u = sqrt(w) q turns the weighted norm into the Euclidean one
    sw = np.sqrt(basis.rule.weights)
    b = basis.kernel_matrix(times) / sw
    left, sing, right_t = np.linalg.svd(b, full_matrices=False)
    return sw, left, sing, right_t


def _finish(basis, q_values, obs, eval_grid, iterations, converged, info):
    q = KernelDensity(basis.rule, q_values)
    fitted = kernel_apply(basis, q, obs.times)
    eval_grid = np.asarray(eval_grid, dtype=np.float64)
    return ExtrapolationResult(
        density=q,
        eval_grid=eval_grid,
        extrapolated=kernel_apply(basis, q, eval_grid),
        residual_inf=float(np.max(np.abs(fitted - obs.values))),
        density_norm=q.norm,
        iterations=iterations,
        converged=converged,
        info=info,
    )


def min_norm_tube(matrix, f, slack: float, tol: float = DEFAULT_TOL,
                  max_iters: int = DEFAULT_MAX_ITERS, rho: float = 100.0,
                  relaxation: float = 1.6):
    """ADMM for  min ||u||^2  s.t.  |matrix @ u - f| <= slack  (elementwise).

    Splitting: u-step is a ridge solve done in the singular basis of ``matrix``,
    z-step clips to the tube around ``f``.  Over-relaxed, with rho rebalanced
    every 10 iterations when one residual exceeds the other tenfold.  Stops
    when the primal residual (max norm) and dual residual (2-norm) are both
    below ``tol``.  Returns ``(u, iterations, converged)``.
    """
    f = np.asarray(f, dtype=np.float64)
    left, sing, right_t = np.linalg.svd(np.asarray(matrix, dtype=np.float64), full_matrices=False)
    z = f.copy()
    y = np.zeros_like(f)  # scaled dual
    coords = np.zeros_like(sing)
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        coords = (rho * sing / (1.0 + rho * sing * sing)) * (left.T @ (z - y))
        bu = left @ (sing * coords)
        z_old = z
        mix = relaxation * bu + (1.0 - relaxation) * z_old
        z = f + np.clip(mix + y - f, -slack, slack)
        y = y + mix - z
        r_prim = float(np.max(np.abs(bu - z)))
        r_dual = rho * float(np.linalg.norm(sing * (left.T @ (z - z_old))))
        if r_prim < tol and r_dual < tol:
            converged = True
            break
        if it % 10 == 0:
            if r_prim > 10.0 * r_dual:
                rho *= 2.0
                y /= 2.0
            elif r_dual > 10.0 * r_prim:
                rho /= 2.0
                y *= 2.0
    return right_t.T @ coords, it, converged


def mns_extrapolate(problem: MnsProblem, eval_grid, rho: float = 100.0,
                    relaxation: float = 1.6) -> ExtrapolationResult:
    """Minimum-norm density within the 2 eps tube, and its image on ``eval_grid``.

    Works in u = sqrt(w) q so the weighted density norm becomes Euclidean.
    ``converged`` is False if the solver hits ``max_iters`` or the final fit
    leaves the tube by more than ``solver_tol``.
    """
    basis, obs = problem.basis, problem.obs
    _check_compatible(basis, obs)
    slack = problem.constraint_slack
    sw = np.sqrt(basis.rule.weights)
    u, iterations, converged = min_norm_tube(
        basis.kernel_matrix(obs.times) / sw, obs.values, slack, problem.solver_tol,
        problem.max_iters, rho, relaxation)
    res = _finish(basis, u / sw, obs, eval_grid, iterations, converged,
                  {"method": "mns", "slack": slack})
    if res.residual_inf > slack + problem.solver_tol:
        res = ExtrapolationResult(res.density, res.eval_grid, res.extrapolated, res.residual_inf,
                                  res.density_norm, res.iterations, False, res.info)
    return res


def tikhonov_extrapolate(basis: PswfBasis, obs: ObservationSet, mu: float | None, eval_grid,
                         mu_range=(1e-16, 1e4), bisection_steps: int = 80) -> ExtrapolationResult:
    """Minimize h ||A q - f_eps||^2 + mu ||q||^2 (h the grid spacing).

    ``mu=None`` selects mu by the discrepancy principle: the largest mu in
    ``mu_range`` whose RMS residual does not exceed eps, found by bisection in
    log mu.  ``converged`` is False when even the smallest mu misses the target.
    """
    _check_compatible(basis, obs)
    sw, left, sing, right_t = _kernel_svd(basis, obs.times)
    h = obs.spacing
    proj = left.T @ obs.values
    perp = obs.values - left @ proj  # part of the data outside the range of B

    def solve(m):
        return h * sing * proj / (h * sing * sing + m)

    def rms(m):
        fit = sing * solve(m)
        return math.sqrt((np.sum((fit - proj) ** 2) + np.sum(perp ** 2)) / obs.values.size)

    converged = True
    steps = 0
    if mu is None:
        lo, hi = (math.log(m) for m in mu_range)
        target = obs.epsilon
        if rms(math.exp(hi)) <= target:
            mu = math.exp(hi)
        elif rms(math.exp(lo)) > target:
            mu = math.exp(lo)
            converged = False
        else:
            for steps in range(1, bisection_steps + 1):
                mid = 0.5 * (lo + hi)
                if rms(math.exp(mid)) <= target:
                    lo = mid
                else:
                    hi = mid
            mu = math.exp(lo)
    elif mu <= 0:
        raise ValueError("mu must be positive")
    return _finish(basis, (right_t.T @ solve(mu)) / sw, obs, eval_grid, steps, converged,
                   {"method": "tikhonov", "mu": mu})


@dataclass(frozen=True)
class ErrorMetrics:
    max_error: float
    max_error_inside: float
    max_error_outside: float
    rms: float


def error_metrics(f_true, f_tilde, grid, obs_interval) -> ErrorMetrics:
    """Sup and RMS errors over ``grid``, split at the observation interval."""
    f_true = np.asarray(f_true)
    f_tilde = np.asarray(f_tilde)
    grid = np.asarray(grid)
    if not (f_true.shape == f_tilde.shape == grid.shape):
        raise MismatchError("error metrics need samples on one common grid")
    err = np.abs(f_tilde - f_true)
    lo, hi = obs_interval
    inside = (grid >= lo - 1e-12) & (grid <= hi + 1e-12)
    return ErrorMetrics(
        max_error=float(err.max()),
        max_error_inside=float(err[inside].max()) if inside.any() else 0.0,
        max_error_outside=float(err[~inside].max()) if (~inside).any() else 0.0,
        rms=float(np.sqrt(np.mean(err ** 2))),
    )


def default_eval_grid(t_half: float, lo: float | None = None, hi: float | None = None,
                      rate: float = 100.0) -> np.ndarray:
    lo = -3.0 * t_half if lo is None else lo
    hi = 3.0 * t_half if hi is None else hi
    return np.linspace(lo, hi, int(round((hi - lo) * rate)) + 1)


# ---------------------------------------------------------------------------
# Experiments
# ---------------------------------------------------------------------------
def trial_rngs(seed: int, trial: int):
    """(signal rng, noise rng) for one trial.

    The noise generator does not depend on epsilon, so every epsilon of a trial
    sees the same error pattern scaled by epsilon.
    """
    root = SeededRng(seed)
    return root.spawn(trial, 0), root.spawn(trial, 1)


def observe(basis: PswfBasis, q: KernelDensity, rng: SeededRng, epsilon: float, rate: float):
    times = ObservationSet.grid(basis.params.t_half, rate)
    clean = kernel_apply(basis, q, times)
    return ObservationSet(times, add_noise(clean, rng, epsilon), epsilon)


@dataclass(frozen=True)
class SweepCell:
    epsilon: float
    trial: int
    max_error: float
    max_error_inside: float
    max_error_outside: float
    rms: float
    ratio: float
    iterations: int
    converged: bool

    def row(self):
        return [self.epsilon, self.trial, self.max_error, self.max_error_inside,
                self.max_error_outside, self.rms, self.ratio, self.iterations, self.converged]


CELL_COLUMNS = ["epsilon", "trial", "max_error", "max_error_inside", "max_error_outside",
                "rms", "ratio", "iterations", "converged"]


def cell_from(epsilon: float, trial: int, metrics: ErrorMetrics, result: ExtrapolationResult) -> SweepCell:
    ratio = metrics.max_error / epsilon ** (1.0 / 3.0) if epsilon > 0 else math.nan
    return SweepCell(epsilon, trial, metrics.max_error, metrics.max_error_inside,
                     metrics.max_error_outside, metrics.rms, ratio, result.iterations, result.converged)


def run_cell(basis: PswfBasis, seed: int, trial: int, epsilon: float, eval_grid,
             smoothness: float = 0.0, rate: float = 100.0, solver_tol: float = DEFAULT_TOL,
             max_iters: int = DEFAULT_MAX_ITERS):
    """One (epsilon, trial) experiment; returns ``(cell, result, truth, obs)``."""
    sig_rng, noise_rng = trial_rngs(seed, trial)
    q, _ = random_bt_signal(basis, sig_rng, smoothness)
    obs = observe(basis, q, noise_rng, epsilon, rate)
    result = mns_extrapolate(MnsProblem(basis, obs, solver_tol, max_iters), eval_grid)
    truth = kernel_apply(basis, q, result.eval_grid)
    T = basis.params.t_half
    metrics = error_metrics(truth, result.extrapolated, result.eval_grid, (-T, T))
    return cell_from(epsilon, trial, metrics, result), result, truth, obs


def _cell_job(args):
    return run_cell(*args)[0]


@dataclass(frozen=True)
class SweepReport:
    """Per-cell errors of an epsilon sweep; aggregates skip unconverged cells."""

    cells: list

    @property
    def epsilons(self) -> list:
        return list(dict.fromkeys(c.epsilon for c in self.cells))

    @property
    def failed(self) -> int:
        return sum(not c.converged for c in self.cells)

    def _good(self, eps):
        return [c for c in self.cells if c.epsilon == eps and c.converged]

    def mean_ratio(self) -> np.ndarray:
        return np.array([np.mean([c.ratio for c in self._good(e)]) if self._good(e) else np.nan
                         for e in self.epsilons])

    def max_ratio(self) -> np.ndarray:
        return np.array([np.max([c.ratio for c in self._good(e)]) if self._good(e) else np.nan
                         for e in self.epsilons])

    def mean_max_error(self) -> np.ndarray:
        return np.array([np.mean([c.max_error for c in self._good(e)]) if self._good(e) else np.nan
                         for e in self.epsilons])

    def median_ratio(self) -> float:
        """Median over all converged cells."""
        ratios = [c.ratio for c in self.cells if c.converged]
        return float(np.median(ratios)) if ratios else math.nan

    def ratio_bounded(self, factor: float = 2.0) -> bool:
        """max over eps of mean R(eps) <= factor * median over eps of mean R(eps)."""
        means = self.mean_ratio()
        if np.all(np.isnan(means)):
            return False
        return bool(np.nanmax(means) <= factor * np.nanmedian(means))

    def to_csv(self, path, comment: str | None = None):
        return write_csv(path, CELL_COLUMNS, (c.row() for c in self.cells), comment)


def epsilon_sweep(basis: PswfBasis, seed: int, trials: int, epsilons, eval_grid,
                  smoothness: float = 0.0, rate: float = 100.0, solver_tol: float = DEFAULT_TOL,
                  max_iters: int = DEFAULT_MAX_ITERS, workers: int = 1) -> SweepReport:
    """Run every (epsilon, trial) cell; cells are ordered by epsilon, then trial.

    Trial j draws its signal and noise from generators derived from
    ``(seed, j)``, so results do not depend on ``workers``.
    """
    epsilons = [float(e) for e in epsilons]
    if not epsilons or any(e <= 0 for e in epsilons):
        raise ValueError("epsilon grid must be non-empty and positive")
    eval_grid = np.asarray(eval_grid, dtype=np.float64)
    jobs = [(basis, seed, j, e, eval_grid, smoothness, rate, solver_tol, max_iters)
            for e in epsilons for j in range(trials)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            cells = list(pool.map(_cell_job, jobs))
    else:
        cells = [_cell_job(job) for job in jobs]
    return SweepReport(cells)
