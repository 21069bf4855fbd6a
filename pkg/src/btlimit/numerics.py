"""Low-level numerical kernels: Gauss-Legendre quadrature, a symmetric
eigensolver and a portable seeded random number generator.

Everything here is 64-bit floating point.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConvergenceError

__all__ = [
    "QuadratureRule",
    "gauss_legendre_rule",
    "composite_rule",
    "SymmetricEigenResult",
    "sym_eig",
    "SeededRng",
    "uniform",
]


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and positive weights for integrals over ``[interval_lo, interval_hi]``."""

    interval_lo: float
    interval_hi: float
    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        if nodes.shape != weights.shape or nodes.ndim != 1:
            raise ValueError("nodes and weights must be 1-D arrays of equal length")
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    def __len__(self):
        return self.nodes.size

    @property
    def length(self) -> float:
        return self.interval_hi - self.interval_lo

    def integrate(self, values) -> float:
        """Weighted sum of ``values`` sampled at the nodes (last axis)."""
        return np.asarray(values) @ self.weights

    def same_as(self, other: "QuadratureRule") -> bool:
        if self is other:
            return True
        return (
            self.interval_lo == other.interval_lo
            and self.interval_hi == other.interval_hi
            and np.array_equal(self.nodes, other.nodes)
            and np.array_equal(self.weights, other.weights)
        )


def _legendre_and_derivative(n, x):
    # three-term recurrence; returns P_n(x), P_n'(x)
    p0 = np.ones_like(x)
    p1 = x.copy()
    if n == 0:
        return p0, np.zeros_like(x)
    for k in range(2, n + 1):
        p0, p1 = p1, ((2 * k - 1) * x * p1 - (k - 1) * p0) / k
    dp = n * (x * p1 - p0) / (x * x - 1.0)
    return p1, dp


def gauss_legendre_rule(n: int, lo: float = -1.0, hi: float = 1.0) -> QuadratureRule:
    """n-point Gauss-Legendre rule on ``[lo, hi]``.

    Roots of P_n are found by Newton iteration from the Tricomi initial guess
    and symmetrized, so that the rule on a symmetric interval is exactly
    symmetric.
    """
    n = int(n)
    if n < 1:
        raise ValueError("number of nodes must be >= 1")
    if not lo < hi:
        raise ValueError("need lo < hi")

    m = (n + 1) // 2  # non-negative roots only, mirrored afterwards
    i = np.arange(1, m + 1)
    x = np.cos(np.pi * (i - 0.25) / (n + 0.5))
    for _ in range(100):
        p, dp = _legendre_and_derivative(n, x)
        dx = p / dp
        x = x - dx
        if np.max(np.abs(dx)) < 1e-16:
            break
    else:  # pragma: no cover - Newton on P_n converges in a handful of steps
        raise ConvergenceError("Legendre root iteration did not converge")
    _, dp = _legendre_and_derivative(n, x)
    w = 2.0 / ((1.0 - x * x) * dp * dp)

    if n % 2:
        x[-1] = 0.0  # the middle root is exactly zero for odd n
        nodes = np.concatenate([-x, x[-2::-1]])
        weights = np.concatenate([w, w[-2::-1]])
    else:
        nodes = np.concatenate([-x, x[::-1]])
        weights = np.concatenate([w, w[::-1]])

    half = 0.5 * (hi - lo)
    mid = 0.5 * (hi + lo)
    return QuadratureRule(float(lo), float(hi), mid + half * nodes, half * weights)


def composite_rule(edges, n_per_panel: int) -> QuadratureRule:
    """Concatenate Gauss-Legendre panels between consecutive ``edges``."""
    edges = np.asarray(edges, dtype=np.float64)
    if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
        raise ValueError("edges must be strictly increasing with at least two entries")
    ref = gauss_legendre_rule(n_per_panel)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * ref.nodes[None, :]).ravel()
    weights = (half[:, None] * ref.weights[None, :]).ravel()
    return QuadratureRule(float(edges[0]), float(edges[-1]), nodes, weights)


# ---------------------------------------------------------------------------
# Symmetric eigenproblem
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class SymmetricEigenResult:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def _round_robin(n):
    """Tournament schedule: n-1 rounds of n/2 disjoint index pairs (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        p = np.array(players[: n // 2])
        q = np.array(players[n // 2:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _jacobi(a, tol, max_sweeps):
    n = a.shape[0]
    pad = n % 2
    m = n + pad
    work = np.zeros((m, m))
    work[:n, :n] = a
    v = np.eye(m)
    scale = np.linalg.norm(a)
    if scale == 0.0:
        return np.zeros(n), np.eye(n)
    rounds = _round_robin(m)

    for sweep in range(max_sweeps):
        off = work - np.diag(np.diag(work))
        if np.linalg.norm(off) <= tol * scale:
            break
        for p, q in rounds:
            apq = work[p, q]
            active = np.abs(apq) > 1e-300
            if not np.any(active):
                continue
            p, q, apq = p[active], q[active], apq[active]
            theta = (work[q, q] - work[p, p]) / (2.0 * apq)
            big = np.abs(theta) > 1e150
            theta[big] = 1e150  # t ~ 1/(2 theta) underflows to a negligible angle
            t = np.where(theta == 0.0, 1.0,
                         np.sign(theta) / (np.abs(theta) + np.sqrt(theta * theta + 1.0)))
            c = 1.0 / np.sqrt(t * t + 1.0)
            s = t * c
            # A <- J^T A J with disjoint rotations applied together
            rp, rq = work[p, :].copy(), work[q, :].copy()
            work[p, :] = c[:, None] * rp - s[:, None] * rq
            work[q, :] = s[:, None] * rp + c[:, None] * rq
            cp, cq = work[:, p].copy(), work[:, q].copy()
            work[:, p] = cp * c - cq * s
            work[:, q] = cp * s + cq * c
            work[p, q] = 0.0
            work[q, p] = 0.0
            vp, vq = v[:, p].copy(), v[:, q].copy()
            v[:, p] = vp * c - vq * s
            v[:, q] = vp * s + vq * c
    else:
        raise ConvergenceError(f"Jacobi iteration did not converge in {max_sweeps} sweeps")
    return np.diag(work)[:n].copy(), v[:n, :n].copy()


def sym_eig(matrix, method: str = "lapack", tol: float = 1e-14,
            max_sweeps: int = 60) -> SymmetricEigenResult:
    """Full eigendecomposition of a real symmetric matrix, eigenvalues descending.

    ``method="lapack"`` calls the LAPACK divide-and-conquer driver through numpy;
    ``method="jacobi"`` runs cyclic Jacobi rotations in parallel (round-robin)
    ordering, and raises :class:`ConvergenceError` after ``max_sweeps`` sweeps.
    No sign convention is applied to the eigenvectors.
    """
    a = np.array(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("matrix must be square")
    if a.size and np.max(np.abs(a - a.T)) > 1e-12:
        raise ValueError("matrix is not symmetric")
    a = 0.5 * (a + a.T)

    if method == "lapack":
        w, v = np.linalg.eigh(a)
    elif method == "jacobi":
        w, v = _jacobi(a, tol, max_sweeps)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = np.argsort(-w, kind="stable")
    return SymmetricEigenResult(w[order], v[:, order])


# ---------------------------------------------------------------------------
# Random numbers
# ---------------------------------------------------------------------------
@dataclass
class SeededRng:
    """Reproducible uniform variates from the counter-based Philox4x64 generator.

    Doubles are formed from the top 53 bits of each 64-bit output, so a given
    seed yields the same stream on every platform.
    """

    seed: int
    _gen: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.seed = int(self.seed)
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        self._gen = np.random.Generator(np.random.Philox(self.seed))

    def random(self, size=None):
        return self._gen.random(size)

    def uniform(self, lo: float, hi: float, size=None):
        if lo > hi:
            raise ValueError("need lo <= hi")
        u = self._gen.random(size)
        return np.minimum(lo + (hi - lo) * u, hi)

    def spawn(self, *key: int) -> "SeededRng":
        """Independent child generator identified by an integer key path."""
        ss = np.random.SeedSequence(self.seed, spawn_key=tuple(int(k) for k in key))
        return SeededRng(int(ss.generate_state(1, np.uint64)[0]))


def uniform(rng: SeededRng, lo: float, hi: float) -> float:
    """Next scalar uniform variate in ``[lo, hi]``."""
    return float(rng.uniform(lo, hi))
