"""Prolate spheroidal wavefunctions by Nystrom discretization of the sinc kernel.

The operator

    (K f)(t) = int_{-T}^{T} sin(omega (t - s)) / (pi (t - s)) f(s) ds

is discretized on an N-point Gauss-Legendre rule and symmetrized with the
square roots of the weights.  Eigenfunctions are normalized so that their
energy on [-T, T] equals their eigenvalue; extended to the whole line through
the kernel they then have unit energy.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import MismatchError, ResolutionError
from .io import read_csv, write_csv
from .numerics import QuadratureRule, composite_rule, gauss_legendre_rule, sym_eig

EIGENVALUE_FLOOR = 1e-13
DEFAULT_RESOLUTION = 256

__all__ = [
    "BandParams",
    "PswfBasis",
    "sinc_kernel",
    "build_basis",
    "eval_phi",
    "kernel_apply",
    "line_gram",
    "save_basis",
    "load_basis",
]


def sinc_kernel(u, omega: float):
    """sin(omega u) / (pi u), with the removable singularity filled in as omega/pi."""
    return (omega / np.pi) * np.sinc(omega * np.asarray(u, dtype=np.float64) / np.pi)


@dataclass(frozen=True)
class BandParams:
    omega: float
    t_half: float

    def __post_init__(self):
        if not (self.omega > 0 and self.t_half > 0):
            raise ValueError("omega and t_half must be positive")
        if not (np.isfinite(self.omega) and np.isfinite(self.t_half)):
            raise ValueError("omega and t_half must be finite")

    @property
    def c(self) -> float:
        return self.omega * self.t_half


@dataclass(frozen=True, eq=False)
class PswfBasis:
    """Leading eigenpairs of the sinc-kernel operator on ``[-T, T]``.

    ``node_values[k, i]`` is phi_k at ``rule.nodes[i]``; ``spectrum`` holds every
    eigenvalue of the discretized operator (``None`` for a basis loaded from disk).
    """

    params: BandParams
    count: int
    eigenvalues: np.ndarray
    rule: QuadratureRule
    node_values: np.ndarray
    spectrum: np.ndarray | None = None

    @property
    def resolution(self) -> int:
        return len(self.rule)

    def kernel_matrix(self, t) -> np.ndarray:
        """Matrix of kernel(t_m - s_i) * w_i mapping node values to values at t."""
        t = np.atleast_1d(np.asarray(t, dtype=np.float64))
        return sinc_kernel(t[:, None] - self.rule.nodes[None, :], self.params.omega) * self.rule.weights

    def phi(self, t) -> np.ndarray:
        """All retained eigenfunctions at ``t``; shape ``(count, len(t))``."""
        return (self.kernel_matrix(t) @ self.node_values.T).T / self.eigenvalues[:, None]

    def gram(self) -> np.ndarray:
        """Quadrature Gram matrix of the eigenfunctions on ``[-T, T]``."""
        return (self.node_values * self.rule.weights) @ self.node_values.T


def _nystrom(params: BandParams, n: int, method: str):
    rule = gauss_legendre_rule(n, -params.t_half, params.t_half)
    sw = np.sqrt(rule.weights)
    diff = rule.nodes[:, None] - rule.nodes[None, :]
    m = sw[:, None] * sinc_kernel(diff, params.omega) * sw[None, :]
    eig = sym_eig(m, method=method)
    return rule, eig.eigenvalues, eig.eigenvectors


def build_basis(params: BandParams, count: int, resolution: int = DEFAULT_RESOLUTION,
                check_resolution: bool = False, method: str = "lapack") -> PswfBasis:
    """Nystrom construction of the leading ``count`` prolate eigenpairs.

    Raises :class:`ResolutionError` when the smallest requested eigenvalue is at
    or below ``EIGENVALUE_FLOOR``, when the retained eigenvalues are not strictly
    decreasing, or (with ``check_resolution``) when the eigenvalues computed at
    ``resolution`` and ``2 * resolution`` nodes differ by more than 1e-8.
    """
    count = int(count)
    resolution = int(resolution)
    if count < 1:
        raise ValueError("count must be >= 1")
    if resolution < max(4 * count, 64):
        raise ValueError(f"resolution must be >= max(4*count, 64) = {max(4 * count, 64)}")

    rule, lam, vecs = _nystrom(params, resolution, method)
    lam_k = lam[:count]
    if lam_k[-1] <= EIGENVALUE_FLOOR:
        first_bad = int(np.argmax(lam <= EIGENVALUE_FLOOR))
        raise ResolutionError(
            f"eigenvalue floor reached: lambda_{first_bad} = {lam[first_bad]:.3e} <= "
            f"{EIGENVALUE_FLOOR:g} (c = {params.c:g}); at most {first_bad} eigenpairs are resolvable")
    if not (lam_k[0] < 1.0 and np.all(np.diff(lam_k) < 0)):
        raise ResolutionError("retained eigenvalues are not strictly decreasing inside (0, 1)")

    if check_resolution:
        _, lam2, _ = _nystrom(params, 2 * resolution, method)
        gap = np.max(np.abs(lam2[:count] - lam_k))
        if gap > 1e-8:
            raise ResolutionError(f"eigenvalues at N={resolution} and N={2 * resolution} differ by {gap:.2e}")

    sw = np.sqrt(rule.weights)
    phi = (vecs[:, :count] / sw[:, None] * np.sqrt(lam_k)[None, :]).T
    for row in phi:
        first = np.flatnonzero(np.abs(row) > 1e-9)
        if first.size and row[first[0]] < 0:
            row *= -1.0
    phi.setflags(write=False)
    lam_k = lam_k.copy()
    lam_k.setflags(write=False)
    return PswfBasis(params, count, lam_k, rule, phi, spectrum=lam)


def eval_phi(basis: PswfBasis, k: int, t):
    """phi_k at arbitrary real ``t`` through the kernel extension formula."""
    if not 0 <= k < basis.count:
        raise IndexError(f"eigenfunction index {k} outside [0, {basis.count})")
    vals = basis.kernel_matrix(t) @ basis.node_values[k] / basis.eigenvalues[k]
    return vals[0] if np.ndim(t) == 0 else vals


def _density_values(basis: PswfBasis, q) -> np.ndarray:
    rule = getattr(q, "rule", None)
    if rule is not None:
        if not rule.same_as(basis.rule):
            raise MismatchError("density and basis use different quadrature rules")
        values = q.values
    else:
        values = np.asarray(q, dtype=np.float64)
    if values.shape[-1] != len(basis.rule):
        raise MismatchError("density length does not match the basis quadrature rule")
    return values


def kernel_apply(basis: PswfBasis, q, t):
    """(Kq)(t) for any real ``t``; ``q`` is a KernelDensity or raw node values."""
    values = _density_values(basis, q)
    out = basis.kernel_matrix(t) @ values
    return out[0] if np.ndim(t) == 0 else out


# ---------------------------------------------------------------------------
# Whole-line inner products
# ---------------------------------------------------------------------------
def _tail_gram(basis: PswfBasis, weighted: np.ndarray, half_width: float,
               n_smooth: int = 64, n_terms: int = 8) -> np.ndarray:
    """Exact-in-the-limit value of int_L^inf phi_j phi_k dt.

    For t >= L, phi_k(t) = Im(exp(i omega t) G_k(t)) / (pi lambda_k) with
    G_k(t) = sum_i w_i phi_k(s_i) exp(-i omega s_i) / (t - s_i), which is smooth.
    The product splits into a smooth part, integrated after t = L/u, and an
    exp(2 i omega t) part, integrated asymptotically by parts.
    """
    omega = basis.params.omega
    s = basis.rule.nodes
    coef = weighted * np.exp(-1j * omega * s)[None, :]  # (K, N)
    scale = 1.0 / (np.pi * basis.eigenvalues)

    ref = gauss_legendre_rule(n_smooth, 0.0, 1.0)
    u = ref.nodes
    g_over_u = coef @ (1.0 / (half_width - u[None, :] * s[:, None]))  # (K, n_smooth)
    smooth = half_width * np.real((g_over_u * ref.weights) @ g_over_u.conj().T)

    # derivatives of G at t = L: G^(r)(L) = (-1)^r r! sum coef / (L - s)^(r+1)
    d = half_width - s
    derivs = []
    fact = 1.0
    for r in range(n_terms):
        if r:
            fact *= r
        derivs.append((-1) ** r * fact * (coef @ d ** -(r + 1)))
    nu = 2.0 * omega
    osc = np.zeros((basis.count, basis.count), dtype=complex)
    binom = [[1]]
    for m in range(1, n_terms):
        prev = binom[-1]
        binom.append([1] + [prev[i] + prev[i + 1] for i in range(m - 1)] + [1])
    for m in range(n_terms):
        hm = sum(binom[m][r] * np.outer(derivs[r], derivs[m - r]) for r in range(m + 1))
        osc += (-1) ** m * hm / (1j * nu) ** (m + 1)
    osc *= -np.exp(1j * nu * half_width)

    inner = 0.5 * (smooth - np.real(osc))
    return inner * np.outer(scale, scale)


def line_gram(basis: PswfBasis, half_width: float | None = None, panel_width: float = 1.0,
              nodes_per_panel: int = 32, tail: bool = True) -> np.ndarray:
    """Gram matrix of the extended eigenfunctions over ``[-L, L]`` (plus both tails).

    ``half_width`` defaults to 40 T.  With ``tail=False`` only the truncated
    integral is returned; its deficit decays like 1/L.
    """
    T = basis.params.t_half
    L = 40.0 * T if half_width is None else float(half_width)
    if L <= T:
        raise ValueError("half_width must exceed t_half")
    panels = max(2, int(np.ceil(2 * L / panel_width)))
    rule = composite_rule(np.linspace(-L, L, panels + 1), nodes_per_panel)
    vals = basis.phi(rule.nodes)
    gram = (vals * rule.weights) @ vals.T
    if tail:
        weighted = basis.node_values * basis.rule.weights
        gram = gram + _tail_gram(basis, weighted, L)
        # left tail: reflect through the symmetric rule
        gram = gram + _tail_gram(basis, weighted[:, ::-1], L)
    return gram


# ---------------------------------------------------------------------------
# CSV bundle
# ---------------------------------------------------------------------------
_PARAM_HEADER = ["omega", "t_half", "count", "resolution"]


def save_basis(basis: PswfBasis, directory, comment: str | None = None, stem: str = "basis"):
    """Write ``<stem>_eigenvalues.csv`` and ``<stem>_nodes.csv``; returns both paths.

    Each file holds the parameter header and row, then its own table.
    """
    directory = Path(directory)
    params_row = [basis.params.omega, basis.params.t_half, basis.count, basis.resolution]

    eig_rows = [params_row, ["k", "eigenvalue"]]
    eig_rows += [[k, float(lam)] for k, lam in enumerate(basis.eigenvalues)]
    eig_path = write_csv(directory / f"{stem}_eigenvalues.csv", _PARAM_HEADER, eig_rows, comment)

    node_rows = [params_row, ["node", "weight"] + [f"phi_{k}" for k in range(basis.count)]]
    for i, (t, wt) in enumerate(zip(basis.rule.nodes, basis.rule.weights)):
        node_rows.append([t, wt] + list(basis.node_values[:, i]))
    node_path = write_csv(directory / f"{stem}_nodes.csv", _PARAM_HEADER, node_rows, comment)
    return eig_path, node_path


def load_basis(directory, stem: str = "basis") -> PswfBasis:
    directory = Path(directory)
    eig_head, eig_rows = read_csv(directory / f"{stem}_eigenvalues.csv")
    node_head, node_rows = read_csv(directory / f"{stem}_nodes.csv")
    if eig_head != _PARAM_HEADER or node_head != _PARAM_HEADER:
        raise ValueError("not a btlimit basis bundle")
    eig_rows = [eig_head] + eig_rows
    node_rows = [node_head] + node_rows
    omega, t_half = float(eig_rows[1][0]), float(eig_rows[1][1])
    count, resolution = int(eig_rows[1][2]), int(eig_rows[1][3])
    if eig_rows[1] != node_rows[1]:
        raise MismatchError("eigenvalue and node files disagree on parameters")
    lam = np.array([float(r[1]) for r in eig_rows[3:]])
    table = np.array([[float(v) for v in r] for r in node_rows[3:]])
    if lam.size != count or table.shape != (resolution, count + 2):
        raise ValueError("basis bundle is truncated or malformed")
    rule = QuadratureRule(-t_half, t_half, table[:, 0], table[:, 1])
    phi = np.ascontiguousarray(table[:, 2:].T)
    phi.setflags(write=False)
    lam.setflags(write=False)
    return PswfBasis(BandParams(omega, t_half), count, lam, rule, phi)
