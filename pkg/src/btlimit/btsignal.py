"""Bandlimited and BT-limited signals.

A BT-limited signal is the image f = Kq of a finite-energy density q on
[-T, T].  Signals are carried by their coefficients a_k on a prolate basis,
f = sum_k a_k phi_k; densities by their values at the basis quadrature nodes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
from numpy.polynomial import legendre

from .exceptions import MismatchError
from .io import write_columns, write_sidecar
from .numerics import QuadratureRule, SeededRng, gauss_legendre_rule
from .pswf import BandParams, PswfBasis, build_basis, kernel_apply, sinc_kernel

GROWTH_THRESHOLD = 1.1
LEGENDRE_ORDER = 8

__all__ = [
    "KernelDensity",
    "BandlimitedSignal",
    "BandSpec",
    "MultibandComponent",
    "DiagnosticReport",
    "SpectralReport",
    "SegmentApproximation",
    "synth_from_density",
    "eval_signal",
    "membership_diagnostic",
    "random_bt_signal",
    "add_noise",
    "partial_sum_projection",
    "synth_multiband",
    "spectral_support_check",
    "approximate_segment",
    "save_signal",
    "save_density",
    "density_of",
    "legendre_density",
    "eval_component",
    "unit_components",
]


@dataclass(frozen=True, eq=False)
class KernelDensity:
    """Samples of a density q at the nodes of ``rule``."""

    rule: QuadratureRule
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        if values.shape != self.rule.nodes.shape:
            raise MismatchError("density values must match the rule's nodes")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def energy(self) -> float:
        return float(self.rule.integrate(self.values ** 2))

    @property
    def norm(self) -> float:
        return math.sqrt(self.energy)

    def scaled(self, factor: float) -> "KernelDensity":
        return KernelDensity(self.rule, factor * self.values)

    @classmethod
    def from_function(cls, rule: QuadratureRule, func) -> "KernelDensity":
        return cls(rule, func(rule.nodes))


@dataclass(frozen=True, eq=False)
class BandlimitedSignal:
    """f(t) = sum_k coeffs[k] * phi_k(t) on ``basis``."""

    basis: PswfBasis
    coeffs: np.ndarray

    def __post_init__(self):
        coeffs = np.zeros(self.basis.count)
        given = np.asarray(self.coeffs, dtype=np.float64)
        if given.ndim != 1 or given.size > self.basis.count:
            raise ValueError(f"at most {self.basis.count} coefficients fit this basis")
        coeffs[: given.size] = given
        coeffs.setflags(write=False)
        object.__setattr__(self, "coeffs", coeffs)

    def __call__(self, t):
        return eval_signal(self, t)

    @property
    def energy(self) -> float:
        return float(np.sum(self.coeffs ** 2))


@dataclass(frozen=True)
class BandSpec:
    """Spectral support [freq_lo, freq_hi] whose spectrum is a piece of a
    signal bandlimited to [time_lo, time_hi]."""

    freq_lo: float
    freq_hi: float
    time_lo: float
    time_hi: float

    def __post_init__(self):
        vals = (self.freq_lo, self.freq_hi, self.time_lo, self.time_hi)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError("band edges must be finite")
        if not (self.freq_lo < self.freq_hi and self.time_lo < self.time_hi):
            raise ValueError("need freq_lo < freq_hi and time_lo < time_hi")

    @property
    def omega(self) -> float:
        return 0.5 * (self.freq_hi - self.freq_lo)

    @property
    def t_half(self) -> float:
        return 0.5 * (self.time_hi - self.time_lo)

    @property
    def center_freq(self) -> float:
        return self.freq_lo + self.omega

    def rule(self, n: int = 64) -> QuadratureRule:
        return gauss_legendre_rule(n, -self.t_half, self.t_half)

    def overlaps(self, other: "BandSpec") -> bool:
        return self.freq_lo < other.freq_hi and other.freq_lo < self.freq_hi


@dataclass(frozen=True)
class MultibandComponent:
    alpha: complex
    band: BandSpec
    density: KernelDensity

    def __post_init__(self):
        r = self.density.rule
        if not (np.isclose(r.interval_lo, -self.band.t_half) and np.isclose(r.interval_hi, self.band.t_half)):
            raise MismatchError("component density must live on [-T_i, T_i] of its band")


# ---------------------------------------------------------------------------
# Synthesis and expansion
# ---------------------------------------------------------------------------
def synth_from_density(basis: PswfBasis, q: KernelDensity) -> BandlimitedSignal:
    """Coefficients of Kq on ``basis``: a_k = <q, phi_k> over [-T, T]."""
    if not q.rule.same_as(basis.rule):
        raise MismatchError("density and basis use different quadrature rules")
    coeffs = (basis.node_values * basis.rule.weights) @ q.values
    return BandlimitedSignal(basis, coeffs)


def eval_signal(f: BandlimitedSignal, t):
    vals = f.coeffs @ f.basis.phi(t)
    return vals[0] if np.ndim(t) == 0 else vals


def partial_sum_projection(f: BandlimitedSignal, n: int) -> BandlimitedSignal:
    """Keep coefficients a_0..a_n."""
    if not 0 <= n < f.basis.count:
        raise IndexError(f"truncation index {n} outside [0, {f.basis.count})")
    coeffs = np.array(f.coeffs)
    coeffs[n + 1:] = 0.0
    return BandlimitedSignal(f.basis, coeffs)


def density_of(f: BandlimitedSignal) -> KernelDensity:
    """The density sum_k a_k / lambda_k phi_k, whose image under K is f."""
    basis = f.basis
    return KernelDensity(basis.rule, (f.coeffs / basis.eigenvalues) @ basis.node_values)


# ---------------------------------------------------------------------------
# Membership diagnostic
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class DiagnosticReport:
    """Partial sums S_n = sum_{k<=n} |a_k|^2 / lambda_k^(1 - 2 gamma / 3).

    With finitely many coefficients every sum is finite, so ``bounded`` is a
    heuristic: the sum counts as growing when S_{K-1} / S_{K//2} exceeds
    ``threshold``.
    """

    gamma: float
    partial_sums: np.ndarray
    ratio: float
    threshold: float
    bounded: bool

    @property
    def classification(self) -> str:
        return "bounded" if self.bounded else "growing"


def membership_diagnostic(f: BandlimitedSignal, gamma: float = 0.0,
                          threshold: float = GROWTH_THRESHOLD) -> DiagnosticReport:
    if not 0.0 <= gamma < 0.5:
        raise ValueError("gamma must lie in [0, 1/2)")
    lam = f.basis.eigenvalues
    terms = f.coeffs ** 2 / lam ** (1.0 - 2.0 * gamma / 3.0)
    sums = np.cumsum(terms)
    half = sums[len(sums) // 2]
    if sums[-1] == 0.0:
        ratio = 1.0
    elif half == 0.0:
        ratio = math.inf
    else:
        ratio = float(sums[-1] / half)
    return DiagnosticReport(gamma, sums, ratio, threshold, ratio <= threshold)


# ---------------------------------------------------------------------------
# Random signals and noise
# ---------------------------------------------------------------------------
def legendre_density(basis: PswfBasis, coeffs) -> KernelDensity:
    """q(t) = sum_m coeffs[m] P_m(t / T) at the basis nodes."""
    x = basis.rule.nodes / basis.params.t_half
    return KernelDensity(basis.rule, legendre.legval(x, coeffs))


def random_bt_signal(basis: PswfBasis, rng: SeededRng, smoothness: float = 0.0,
                     grid_points: int = 201):
    """Random density q = sum_{m<=8} c_m P_m(t/T), c_m ~ U[-1, 1] / (1 + m)^smoothness.

    The density is rescaled so that max |Kq| over ``grid_points`` uniform points
    of [-T, T] is one.  Returns ``(density, signal)``.
    """
    m = np.arange(LEGENDRE_ORDER + 1)
    coeffs = rng.uniform(-1.0, 1.0, size=m.size) / (1.0 + m) ** smoothness
    q = legendre_density(basis, coeffs)
    T = basis.params.t_half
    peak = np.max(np.abs(kernel_apply(basis, q, np.linspace(-T, T, grid_points))))
    q = q.scaled(1.0 / peak)
    return q, synth_from_density(basis, q)


def add_noise(values, rng: SeededRng, epsilon: float):
    """Add independent U[-epsilon, epsilon] errors to each sample."""
    if epsilon < 0:
        raise ValueError("epsilon must be non-negative")
    values = np.asarray(values, dtype=np.float64)
    return values + rng.uniform(-epsilon, epsilon, size=values.shape)


# ---------------------------------------------------------------------------
# Shifted and multiband signals
# ---------------------------------------------------------------------------
def eval_component(comp: MultibandComponent, t) -> np.ndarray:
    band = comp.band
    rule = comp.density.rule
    t = np.atleast_1d(np.asarray(t, dtype=np.float64))
    shift = band.time_lo + band.t_half
    k = sinc_kernel(t[:, None] + shift - rule.nodes[None, :], band.omega)
    inner = k @ (rule.weights * comp.density.values)
    return comp.alpha * np.exp(1j * band.center_freq * t) * inner


def synth_multiband(components: Sequence[MultibandComponent], t):
    """sum_i alpha_i exp(j (A_i + Omega_i) t) int sinc_{Omega_i}(t + a_i + T_i - s) q_i(s) ds."""
    if not components:
        raise ValueError("at least one component is required")
    out = sum(eval_component(c, t) for c in components)
    return out[0] if np.ndim(t) == 0 else out


@dataclass(frozen=True)
class SpectralReport:
    band_fractions: np.ndarray
    outside_fraction: float
    total_energy: float
    frequencies: np.ndarray = field(repr=False)
    power: np.ndarray = field(repr=False)

    @property
    def degenerate(self) -> bool:
        return self.total_energy == 0.0


def spectral_support_check(samples, dt: float, bands, guard: float = 0.0) -> SpectralReport:
    """Share of Hann-windowed FFT energy inside each band and outside all of them.

    ``bands`` holds BandSpec objects or ``(freq_lo, freq_hi)`` pairs in rad/s.
    Bins within ``guard`` rad/s of a band edge count as in-band.  A zero signal
    reports all fractions as zero.
    """
    x = np.asarray(samples)
    if x.ndim != 1 or x.size < 16:
        raise ValueError("need a 1-D grid with at least 16 samples")
    if not dt > 0:
        raise ValueError("sample spacing must be positive")
    edges = [(b.freq_lo, b.freq_hi) if isinstance(b, BandSpec) else tuple(b) for b in bands]

    spec = np.fft.fftshift(np.fft.fft(x * np.hanning(x.size)))
    freqs = 2.0 * np.pi * np.fft.fftshift(np.fft.fftfreq(x.size, dt))
    power = np.abs(spec) ** 2
    total = float(power.sum())
    if total == 0.0:
        return SpectralReport(np.zeros(len(edges)), 0.0, 0.0, freqs, power)

    outside = np.ones(power.size, dtype=bool)
    fractions = []
    for lo, hi in edges:
        mask = (freqs >= lo - guard) & (freqs <= hi + guard)
        fractions.append(power[mask].sum() / total)
        outside &= ~mask
    return SpectralReport(np.array(fractions), float(power[outside].sum() / total), total, freqs, power)


# ---------------------------------------------------------------------------
# Approximation of a finite segment
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class SegmentApproximation:
    """Best approximation of a segment on [a, b] by span{phi_0..phi_{K-1}}.

    ``basis`` is centered at zero; segment time t maps to basis time t - center.
    """

    basis: PswfBasis
    center: float
    coeffs: np.ndarray
    density: KernelDensity
    residual: float

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        vals = self.coeffs @ self.basis.phi(np.atleast_1d(t) - self.center)
        return vals[0] if t.ndim == 0 else vals


def approximate_segment(g, lo: float, hi: float, band: float, count: int,
                        resolution: int = 256) -> SegmentApproximation:
    """Approximate ``g`` on ``[lo, hi]`` by a ``band``-bandlimited signal.

    ``g`` is a callable or a ``(times, values)`` pair of at least ``4 * count``
    samples, interpolated by a cubic spline.  The approximant is
    sum_k (<g, phi_k> / lambda_k) phi_k with phi_k the prolates of half-width
    (hi - lo)/2 and bandwidth ``band``; its density is
    sum_k <g, phi_k> / lambda_k^2 phi_k.
    """
    if not lo < hi:
        raise ValueError("need lo < hi")
    if not callable(g):
        times, values = (np.asarray(a, dtype=np.float64) for a in g)
        if times.size < 4 * count:
            raise ValueError(f"need at least {4 * count} samples of the segment")
        from scipy.interpolate import CubicSpline

        g = CubicSpline(times, values)
    basis = build_basis(BandParams(band, 0.5 * (hi - lo)), count, resolution)
    center = 0.5 * (lo + hi)
    gv = np.asarray(g(basis.rule.nodes + center), dtype=np.float64)
    inner = (basis.node_values * basis.rule.weights) @ gv
    coeffs = inner / basis.eigenvalues
    approx = coeffs @ basis.node_values
    residual = math.sqrt(max(float(basis.rule.integrate((gv - approx) ** 2)), 0.0))
    density = KernelDensity(basis.rule, (inner / basis.eigenvalues ** 2) @ basis.node_values)
    return SegmentApproximation(basis, center, coeffs, density, residual)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------
def save_signal(path, t, values, params: dict, comment: str | None = None):
    """Write ``(t, value)`` CSV (``value_real, value_imag`` if complex) and a JSON sidecar."""
    path = Path(path)
    values = np.asarray(values)
    if np.iscomplexobj(values):
        cols = {"t": t, "value_real": values.real, "value_imag": values.imag}
    else:
        cols = {"t": t, "value": values}
    csv_path = write_columns(path, cols, comment)
    side = write_sidecar(path.with_suffix(".json"), params)
    return csv_path, side


def save_density(path, q: KernelDensity, params: dict, comment: str | None = None):
    return save_signal(path, q.rule.nodes, q.values, params, comment)


def unit_components(bands: Sequence[BandSpec], alphas=None, n: int = 64) -> list[MultibandComponent]:
    """Components with constant unit densities, one per band."""
    alphas = [1.0] * len(bands) if alphas is None else list(alphas)
    if len(alphas) != len(bands):
        raise ValueError("one coefficient per band is required")
    out = []
    for a, band in zip(alphas, bands):
        rule = band.rule(n)
        out.append(MultibandComponent(complex(a), band, KernelDensity(rule, np.ones(len(rule)))))
    return out
