import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from btlimit.btsignal import (
    BandlimitedSignal,
    BandSpec,
    KernelDensity,
    MultibandComponent,
    add_noise,
    approximate_segment,
    density_of,
    eval_signal,
    legendre_density,
    membership_diagnostic,
    partial_sum_projection,
    random_bt_signal,
    save_signal,
    spectral_support_check,
    synth_from_density,
    synth_multiband,
    unit_components,
)
from btlimit.exceptions import MismatchError, ResolutionError
from btlimit.io import read_csv
from btlimit.numerics import SeededRng, composite_rule, gauss_legendre_rule
from btlimit.pswf import eval_phi, kernel_apply

# seed 42, smoothness 2, omega = pi, T = 1; pinned at first validated run
RANDOM_SIGNAL_GOLDEN = {-1.0: -0.30400435694567934, 0.0: -0.9843765549926724,
                        1.0: -0.4748186616812398, 2.0: 0.07108534101551162}
# residual of g(t) = t on [-1, 1], band pi, for K = 8 and K = 10
SEGMENT_RESIDUALS = {8: 2.342208072890048e-06, 10: 1.5905449055965346e-08}

GRID = np.linspace(-3, 3, 101)


def test_synth_of_phi0_is_lambda0(basis):
    f = synth_from_density(basis, KernelDensity(basis.rule, basis.node_values[0]))
    expected = np.zeros(basis.count)
    expected[0] = basis.eigenvalues[0]
    assert np.max(np.abs(f.coeffs - expected)) < 1e-8


def test_synth_of_zero(basis):
    f = synth_from_density(basis, KernelDensity(basis.rule, np.zeros(len(basis.rule))))
    assert not np.any(f.coeffs)
    assert np.all(f(GRID) == 0.0)


def test_synth_matches_kernel_apply(basis):
    q, f = random_bt_signal(basis, SeededRng(42))
    assert np.max(np.abs(eval_signal(f, GRID) - kernel_apply(basis, q, GRID))) < 1e-6


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32), st.floats(0.0, 3.0))
def test_synthesis_consistency_property(basis, seed, smoothness):
    q, f = random_bt_signal(basis, SeededRng(seed), smoothness)
    assert np.max(np.abs(f(GRID) - kernel_apply(basis, q, GRID))) < 1e-6


def test_coefficients_are_sqrt_lambda_times_density_coefficients(basis):
    q, f = random_bt_signal(basis, SeededRng(3))
    # b_k: coefficients of q on the orthonormal system phi_k / sqrt(lambda_k) of L2[-T, T]
    b = (basis.node_values * basis.rule.weights) @ q.values / np.sqrt(basis.eigenvalues)
    assert np.max(np.abs(f.coeffs - b * np.sqrt(basis.eigenvalues))) < 1e-8


def test_density_round_trip(basis):
    f = BandlimitedSignal(basis, [0.3, -0.2, 0.1])
    q = density_of(f)
    assert np.max(np.abs(synth_from_density(basis, q).coeffs - f.coeffs)) < 1e-12


def test_synth_rejects_foreign_rule(basis):
    q = KernelDensity(gauss_legendre_rule(128), np.ones(128))
    with pytest.raises(MismatchError):
        synth_from_density(basis, q)


def test_eval_signal_examples(basis):
    assert eval_signal(BandlimitedSignal(basis, []), 0.7) == 0.0
    assert np.allclose(BandlimitedSignal(basis, [1.0])(GRID), eval_phi(basis, 0, GRID), atol=1e-15)
    assert abs(eval_signal(BandlimitedSignal(basis, [1.0, 1.0]), 0.0) - eval_phi(basis, 0, 0.0)) < 1e-12
    with pytest.raises(ValueError):
        BandlimitedSignal(basis, np.ones(11))


def test_parseval_on_whole_line(basis):
    _, f = random_bt_signal(basis, SeededRng(42), 2.0)
    rule = composite_rule(np.linspace(-200, 200, 401), 32)
    whole = rule.integrate(f(rule.nodes) ** 2)
    assert abs(whole - f.energy) < 1e-4


def test_membership_examples(basis):
    lam = basis.eigenvalues
    rep = membership_diagnostic(BandlimitedSignal(basis, [lam[0]]))
    assert np.allclose(rep.partial_sums, lam[0], rtol=1e-14, atol=0)
    rep = membership_diagnostic(BandlimitedSignal(basis, [1.0]))
    assert np.allclose(rep.partial_sums, 1.0 / lam[0], rtol=1e-14, atol=0)
    k = np.arange(basis.count)
    rep = membership_diagnostic(BandlimitedSignal(basis, np.sqrt(lam) * 2.0 ** -k))
    assert np.allclose(rep.partial_sums, np.cumsum(4.0 ** -k), rtol=1e-12, atol=0)
    assert rep.classification == "bounded"


def test_membership_separates_bounded_from_growing(basis):
    lam = basis.eigenvalues
    assert membership_diagnostic(BandlimitedSignal(basis, lam)).bounded
    growing = membership_diagnostic(BandlimitedSignal(basis, np.sqrt(lam)))
    assert growing.classification == "growing"
    assert abs(growing.ratio - 10 / 6) < 1e-12


def test_membership_gamma(basis):
    lam = basis.eigenvalues
    f = BandlimitedSignal(basis, np.sqrt(lam))
    rep = membership_diagnostic(f, gamma=0.3)
    assert np.allclose(np.diff(rep.partial_sums, prepend=0.0), lam ** 0.2, rtol=1e-12, atol=0)
    for bad in (-0.1, 0.5):
        with pytest.raises(ValueError):
            membership_diagnostic(f, gamma=bad)


def test_membership_zero_signal(basis):
    rep = membership_diagnostic(BandlimitedSignal(basis, []))
    assert rep.bounded and rep.ratio == 1.0


def test_random_signal_golden(basis):
    _, f = random_bt_signal(basis, SeededRng(42), 2.0)
    for t, v in RANDOM_SIGNAL_GOLDEN.items():
        assert abs(f(t) - v) < 1e-12


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**64 - 1))
def test_random_signal_normalized(basis, seed):
    _, f = random_bt_signal(basis, SeededRng(seed))
    assert abs(np.max(np.abs(f(np.linspace(-1, 1, 201)))) - 1.0) < 1e-12


def test_random_signal_smoothness_limit(basis):
    m = np.arange(9)
    coeffs = np.ones(9) / (1.0 + m) ** 12
    assert np.all(coeffs[6:] < 1e-9)
    q, _ = random_bt_signal(basis, SeededRng(5), 40.0)
    assert np.ptp(q.values) < 1e-9 * np.max(np.abs(q.values))


def test_legendre_density(basis):
    q = legendre_density(basis, [0.0, 1.0])
    assert np.allclose(q.values, basis.rule.nodes, atol=0, rtol=0)


def test_add_noise():
    clean = np.linspace(-1, 1, 201)
    assert np.array_equal(add_noise(clean, SeededRng(1), 0.0), clean)
    noisy = add_noise(clean, SeededRng(1), 0.0125)
    assert np.max(np.abs(noisy - clean)) <= 0.0125
    hits = sum(np.max(np.abs(add_noise(clean, SeededRng(7 + s), 0.0125) - clean)) > 0.9 * 0.0125
               for s in range(100))
    assert hits >= 95
    with pytest.raises(ValueError):
        add_noise(clean, SeededRng(1), -1.0)


def test_partial_sums(basis):
    _, f = random_bt_signal(basis, SeededRng(11))
    assert np.array_equal(partial_sum_projection(f, basis.count - 1).coeffs, f.coeffs)
    f0 = partial_sum_projection(f, 0)
    assert np.count_nonzero(f0.coeffs) == 1 and f0.coeffs[0] == f.coeffs[0]
    for n in (2, 5):
        rest = BandlimitedSignal(basis, f.coeffs - partial_sum_projection(f, n).coeffs)
        assert abs(rest.energy - np.sum(f.coeffs[n + 1:] ** 2)) < 1e-15
    with pytest.raises(IndexError):
        partial_sum_projection(f, basis.count)


def test_bandspec_validation():
    with pytest.raises(ValueError):
        BandSpec(1.0, 0.0, -1.0, 1.0)
    with pytest.raises(ValueError):
        BandSpec(0.0, math.inf, -1.0, 1.0)
    a = BandSpec(0.0, math.pi, -1.0, 1.0)
    assert a.omega == math.pi / 2 and a.center_freq == math.pi / 2 and a.t_half == 1.0
    assert not a.overlaps(BandSpec(2 * math.pi, 3 * math.pi, -1.0, 1.0))
    assert a.overlaps(BandSpec(3.0, 4.0, 0.0, 1.0))


def test_multiband_single_centered_band_reduces_to_kernel(basis):
    band = BandSpec(-math.pi, math.pi, -1.0, 1.0)
    q, _ = random_bt_signal(basis, SeededRng(42))
    comp = MultibandComponent(1.0, band, q)
    vals = synth_multiband([comp], GRID)
    assert np.max(np.abs(vals - kernel_apply(basis, q, GRID))) < 1e-10
    assert np.max(np.abs(vals.imag)) == 0.0


def test_multiband_zero_and_empty():
    comps = unit_components([BandSpec(0.0, 1.0, -1.0, 1.0)], alphas=[0.0])
    assert np.all(synth_multiband(comps, GRID) == 0)
    with pytest.raises(ValueError):
        synth_multiband([], GRID)
    with pytest.raises(ValueError):
        unit_components([BandSpec(0.0, 1.0, -1.0, 1.0)], alphas=[1.0, 2.0])


def test_component_density_must_match_band(basis):
    q, _ = random_bt_signal(basis, SeededRng(1))
    with pytest.raises(MismatchError):
        MultibandComponent(1.0, BandSpec(0.0, 1.0, 0.0, 4.0), q)


def _spectral_grid():
    dt = 1.0 / 32
    return np.arange(-64 * 32, 64 * 32 + 1) * dt, dt


def test_two_band_spectrum():
    t, dt = _spectral_grid()
    bands = [BandSpec(0.0, math.pi, -1.0, 1.0), BandSpec(2 * math.pi, 3 * math.pi, -1.0, 1.0)]
    rep = spectral_support_check(synth_multiband(unit_components(bands), t), dt, bands)
    assert np.all(rep.band_fractions >= 0.1)
    assert rep.band_fractions.sum() >= 0.99
    assert rep.outside_fraction <= 0.01
    assert abs(rep.band_fractions.sum() + rep.outside_fraction - 1.0) < 1e-12


def test_single_band_spectrum(basis):
    t, dt = _spectral_grid()
    _, f = random_bt_signal(basis, SeededRng(42))
    rep = spectral_support_check(f(t), dt, [(-math.pi, math.pi)])
    assert rep.band_fractions[0] >= 0.99


def test_spectrum_degenerate_cases():
    t, dt = _spectral_grid()
    rep = spectral_support_check(np.zeros_like(t), dt, [(0.0, 1.0)])
    assert rep.degenerate and not rep.band_fractions.any() and rep.outside_fraction == 0.0
    with pytest.raises(ValueError):
        spectral_support_check(np.ones(8), dt, [(0.0, 1.0)])
    with pytest.raises(ValueError):
        spectral_support_check(np.ones(64), 0.0, [(0.0, 1.0)])


def test_segment_in_span(basis):
    approx = approximate_segment(lambda t: eval_phi(basis, 0, t), -1.0, 1.0, math.pi, 6)
    assert approx.residual <= 1e-8
    t = np.linspace(-3, 3, 13)
    assert np.max(np.abs(approx(t) - eval_phi(basis, 0, t))) < 1e-8


def test_segment_zero():
    approx = approximate_segment(lambda t: np.zeros_like(t), 2.0, 5.0, 2.0, 4)
    assert approx.residual == 0.0 and not approx.density.values.any()


def test_segment_residual_decreases_with_count():
    res = {k: approximate_segment(lambda t: t, -1.0, 1.0, math.pi, k).residual for k in (2, 4, 6, 8, 10)}
    vals = list(res.values())
    assert all(b < a for a, b in zip(vals, vals[1:]))
    for k, v in SEGMENT_RESIDUALS.items():
        assert abs(res[k] - v) < 1e-3 * v


def test_segment_beyond_spectrum_raises():
    with pytest.raises(ResolutionError):
        approximate_segment(lambda t: t, -1.0, 1.0, math.pi, 12)


def test_segment_from_samples_and_shifted_interval():
    t = np.linspace(1.0, 3.0, 201)
    g = np.cos(0.8 * t)
    approx = approximate_segment((t, g), 1.0, 3.0, 2.0, 8)
    assert approx.residual < 1e-6
    assert np.max(np.abs(approx(t) - g)) < 1e-5
    with pytest.raises(ValueError):
        approximate_segment((t[:10], g[:10]), 1.0, 3.0, 1.0, 8)
    with pytest.raises(ValueError):
        approximate_segment(np.cos, 1.0, 1.0, 1.0, 4)


def test_save_signal(tmp_path):
    t = np.linspace(0, 1, 5)
    csv_path, side = save_signal(tmp_path / "s.csv", t, np.exp(1j * t), {"omega": 1.0}, "# c")
    header, rows = read_csv(csv_path)
    assert header == ["t", "value_real", "value_imag"] and len(rows) == 5
    assert json.loads(side.read_text()) == {"omega": 1.0}
    assert csv_path.read_text().startswith("# c\n")
