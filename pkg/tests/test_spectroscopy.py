import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polaronsim.circuit import StateVector
from polaronsim.ed_oracle import assemble, exact_signal, overlap_series
from polaronsim.errors import ConfigurationError
from polaronsim.hamiltonian import HubbardParams
from polaronsim.jw import PauliHamiltonian
from polaronsim.ramsey import RamseyConfig, RamseySignal
from polaronsim.spectroscopy import (
    DEFAULT_PAD,
    PhaseDiagramGrid,
    SpectralDensity,
    fft_spectrum,
    linear_branch_fit,
    peak_energy,
    sweep_phase_diagram,
)

DT = 0.1


def tone(s, dt=DT, real_only=False):
    t = np.arange(len(s)) * dt
    if real_only:
        return RamseySignal(t, np.real(s), (1 + np.real(s)) / 2, (1 - np.real(s)) / 2, None, "synthetic")
    return RamseySignal.from_complex(t, s, "synthetic")


def sweep_base(n=512):
    return RamseyConfig(time_grid=tuple(np.arange(n) * DT))


def test_grid_spacing_unpadded():
    spec = fft_spectrum(tone(np.ones(100)), "none", 1)
    assert spec.d_omega == pytest.approx(2 * np.pi / (100 * DT))
    assert np.all(spec.amplitudes >= 0)
    assert np.allclose(np.diff(spec.frequencies), spec.d_omega)


def test_default_pad():
    assert DEFAULT_PAD == 8
    assert fft_spectrum(tone(np.ones(64))).frequencies.size == 64 * 8


def test_constant_signal_peaks_at_zero():
    spec = fft_spectrum(tone(np.ones(128)))
    assert peak_energy(spec).energy == pytest.approx(0.0, abs=1e-9)


def test_cosine_gives_symmetric_peaks():
    w0 = 1.7
    t = np.arange(256) * DT
    spec = fft_spectrum(tone(np.cos(w0 * t), real_only=True))
    assert spec.symmetrized and "real-only" in spec.source
    bin_ = spec.d_omega
    pos = peak_energy(spec)
    neg = peak_energy(spec, (-np.inf, 0.0))
    assert abs(pos.energy - w0) <= bin_ and abs(neg.energy + w0) <= bin_


def test_sign_convention():
    t = np.arange(256) * DT
    spec = fft_spectrum(tone(np.exp(-1j * 2.0 * t)))
    assert peak_energy(spec).energy == pytest.approx(2.0, abs=0.05)


def test_shifted_grid_origin():
    t = 3.0 + np.arange(256) * DT
    sig = RamseySignal.from_complex(t, np.exp(-1j * 1.2 * t), "synthetic")
    spec = fft_spectrum(sig, "none", 1)
    k = int(np.argmin(np.abs(spec.frequencies - 1.2)))
    ref = abs(DT * np.sum(np.exp(-1j * 1.2 * t) * np.exp(1j * spec.frequencies[k] * t)))
    assert spec.amplitudes[k] == pytest.approx(ref, rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(st.floats(-8.0, 8.0), st.floats(0, 2 * np.pi))
def test_tone_frequency_within_half_padded_bin(w0, phase):
    t = np.arange(256) * DT
    spec = fft_spectrum(tone(np.exp(-1j * (w0 * t + phase))))
    assert abs(peak_energy(spec).energy - w0) <= spec.d_omega / 2


def test_reference_style_tone():
    t = np.arange(256) * DT
    est = peak_energy(fft_spectrum(tone(np.cos(2.0 * t), real_only=True)))
    assert est.energy == pytest.approx(2.0, abs=0.05)


@settings(max_examples=30, deadline=None)
@given(st.integers(8, 200), st.integers(0, 2**32 - 1))
def test_parseval(n, seed):
    rng = np.random.default_rng(seed)
    s = rng.normal(size=n) + 1j * rng.normal(size=n)
    s /= np.max(np.abs(s))
    spec = fft_spectrum(tone(s), "none", 1)
    lhs = np.sum(np.abs(s) ** 2) * DT
    rhs = np.sum(spec.amplitudes**2) * spec.d_omega / (2 * np.pi)
    assert rhs == pytest.approx(lhs, rel=1e-6)


def test_flat_spectrum_tie_break():
    spec = SpectralDensity(np.linspace(-1, 1, 11), np.ones(11), "none", "synthetic")
    est = peak_energy(spec)
    assert est.degenerate and est.energy == -1.0


def test_parabolic_refinement():
    w = np.linspace(0, 2, 21)
    spec = SpectralDensity(w, 5 - (w - 1.037) ** 2, "none", "synthetic")
    est = peak_energy(spec)
    assert est.energy == pytest.approx(1.037, abs=1e-12)
    assert est.amplitude == pytest.approx(5.0, abs=1e-12)


def test_peak_errors():
    spec = SpectralDensity(np.linspace(0, 1, 5), np.ones(5), "none", "synthetic")
    with pytest.raises(ConfigurationError):
        peak_energy(spec, (3.0, 4.0))
    with pytest.raises(ConfigurationError):
        peak_energy(SpectralDensity(np.array([]), np.array([]), "none", "x"))


def test_fft_errors():
    with pytest.raises(ConfigurationError):
        fft_spectrum(tone(np.ones(7)))
    sig = RamseySignal.from_complex([0, 0.1, 0.2, 0.4, 0.5, 0.6, 0.7, 0.8], np.ones(8), "x")
    with pytest.raises(ConfigurationError):
        fft_spectrum(sig)
    with pytest.raises(ConfigurationError):
        fft_spectrum(tone(np.ones(16)), "kaiser")
    with pytest.raises(ConfigurationError):
        fft_spectrum(tone(np.ones(16)), zero_pad_factor=0)


@pytest.mark.parametrize("a,b", [(0.6, 0.9), (1.1, 0.3)])
def test_two_level_gap(a, b):
    # H0 = 0 and H = a X + b Z on one qubit: S(t) = <0|exp(-iHt)|0>
    h = assemble(PauliHamiltonian(1, {"X": a, "Z": b}))
    h0 = assemble(PauliHamiltonian(1))
    t = np.arange(512) * DT
    s = overlap_series(h0, h, StateVector.basis(1), t)
    spec = fft_spectrum(RamseySignal.from_complex(t, s, "ed"))
    w, v = np.linalg.eigh(h.matrix)
    dominant = w[int(np.argmax(np.abs(v[0]) ** 2))]
    assert abs(peak_energy(spec).energy - dominant) <= spec.d_omega
    other = peak_energy(spec, (-np.inf, 0.0) if dominant > 0 else (0.0, np.inf))
    assert abs(other.energy - w[w != dominant][0]) <= spec.d_omega


def test_peaks_sit_on_eigen_gaps():
    cfg = RamseyConfig(time_grid=tuple(np.arange(2048) * DT))
    h, h0 = cfg.pauli_hamiltonians()
    e = np.linalg.eigvalsh(assemble(h).matrix)
    e0 = np.linalg.eigvalsh(assemble(h0).matrix)
    gaps = (e[:, None] - e0[None, :]).ravel()
    spec = fft_spectrum(exact_signal(cfg), "hann", 4)
    a = spec.amplitudes
    unpadded_bin = 2 * np.pi / (2048 * DT)
    local = np.flatnonzero((a[1:-1] > a[:-2]) & (a[1:-1] > a[2:]) & (a[1:-1] > 0.05 * a.max())) + 1
    assert local.size >= 2
    for k in local:
        assert np.min(np.abs(gaps - spec.frequencies[k])) <= unpadded_bin


def test_weak_coupling_peak_near_reference():
    grid = sweep_phase_diagram(sweep_base(), [0.1])
    ref = sweep_phase_diagram(sweep_base(), [1e-9])
    assert abs(grid.peak_track[0] - ref.peak_track[0]) <= 0.1


def test_molecular_branch_three_points():
    fit = linear_branch_fit(sweep_phase_diagram(sweep_base(), [3.0, 4.0, 5.0]), 3.0)
    assert 0.85 <= fit.slope <= 1.15


def test_molecular_branch_dense_sweep_monotone():
    grid = sweep_phase_diagram(sweep_base(), np.arange(3.0, 5.01, 0.25), threads=2)
    fit = linear_branch_fit(grid, 3.0)
    assert 0.85 <= fit.slope <= 1.15 and fit.r2 >= 0.99
    assert np.all(np.diff(grid.peak_track) > 0)


def test_bright_branch_at_u4():
    grid = sweep_phase_diagram(sweep_base(), [4.0])
    a, w = grid.amplitude_matrix[0], grid.frequencies
    peak = grid.peak_track[0]
    away = np.abs(w - peak) > 0.5
    assert grid.peak_amplitudes[0] > 1.5 * a[away].max()


def test_shot_noise_sweep_slope():
    u = np.arange(3.0, 5.01, 0.25)
    peaks = []
    for k, value in enumerate(u):
        cfg = sweep_base().with_(params=HubbardParams(U_imp=float(value)), measure_imaginary=True)
        peaks.append(peak_energy(fft_spectrum(exact_signal(cfg).resample(1000, k))).energy)
    slope = np.polyfit(u, peaks, 1)[0]
    assert 0.7 <= slope <= 1.3


def test_circuit_sweep_agrees_with_ed():
    base = RamseyConfig(time_grid=tuple(np.arange(64) * 0.25), n_steps=60)
    ed = sweep_phase_diagram(base, [4.0])
    circ = sweep_phase_diagram(base, [4.0], method="circuit")
    assert abs(ed.peak_track[0] - circ.peak_track[0]) <= 0.1


def test_sweep_validation():
    for bad in ([], [0.0, 1.0], [2.0, 1.0], [-1.0]):
        with pytest.raises(ConfigurationError):
            sweep_phase_diagram(sweep_base(16), bad)
    with pytest.raises(ConfigurationError):
        sweep_phase_diagram(sweep_base(16), [1.0], method="vqe")


def test_branch_fit_examples():
    u = np.array([3.0, 3.5, 4.0, 4.5])
    grid = PhaseDiagramGrid(u, np.zeros(1), np.ones((4, 1)), 1.0 * u, np.ones(4))
    fit = linear_branch_fit(grid, 3.0)
    assert fit.slope == pytest.approx(1.0) and fit.r2 == pytest.approx(1.0) and fit.intercept == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ConfigurationError):
        linear_branch_fit(grid, 4.0)


def test_grid_exports():
    grid = sweep_phase_diagram(sweep_base(64), [1.0, 2.0], zero_pad_factor=1)
    norm = grid.normalized()
    assert grid.amplitude_matrix.shape == (2, grid.frequencies.size)
    assert np.allclose(norm.max(axis=1), 1.0)
    heat = grid.heatmap_csv().splitlines()
    assert heat[0].startswith("U_imp,") and len(heat[0].split(",")) == grid.frequencies.size + 1
    assert heat[1].startswith("1.000000,")
    raw = grid.heatmap_csv(normalized=False).splitlines()[1].split(",")[1:]
    assert np.allclose([float(v) for v in raw], grid.amplitude_matrix[0], rtol=1e-5)
    assert grid.peaks_csv().splitlines()[0] == "U_imp,E_peak,amplitude"


def test_zero_signal_normalization_safe():
    grid = PhaseDiagramGrid(np.array([1.0]), np.zeros(3), np.zeros((1, 3)), np.zeros(1), np.zeros(1))
    assert np.array_equal(grid.normalized(), np.zeros((1, 3)))
