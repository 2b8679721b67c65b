"""FFT spectroscopy of Ramsey signals and the impurity-coupling sweep.

Convention: a component ``S(t) ~ exp(-i E t)`` appears at ``omega = +E``,
i.e. ``A(omega) = | dt * sum_n w_n S(t_n) exp(+i omega t_n) |``. Positive
frequencies are energies of the interacting system measured from the bath
reference.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError
from .ramsey import RamseyConfig, RamseySignal, measure_signal

WINDOWS = ("hann", "none")
DEFAULT_PAD = 8


@dataclass(frozen=True)
class SpectralDensity:
    frequencies: np.ndarray
    amplitudes: np.ndarray
    window: str
    source: str
    symmetrized: bool = False

    @property
    def d_omega(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])


class PeakEstimate(NamedTuple):
    energy: float
    amplitude: float
    degenerate: bool = False


def _window(name: str, n: int) -> np.ndarray:
    if name == "hann":
        return np.hanning(n)
    if name == "none":
        return np.ones(n)
    raise ConfigurationError(f"unknown window {name!r}; choose from {WINDOWS}")


def fft_spectrum(signal: RamseySignal, window: str = "hann", zero_pad_factor: int = DEFAULT_PAD) -> SpectralDensity:
    t = np.asarray(signal.times, dtype=float)
    if t.size < 8:
        raise ConfigurationError("need at least 8 time points for a spectrum")
    steps = np.diff(t)
    dt = float(steps.mean())
    if not np.allclose(steps, dt, rtol=1e-9, atol=1e-12):
        raise ConfigurationError("time grid is not uniform")
    if zero_pad_factor < 1:
        raise ConfigurationError("zero_pad_factor must be >= 1")
    s = signal.complex_s * _window(window, t.size)
    n_fft = t.size * int(zero_pad_factor)
    # exp(+i w t) kernel == n_fft * ifft
    spec = np.fft.ifft(s, n_fft) * n_fft * dt
    omega = 2 * np.pi * np.fft.fftfreq(n_fft, dt)
    # shift for the grid origin t[0]
    spec = spec * np.exp(1j * omega * t[0])
    order = np.argsort(omega, kind="stable")
    src = signal.mode + ("" if signal.im_s is not None else ",real-only")
    return SpectralDensity(omega[order], np.abs(spec[order]), window, src, symmetrized=signal.im_s is None)


def peak_energy(spec: SpectralDensity, search_range: tuple[float, float] | None = None) -> PeakEstimate:
    """Largest peak in ``search_range``, refined by a 3-point parabola.

    Real-only spectra default to ``omega >= 0``. Ties go to the lowest
    frequency and set ``degenerate``.
    """
    w, a = spec.frequencies, spec.amplitudes
    if w.size == 0:
        raise ConfigurationError("empty spectrum")
    if search_range is None and spec.symmetrized:
        search_range = (0.0, np.inf)
    if search_range is None:
        idx = np.arange(w.size)
    else:
        lo, hi = search_range
        idx = np.flatnonzero((w >= lo) & (w <= hi))
    if idx.size == 0:
        raise ConfigurationError(f"no frequencies in search range {search_range}")
    sub = a[idx]
    top = float(sub.max())
    k = int(idx[np.argmax(sub)])
    degenerate = int(np.sum(sub >= top - 1e-12 * max(top, 1.0))) > 1
    if degenerate or k == 0 or k == w.size - 1:
        return PeakEstimate(float(w[k]), top, degenerate)
    y0, y1, y2 = a[k - 1], a[k], a[k + 1]
    denom = y0 - 2 * y1 + y2
    if denom >= 0:
        return PeakEstimate(float(w[k]), top, False)
    delta = 0.5 * (y0 - y2) / denom
    height = y1 - 0.25 * (y0 - y2) * delta
    return PeakEstimate(float(w[k] + delta * spec.d_omega), float(height), False)


@dataclass(frozen=True)
class PhaseDiagramGrid:
    u_values: np.ndarray
    frequencies: np.ndarray
    amplitude_matrix: np.ndarray
    peak_track: np.ndarray
    peak_amplitudes: np.ndarray

    def normalized(self) -> np.ndarray:
        """Rows scaled to unit maximum (display only)."""
        top = self.amplitude_matrix.max(axis=1, keepdims=True)
        return self.amplitude_matrix / np.where(top > 0, top, 1.0)

    def heatmap_csv(self, normalized: bool = True, digits: int = 6) -> str:
        m = self.normalized() if normalized else self.amplitude_matrix
        buf = io.StringIO()
        buf.write("U_imp," + ",".join(f"{w:.{digits}f}" for w in self.frequencies) + "\n")
        for u, row in zip(self.u_values, m):
            buf.write(f"{u:.{digits}f}," + ",".join(f"{v:.{digits}e}" for v in row) + "\n")
        return buf.getvalue()

    def peaks_csv(self, digits: int = 6) -> str:
        buf = io.StringIO()
        buf.write("U_imp,E_peak,amplitude\n")
        for u, e, a in zip(self.u_values, self.peak_track, self.peak_amplitudes):
            buf.write(f"{u:.{digits}f},{e:.{digits}f},{a:.{digits}e}\n")
        return buf.getvalue()


def sweep_phase_diagram(
    base_config: RamseyConfig,
    u_grid: Sequence[float],
    *,
    method: str = "ed",
    window: str = "hann",
    zero_pad_factor: int = DEFAULT_PAD,
    search_range: tuple[float, float] | None = None,
    threads: int = 1,
) -> PhaseDiagramGrid:
    """Spectrum and peak energy for each impurity coupling in ``u_grid``.

    ``method="ed"`` uses the exact overlap; ``"circuit"`` runs the Ramsey
    circuit with the base config's steps/shots (imaginary part included).
    """
    from .ed_oracle import exact_signal

    u = np.asarray(u_grid, dtype=float)
    if u.size == 0 or np.any(u <= 0) or np.any(np.diff(u) <= 0):
        raise ConfigurationError("u_grid must be non-empty, positive and strictly ascending")
    if method not in ("ed", "circuit"):
        raise ConfigurationError(f"unknown sweep method {method!r}")

    def row(value: float) -> SpectralDensity:
        cfg = base_config.with_(params=replace(base_config.params, U_imp=float(value)), measure_imaginary=True)
        sig = exact_signal(cfg) if method == "ed" else measure_signal(cfg)
        return fft_spectrum(sig, window, zero_pad_factor)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            spectra = list(pool.map(row, u))
    else:
        spectra = [row(v) for v in u]
    peaks = [peak_energy(s, search_range) for s in spectra]
    return PhaseDiagramGrid(
        u_values=u,
        frequencies=spectra[0].frequencies,
        amplitude_matrix=np.vstack([s.amplitudes for s in spectra]),
        peak_track=np.array([p.energy for p in peaks]),
        peak_amplitudes=np.array([p.amplitude for p in peaks]),
    )


class BranchFit(NamedTuple):
    slope: float
    intercept: float
    r2: float


def linear_branch_fit(grid: PhaseDiagramGrid, u_min: float) -> BranchFit:
    sel = grid.u_values >= u_min
    if int(sel.sum()) < 3:
        raise ConfigurationError(f"need at least 3 points with U_imp >= {u_min}")
    x, y = grid.u_values[sel], grid.peak_track[sel]
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return BranchFit(float(slope), float(intercept), r2)
