"""Ancilla Ramsey interferometry for the impurity overlap ``S(t)``.

Register layout: ancilla on qubit 0, system mode ``k`` on qubit ``k + 1``.
The circuit prepares the occupation pattern, puts the ancilla in
superposition, evolves the system under the bath Hamiltonian on the
ancilla-0 branch and under the full Hamiltonian on the ancilla-1 branch,
and closes the interferometer with a Hadamard. Then
``P(0) - P(1) = Re S(t)``; an extra ``-pi/2`` ancilla phase gives ``Im S``.
"""

from __future__ import annotations

import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .circuit import PHASE, H, QuantumCircuit, StateVector, X, measure_qubit, run_circuit
from .errors import ConfigurationError
from .hamiltonian import (
    HubbardParams,
    LatticeSpec,
    build_bath_hamiltonian,
    build_hamiltonian,
    occupation_bits,
    reference_lattice,
)
from .jw import PauliHamiltonian, jordan_wigner
from .trotter import DEFAULT_N_STEPS, TermOrder, TrotterPlan, controlled_trotter

ANCILLA = 0

# Ideal-simulation rows (t, P0, P1, S) reported for the four-qubit run.
REFERENCE_TABLE = (
    (0.00, 1.000, 0.000, 1.000),
    (0.50, 0.833, 0.167, 0.666),
    (1.00, 0.523, 0.477, 0.046),
    (1.50, 0.408, 0.592, -0.184),
    (2.00, 0.564, 0.436, 0.127),
    (2.50, 0.716, 0.284, 0.432),
    (3.00, 0.588, 0.412, 0.175),
    (3.50, 0.248, 0.752, -0.505),
    (4.00, 0.036, 0.964, -0.928),
)
REFERENCE_TIMES = tuple(row[0] for row in REFERENCE_TABLE)


def default_occupation(lattice: LatticeSpec) -> tuple[int, ...]:
    """Impurity occupied, lowest bath mode occupied, the rest empty."""
    bits = [0] * lattice.n_modes
    offset = 0
    if lattice.impurity_present:
        bits[0] = 1
        offset = 1
    if offset < lattice.n_modes:
        bits[offset] = 1
    return tuple(bits)


@dataclass(frozen=True)
class RamseyConfig:
    lattice: LatticeSpec = field(default_factory=reference_lattice)
    params: HubbardParams = field(default_factory=lambda: HubbardParams(U_imp=2.5))
    initial_occupation: tuple[int, ...] | None = None
    time_grid: tuple[float, ...] = REFERENCE_TIMES
    n_steps: int = DEFAULT_N_STEPS
    shots: int | None = None
    seed: int = 0
    measure_imaginary: bool = False
    term_order: TermOrder = "kinetic_first"

    def __post_init__(self) -> None:
        grid = tuple(float(t) for t in self.time_grid)
        if not grid:
            raise ConfigurationError("time grid is empty")
        if grid[0] < 0 or any(b < a for a, b in zip(grid, grid[1:])):
            raise ConfigurationError("time grid must be ascending and start at t >= 0")
        object.__setattr__(self, "time_grid", grid)
        occ = self.initial_occupation
        occ = default_occupation(self.lattice) if occ is None else occupation_bits(occ, self.lattice.n_modes)
        object.__setattr__(self, "initial_occupation", occ)
        self.params.eps_for(self.lattice)
        if self.n_steps < 1:
            raise ConfigurationError("n_steps must be >= 1")
        if self.shots is not None and self.shots < 1:
            raise ConfigurationError("shots must be >= 1")

    @property
    def occupation(self) -> tuple[int, ...]:
        return self.initial_occupation  # type: ignore[return-value]

    @property
    def n_system(self) -> int:
        return self.lattice.n_modes

    @cached_property
    def _hamiltonians(self) -> tuple[PauliHamiltonian, PauliHamiltonian]:
        full = jordan_wigner(build_hamiltonian(self.lattice, self.params))
        bath = jordan_wigner(build_bath_hamiltonian(self.lattice, self.params))
        return full, bath

    def pauli_hamiltonians(self) -> tuple[PauliHamiltonian, PauliHamiltonian]:
        """``(H, H0)`` on the system register."""
        return self._hamiltonians

    def with_(self, **changes) -> RamseyConfig:
        return replace(self, **changes)


@dataclass(frozen=True)
class RamseySignal:
    times: np.ndarray
    re_s: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    im_s: np.ndarray | None = None
    mode: str = "exact"

    @classmethod
    def from_complex(cls, times: Sequence[float], s: np.ndarray, mode: str) -> RamseySignal:
        s = np.asarray(s, dtype=complex)
        return cls(
            times=np.asarray(times, dtype=float),
            re_s=s.real.copy(),
            p0=(1 + s.real) / 2,
            p1=(1 - s.real) / 2,
            im_s=s.imag.copy(),
            mode=mode,
        )

    @property
    def complex_s(self) -> np.ndarray:
        if self.im_s is None:
            return self.re_s.astype(complex)
        return self.re_s + 1j * self.im_s

    def resample(self, shots: int, seed: int) -> RamseySignal:
        """Binomial shot readout of this signal's ancilla probabilities."""
        if shots < 1:
            raise ConfigurationError("shots must be >= 1")
        rng = np.random.default_rng(seed)
        p0 = rng.binomial(shots, np.clip((1 + self.re_s) / 2, 0, 1)) / shots
        im = None
        if self.im_s is not None:
            im = 2 * rng.binomial(shots, np.clip((1 + self.im_s) / 2, 0, 1)) / shots - 1
        return RamseySignal(self.times, 2 * p0 - 1, p0, 1 - p0, im, f"shots({shots})")

    def to_csv(self, path=None, digits: int = 6) -> str:
        buf = io.StringIO()
        buf.write("t,P0,P1,S\n")
        for row in zip(self.times, self.p0, self.p1, self.re_s):
            buf.write(",".join(f"{v:.{digits}f}" for v in row) + "\n")
        text = buf.getvalue()
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def build_ramsey_circuit(config: RamseyConfig, t: float, *, imaginary: bool = False) -> QuantumCircuit:
    n = config.n_system + 1
    gates = [X(k + 1) for k, b in enumerate(config.occupation) if b]
    gates.append(H(ANCILLA))
    circ = QuantumCircuit(n, tuple(gates))
    if t > 0:
        h_full, h_bath = config.pauli_hamiltonians()
        for ham, value in ((h_bath, 0), (h_full, 1)):
            plan = TrotterPlan(ham, t, config.n_steps, config.term_order)
            circ = circ + controlled_trotter(plan, ANCILLA, value, qubit_offset=1, n_qubits=n)
    tail = [PHASE(ANCILLA, -math.pi / 2)] if imaginary else []
    return circ.extended(tail + [H(ANCILLA)])


def point_seed(seed: int, index: int, part: int = 0) -> int:
    """Independent per-time-point seed derived from the master seed."""
    return int(np.random.SeedSequence([seed, index, part]).generate_state(1)[0])


def _initial(config: RamseyConfig) -> StateVector:
    return StateVector.basis(config.n_system + 1, 0)


def _point(config: RamseyConfig, k: int, t: float, part: int) -> float:
    """``P(ancilla = 0)`` at one time point (exact or sampled)."""
    state = run_circuit(build_ramsey_circuit(config, t, imaginary=bool(part)), _initial(config))
    if config.shots is None:
        return 1.0 - state.probability_one(ANCILLA)
    c0, _ = measure_qubit(state, ANCILLA, config.shots, point_seed(config.seed, k, part))
    return c0 / config.shots


def measure_signal(config: RamseyConfig, *, threads: int = 1) -> RamseySignal:
    jobs = [(k, t, 0) for k, t in enumerate(config.time_grid)]
    if config.measure_imaginary:
        jobs += [(k, t, 1) for k, t in enumerate(config.time_grid)]
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            p0s = list(pool.map(lambda j: _point(config, *j), jobs))
    else:
        p0s = [_point(config, *j) for j in jobs]
    n_t = len(config.time_grid)
    p0 = np.array(p0s[:n_t])
    im = 2 * np.array(p0s[n_t:]) - 1 if config.measure_imaginary else None
    mode = "exact" if config.shots is None else f"shots({config.shots})"
    return RamseySignal(np.array(config.time_grid), 2 * p0 - 1, p0, 1 - p0, im, mode)


def fidelity_r2(signal: RamseySignal, exact: RamseySignal) -> float:
    """Coefficient of determination of ``signal.re_s`` against ``exact.re_s``."""
    if signal.times.shape != exact.times.shape or not np.allclose(signal.times, exact.times):
        raise ConfigurationError("signals are on different time grids")
    ss_res = float(np.sum((signal.re_s - exact.re_s) ** 2))
    ss_tot = float(np.sum((exact.re_s - exact.re_s.mean()) ** 2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else -math.inf
    return 1.0 - ss_res / ss_tot


@dataclass(frozen=True)
class CalibrationResult:
    residual: float
    config: RamseyConfig
    label: str
    values: np.ndarray


def calibration_sweep(
    reference: Iterable[tuple[float, float, float, float]] = REFERENCE_TABLE,
    *,
    hopping: Sequence[float] = (0.6, 1.0),
    u_imp: Sequence[float] = (2.5, 1.5),
    signs: Sequence[int] = (-1, 1),
    couplings: Sequence[tuple[int, ...] | None] = ((0,), (1,), None),
    n_steps: Sequence[int | None] = (15, 200, None),
    scale_u_by_j: Sequence[bool] = (False, True),
    threads: int = 1,
) -> list[CalibrationResult]:
    """Score candidate model settings against reference ``(t, P0, P1, S)`` rows.

    Every occupation pattern of the two-mode bath plus impurity is tried.
    ``n_steps=None`` scores the exact (ED) signal. Results are sorted by
    the max-abs deviation of ``S`` over the rows.
    """
    from .ed_oracle import exact_signal

    rows = np.asarray(list(reference), dtype=float)
    times = tuple(rows[:, 0])
    target = rows[:, 3]
    jobs = []
    for j in hopping:
        for u in u_imp:
            for scaled in scale_u_by_j:
                u_abs = u * j if scaled else u
                for sign in signs:
                    for sites in couplings:
                        lattice = LatticeSpec(2, impurity_sites=sites)
                        params = HubbardParams(hopping_J=j, U_imp=u_abs, hopping_sign=sign)
                        for occ in range(1 << lattice.n_modes):
                            bits = tuple((occ >> k) & 1 for k in range(lattice.n_modes))
                            for ns in n_steps:
                                label = (
                                    f"J={j} U_imp={u_abs:g} sign={sign:+d} sites={sites} "
                                    f"occ={''.join(map(str, bits))} n_steps={ns or 'exact'}"
                                )
                                jobs.append((RamseyConfig(lattice, params, bits, times, ns or 1), ns is None, label))

    def score(job: tuple[RamseyConfig, bool, str]) -> CalibrationResult:
        cfg, exact, label = job
        sig = exact_signal(cfg) if exact else measure_signal(cfg)
        return CalibrationResult(float(np.max(np.abs(sig.re_s - target))), cfg, label, sig.re_s)

    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            out = list(pool.map(score, jobs))
    else:
        out = [score(job) for job in jobs]
    out.sort(key=lambda r: r.residual)
    return out


@dataclass(frozen=True)
class TrotterScan:
    n_steps: tuple[int, ...]
    errors: tuple[float, ...]
    slope: float | None

    def error_at(self, n: int) -> float:
        return self.errors[self.n_steps.index(n)]

    def to_csv(self, digits: int = 8) -> str:
        rows = "".join(f"{n},{e:.{digits}e}\n" for n, e in zip(self.n_steps, self.errors))
        return "n_steps,sup_error\n" + rows


def trotter_scan(
    config: RamseyConfig, n_steps: Sequence[int], *, fit_min: int = 4, threads: int = 1
) -> TrotterScan:
    """Sup-norm deviation of the exact-mode circuit signal from ED for each step count.

    ``slope`` is the log-log fit of error against ``n_steps`` over the
    entries with ``n_steps >= fit_min`` (``None`` with fewer than two).
    """
    from .ed_oracle import exact_signal

    steps = tuple(sorted({int(n) for n in n_steps}))
    if not steps or steps[0] < 1:
        raise ConfigurationError("n_steps list must hold positive integers")
    ref = exact_signal(config).re_s
    errs = []
    for n in steps:
        sig = measure_signal(config.with_(n_steps=n, shots=None, measure_imaginary=False), threads=threads)
        errs.append(float(np.max(np.abs(sig.re_s - ref))))
    fit = [(n, e) for n, e in zip(steps, errs) if n >= fit_min and e > 0]
    slope = None
    if len(fit) >= 2:
        x, y = np.log([f[0] for f in fit]), np.log([f[1] for f in fit])
        slope = float(np.polyfit(x, y, 1)[0])
    return TrotterScan(steps, tuple(errs), slope)
