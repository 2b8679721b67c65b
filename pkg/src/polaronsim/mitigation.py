"""Synthetic gate noise, readout-error inversion and zero-noise extrapolation.

Noise is simulated with stochastic Pauli trajectories: after every gate, with
probability ``p1`` (one touched qubit) or ``p2`` (two or more), a uniformly
random non-identity Pauli hits the touched qubits. All randomness is drawn
here with numpy, so both kernel backends consume identical event streams.
"""

from __future__ import annotations

import io
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Sequence

import numpy as np

from . import _backend
from .circuit import QuantumCircuit, StateVector, measure_qubit, run_circuit
from .errors import ConfigurationError, NumericalError

DEFAULT_P1 = 0.001
DEFAULT_P2 = 0.01
ZNE_SCALES = (1, 3, 5)
# keep the prefix-state cache below this many bytes
_PREFIX_BUDGET = 64 << 20
_ROW_TOL = 1e-12
_DET_TOL = 1e-12


@dataclass(frozen=True)
class NoiseModel:
    depolarizing_p1: float = DEFAULT_P1
    depolarizing_p2: float = DEFAULT_P2
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("depolarizing_p1", "depolarizing_p2"):
            p = getattr(self, name)
            if not 0.0 <= p < 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1), got {p}")

    @property
    def is_noiseless(self) -> bool:
        return self.depolarizing_p1 == 0.0 and self.depolarizing_p2 == 0.0


class _Events(NamedTuple):
    offsets: np.ndarray
    op: np.ndarray
    x: np.ndarray
    z: np.ndarray


def _touched_table(c: QuantumCircuit) -> tuple[np.ndarray, np.ndarray]:
    touched = [g.touched for g in c.gates]
    width = max((len(t) for t in touched), default=1)
    table = np.full((len(touched), width), -1, dtype=np.int64)
    for k, t in enumerate(touched):
        table[k, : len(t)] = t
    return table, np.array([len(t) for t in touched], dtype=np.int64)


def _draw_events(c: QuantumCircuit, noise: NoiseModel, shots: int, rng: np.random.Generator) -> _Events:
    table, arity = _touched_table(c)
    p_gate = np.where(arity == 1, noise.depolarizing_p1, noise.depolarizing_p2)
    hit = rng.random((shots, len(c.gates))) < p_gate
    shot_idx, op_idx = np.nonzero(hit)  # row-major: sorted by shot, then op
    k = arity[op_idx]
    # uniform over the 4^k - 1 non-identity Paulis, digit d: 0=I 1=X 2=Y 3=Z
    code = 1 + np.floor(rng.random(op_idx.size) * (4.0**k - 1)).astype(np.int64)
    x = np.zeros(op_idx.size, dtype=np.uint64)
    z = np.zeros(op_idx.size, dtype=np.uint64)
    for slot in range(table.shape[1]):
        digit = (code >> (2 * slot)) & 3
        q = table[op_idx, slot]
        live = q >= 0
        bit = np.where(live, np.left_shift(1, np.maximum(q, 0)), 0).astype(np.uint64)
        x |= np.where((digit == 1) | (digit == 2), bit, 0).astype(np.uint64)
        z |= np.where((digit == 2) | (digit == 3), bit, 0).astype(np.uint64)
    offsets = np.zeros(shots + 1, dtype=np.int64)
    np.cumsum(np.bincount(shot_idx, minlength=shots), out=offsets[1:])
    return _Events(offsets, op_idx.astype(np.int64), x, z)


def _prefix_states(initial: np.ndarray, ops: np.ndarray, params: np.ndarray) -> np.ndarray | None:
    n_ops, dim = ops.shape[0], initial.shape[0]
    if (n_ops + 1) * dim * 16 > _PREFIX_BUDGET:
        return None
    out = np.empty((n_ops + 1, dim), dtype=np.complex128)
    out[0] = initial
    for g in range(n_ops):
        out[g + 1] = out[g]
        _backend.kernels.apply_ops(out[g + 1], ops[g : g + 1], params[g : g + 1])
    return out


def run_noisy(
    c: QuantumCircuit,
    initial: StateVector,
    noise: NoiseModel,
    shots: int,
    measured_qubit: int,
    *,
    threads: int = 1,
) -> tuple[int, int]:
    """Counts ``(n0, n1)`` of ``measured_qubit`` over independent noisy trajectories.

    Events are drawn up front from ``noise.seed``; ``threads`` only splits
    the simulation, so counts do not depend on it.
    """
    if shots < 1:
        raise ConfigurationError("shots must be >= 1")
    if initial.n_qubits != c.n_qubits:
        raise ConfigurationError(f"state has {initial.n_qubits} qubits, circuit has {c.n_qubits}")
    if not 0 <= measured_qubit < c.n_qubits:
        raise ConfigurationError(f"qubit {measured_qubit} outside register of {c.n_qubits}")
    if noise.is_noiseless:
        return measure_qubit(run_circuit(c, initial), measured_qubit, shots, noise.seed)

    rng = np.random.default_rng(noise.seed)
    events = _draw_events(c, noise, shots, rng)
    uniforms = rng.random(shots)
    ops, params = c.lowered
    init = np.ascontiguousarray(initial.amplitudes, dtype=np.complex128)
    kern = _backend.kernels
    prefix = _prefix_states(init, ops, params) if _backend.NAME == "cython" else None

    def chunk(lo: int, hi: int) -> np.ndarray:
        off = events.offsets[lo : hi + 1]
        ev = slice(int(off[0]), int(off[-1]))
        return kern.run_trajectories(
            init, ops, params, prefix, off - off[0],
            events.op[ev], events.x[ev], events.z[ev], measured_qubit, uniforms[lo:hi],
        )

    if threads > 1 and shots >= 2 * threads:
        bounds = np.linspace(0, shots, threads + 1).astype(int)
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda b: chunk(*b), zip(bounds[:-1], bounds[1:])))
        outcomes = np.concatenate(parts)
    else:
        outcomes = chunk(0, shots)
    ones = int(np.sum(outcomes))
    return shots - ones, ones


@dataclass(frozen=True)
class FoldedCircuit:
    base: QuantumCircuit
    scale_factor: int
    circuit: QuantumCircuit = field(repr=False)

    def __len__(self) -> int:
        return len(self.circuit)


def fold(c: QuantumCircuit, scale: int) -> FoldedCircuit:
    """Global folding ``U (U^dagger U)^k`` with ``scale = 2k + 1``."""
    if int(scale) != scale or scale < 1 or scale % 2 == 0:
        raise ConfigurationError(f"fold scale must be an odd integer >= 1, got {scale}")
    scale = int(scale)
    gates = list(c.gates)
    undo = list(c.inverse().gates)
    for _ in range((scale - 1) // 2):
        gates += undo + list(c.gates)
    folded = QuantumCircuit(c.n_qubits, tuple(gates), c.global_phase)
    return FoldedCircuit(c, scale, folded)


FitKind = Literal["poly", "linear", "exp"]


def zne_extrapolate(points: Sequence[tuple[float, float]], order: int = 2, *, kind: FitKind = "poly") -> float:
    """Zero-noise value from ``(scale, value)`` pairs.

    ``poly`` fits a least-squares polynomial of degree ``order`` and
    evaluates it at zero; ``linear`` is ``poly`` with degree 1; ``exp`` fits
    ``a * exp(-b * scale)`` in log space (values must share a sign).
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise ConfigurationError("points must be (scale, value) pairs")
    lam, val = pts[:, 0], pts[:, 1]
    n_distinct = np.unique(lam).size
    if kind == "linear":
        order = 1
    if kind == "exp":
        if n_distinct < 2:
            raise NumericalError("exponential fit needs at least 2 distinct scales")
        if np.any(val == 0) or np.any(np.sign(val) != np.sign(val[0])):
            raise NumericalError("exponential fit needs values of one sign")
        _, intercept = np.polyfit(lam, np.log(np.abs(val)), 1)
        return float(np.sign(val[0]) * np.exp(intercept))
    if kind not in ("poly", "linear"):
        raise ConfigurationError(f"unknown extrapolation {kind!r}")
    if order < 0 or n_distinct < order + 1:
        raise NumericalError(f"degree-{order} fit needs {order + 1} distinct scales, got {n_distinct}")
    coeffs = np.polynomial.polynomial.polyfit(lam, val, order)
    return float(coeffs[0])


@dataclass(frozen=True)
class ConfusionMatrix:
    """``m[i, j] = P(read j | prepared i)`` for the measured qubit."""

    m: np.ndarray

    def __post_init__(self) -> None:
        m = np.array(self.m, dtype=float)
        if m.shape != (2, 2):
            raise ConfigurationError(f"confusion matrix must be 2x2, got {m.shape}")
        if np.any(m < 0) or np.any(np.abs(m.sum(axis=1) - 1.0) > _ROW_TOL):
            raise ConfigurationError("confusion matrix rows must be probability vectors")
        m.setflags(write=False)
        object.__setattr__(self, "m", m)

    @classmethod
    def from_errors(cls, p01: float, p10: float) -> ConfusionMatrix:
        """``p01`` = P(read 1 | 0), ``p10`` = P(read 0 | 1)."""
        return cls(np.array([[1 - p01, p01], [p10, 1 - p10]]))

    @property
    def determinant(self) -> float:
        return float(np.linalg.det(self.m))

    def mix(self, p_true: Sequence[float]) -> np.ndarray:
        """Exact expected readout distribution for true probabilities ``p_true``."""
        return self.m.T @ np.asarray(p_true, dtype=float)


class ReadoutCorrection(NamedTuple):
    probabilities: np.ndarray
    clipped: bool


def correct_readout(m: ConfusionMatrix, p_exp: Sequence[float]) -> ReadoutCorrection:
    if abs(m.determinant) < _DET_TOL:
        raise NumericalError("confusion matrix is singular")
    raw = np.linalg.solve(m.m.T, np.asarray(p_exp, dtype=float))
    clipped = bool(np.any(raw < 0) or np.any(raw > 1))
    p = np.clip(raw, 0.0, 1.0)
    total = p.sum()
    if total <= 0:
        raise NumericalError("corrected distribution vanished after clipping")
    return ReadoutCorrection(p / total, clipped)


def apply_readout_noise(m: ConfusionMatrix, counts: Sequence[int], seed: int | None) -> tuple[int, int]:
    """Flip each recorded outcome according to ``m``'s conditional rows."""
    n0, n1 = (int(v) for v in counts)
    if n0 < 0 or n1 < 0:
        raise ConfigurationError("counts must be non-negative")
    rng = np.random.default_rng(seed)
    flip0 = int(rng.binomial(n0, m.m[0, 1]))
    flip1 = int(rng.binomial(n1, m.m[1, 0]))
    read1 = n1 - flip1 + flip0
    return n0 + n1 - read1, read1


@dataclass(frozen=True)
class ZNEReport:
    scales: tuple[int, ...]
    raw_values: tuple[float, ...]
    mitigated: float
    ideal: float | None = None

    @property
    def unmitigated(self) -> float:
        return self.raw_values[self.scales.index(1)] if 1 in self.scales else self.raw_values[0]

    def to_csv(self, digits: int = 6) -> str:
        buf = io.StringIO()
        buf.write("scale,value\n")
        for lam, v in zip(self.scales, self.raw_values):
            buf.write(f"{lam},{v:.{digits}f}\n")
        buf.write(f"0,{self.mitigated:.{digits}f}\n")
        return buf.getvalue()


def zne_signal(
    c: QuantumCircuit,
    initial: StateVector,
    noise: NoiseModel,
    shots: int,
    measured_qubit: int,
    *,
    scales: Sequence[int] = ZNE_SCALES,
    order: int = 2,
    kind: FitKind = "poly",
    threads: int = 1,
) -> ZNEReport:
    """``P0 - P1`` of ``measured_qubit`` at each fold scale, extrapolated to zero noise.

    Each scale gets an independent seed split from ``noise.seed``.
    """
    seeds = np.random.SeedSequence(noise.seed).spawn(len(scales))
    raw = []
    for lam, ss in zip(scales, seeds):
        model = NoiseModel(noise.depolarizing_p1, noise.depolarizing_p2, int(ss.generate_state(1)[0]))
        n0, n1 = run_noisy(fold(c, lam).circuit, initial, model, shots, measured_qubit, threads=threads)
        raw.append((n0 - n1) / shots)
    est = zne_extrapolate(list(zip(scales, raw)), order, kind=kind)
    return ZNEReport(tuple(int(s) for s in scales), tuple(raw), est)
