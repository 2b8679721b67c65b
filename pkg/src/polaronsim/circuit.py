"""Gate-level circuits and a dense statevector executor.

Gates are lowered to a flat op stream (see ``lower``) that the compiled
kernel (or its numpy fallback) executes in place. Two op kinds exist:

* kind 0: 2x2 unitary on ``target``, optionally conditioned on ``control``
  having value ``cval``; params hold the row-major matrix.
* kind 1: parity phase over ``mask`` (MultiRZ), optionally conditioned;
  params hold the even/odd phase factors.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from . import _backend
from .errors import CapacityError, ConfigurationError
from .jw import PauliString, pauli_action

GATE_KINDS = ("H", "X", "RY", "RZ", "CNOT", "PHASE", "MULTIRZ")
_ROTATIONS = ("RY", "RZ", "PHASE", "MULTIRZ")
MAX_STATEVECTOR_QUBITS = 24

_SQ = 1.0 / math.sqrt(2.0)


@dataclass(frozen=True)
class Gate:
    """A gate, possibly conditioned on one control qubit.

    ``qubits`` holds the gate's own qubits: ``(q,)`` for one-qubit gates,
    ``(control, target)`` for CNOT, the parity set for MULTIRZ.
    """

    kind: str
    qubits: tuple[int, ...]
    angle: float | None = None
    control: int | None = None
    control_value: int = 1

    def __post_init__(self) -> None:
        if self.kind not in GATE_KINDS:
            raise ConfigurationError(f"unknown gate kind {self.kind!r}")
        qubits = tuple(int(q) for q in self.qubits)
        object.__setattr__(self, "qubits", qubits)
        arity = {"CNOT": 2}.get(self.kind, 1)
        if self.kind == "MULTIRZ":
            if len(qubits) < 1:
                raise ConfigurationError("MULTIRZ needs at least one qubit")
        elif len(qubits) != arity:
            raise ConfigurationError(f"{self.kind} takes {arity} qubit(s), got {qubits}")
        if (self.kind in _ROTATIONS) != (self.angle is not None):
            raise ConfigurationError(f"{self.kind} angle mismatch: {self.angle!r}")
        if self.angle is not None:
            object.__setattr__(self, "angle", float(self.angle))
        if self.control is not None:
            if self.kind == "CNOT":
                raise ConfigurationError("controlled CNOT is not supported (nesting depth 1)")
            object.__setattr__(self, "control", int(self.control))
            if self.control_value not in (0, 1):
                raise ConfigurationError(f"control value must be 0 or 1, got {self.control_value}")
        touched = self.touched
        if len(set(touched)) != len(touched) or min(touched) < 0:
            raise ConfigurationError(f"invalid qubit indices {touched} in {self.kind}")

    @property
    def is_controlled(self) -> bool:
        return self.control is not None

    @property
    def touched(self) -> tuple[int, ...]:
        return self.qubits if self.control is None else (self.control, *self.qubits)

    def inverse(self) -> Gate:
        if self.angle is None:
            return self
        return Gate(self.kind, self.qubits, -self.angle, self.control, self.control_value)

    def to_dict(self) -> dict:
        inner = {"kind": self.kind, "qubits": list(self.qubits), "angle": self.angle}
        if self.control is None:
            return inner
        return {"kind": "CONTROLLED", "inner": inner, "control": self.control, "control_value": self.control_value}

    @classmethod
    def from_dict(cls, d: dict) -> Gate:
        if d["kind"] == "CONTROLLED":
            inner = d["inner"]
            return cls(inner["kind"], tuple(inner["qubits"]), inner.get("angle"), d["control"], d.get("control_value", 1))
        return cls(d["kind"], tuple(d["qubits"]), d.get("angle"))


def H(q: int) -> Gate:
    return Gate("H", (q,))


def X(q: int) -> Gate:
    return Gate("X", (q,))


def RY(q: int, theta: float) -> Gate:
    return Gate("RY", (q,), theta)


def RZ(q: int, theta: float) -> Gate:
    return Gate("RZ", (q,), theta)


def PHASE(q: int, theta: float) -> Gate:
    """``diag(1, e^{i theta})``."""
    return Gate("PHASE", (q,), theta)


def CNOT(control: int, target: int) -> Gate:
    return Gate("CNOT", (control, target))


def MULTIRZ(theta: float, qubits: Sequence[int]) -> Gate:
    """``exp(-i theta/2 Z...Z)``: ``e^{-i theta/2}`` on even parity, ``e^{+i theta/2}`` on odd."""
    return Gate("MULTIRZ", tuple(qubits), theta)


def controlled(g: Gate, control: int, value: int = 1) -> Gate:
    if g.is_controlled:
        raise ConfigurationError("controlled gates cannot be nested")
    return Gate(g.kind, g.qubits, g.angle, control, value)


@dataclass(frozen=True)
class QuantumCircuit:
    """Ordered gate list on ``n_qubits``.

    ``global_phase`` is multiplied onto the final state; it records the
    identity component of a compiled Hamiltonian.
    """

    n_qubits: int
    gates: tuple[Gate, ...] = ()
    global_phase: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "gates", tuple(self.gates))
        for g in self.gates:
            if max(g.touched) >= self.n_qubits:
                raise ConfigurationError(f"gate {g} exceeds register of {self.n_qubits} qubits")

    def __len__(self) -> int:
        return len(self.gates)

    def __add__(self, other: QuantumCircuit) -> QuantumCircuit:
        if other.n_qubits != self.n_qubits:
            raise ConfigurationError("register size mismatch")
        return QuantumCircuit(self.n_qubits, self.gates + other.gates, self.global_phase + other.global_phase)

    def extended(self, gates: Iterable[Gate]) -> QuantumCircuit:
        return QuantumCircuit(self.n_qubits, self.gates + tuple(gates), self.global_phase)

    def inverse(self) -> QuantumCircuit:
        return QuantumCircuit(self.n_qubits, tuple(g.inverse() for g in reversed(self.gates)), -self.global_phase)

    @cached_property
    def lowered(self) -> tuple[np.ndarray, np.ndarray]:
        return lower(self.gates)

    def count(self, kind: str | None = None, *, two_qubit: bool = False) -> int:
        gates = self.gates if kind is None else [g for g in self.gates if g.kind == kind]
        if two_qubit:
            return sum(1 for g in gates if len(g.touched) >= 2)
        return len(gates)

    def to_json(self) -> str:
        return json.dumps(
            {"n_qubits": self.n_qubits, "global_phase": self.global_phase, "gates": [g.to_dict() for g in self.gates]},
            indent=1,
        )

    @classmethod
    def from_json(cls, text: str) -> QuantumCircuit:
        d = json.loads(text)
        return cls(d["n_qubits"], tuple(Gate.from_dict(g) for g in d["gates"]), d.get("global_phase", 0.0))

    def unitary(self) -> np.ndarray:
        """Dense unitary, column ``k`` = circuit applied to basis state ``k``."""
        dim = 1 << self.n_qubits
        cols = np.eye(dim, dtype=complex)
        ops, params = self.lowered
        for k in range(dim):
            _backend.kernels.apply_ops(cols[k], ops, params)
        return cols.T * np.exp(1j * self.global_phase)


@dataclass
class StateVector:
    amplitudes: np.ndarray
    n_qubits: int = field(init=False)

    def __post_init__(self) -> None:
        self.amplitudes = np.ascontiguousarray(self.amplitudes, dtype=complex)
        dim = self.amplitudes.shape[0]
        if self.amplitudes.ndim != 1 or dim & (dim - 1):
            raise ConfigurationError(f"amplitude vector length {dim} is not a power of two")
        self.n_qubits = dim.bit_length() - 1
        if self.n_qubits > MAX_STATEVECTOR_QUBITS:
            raise CapacityError(f"{self.n_qubits} qubits exceeds statevector limit")

    @classmethod
    def basis(cls, n_qubits: int, index: int = 0) -> StateVector:
        amps = np.zeros(1 << n_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(amps)

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> StateVector:
        """Basis state with qubit ``k`` set to ``bits[k]``."""
        return cls.basis(len(bits), sum(int(b) << k for k, b in enumerate(bits)))

    def copy(self) -> StateVector:
        return StateVector(self.amplitudes.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def probability_one(self, q: int) -> float:
        idx = np.arange(self.amplitudes.shape[0])
        p = float(np.sum(np.abs(self.amplitudes[(idx >> q) & 1 == 1]) ** 2))
        return min(max(p, 0.0), 1.0)

    def inner(self, other: StateVector) -> complex:
        return complex(np.vdot(self.amplitudes, other.amplitudes))


def _gate_matrix(g: Gate) -> tuple[complex, complex, complex, complex]:
    if g.kind == "H":
        return (_SQ, _SQ, _SQ, -_SQ)
    if g.kind in ("X", "CNOT"):
        return (0, 1, 1, 0)
    a = g.angle
    if g.kind == "RY":
        c, s = math.cos(a / 2), math.sin(a / 2)
        return (c, -s, s, c)
    if g.kind == "RZ":
        return (np.exp(-0.5j * a), 0, 0, np.exp(0.5j * a))
    if g.kind == "PHASE":
        return (1, 0, 0, np.exp(1j * a))
    raise AssertionError(g.kind)


def lower(gates: Sequence[Gate]) -> tuple[np.ndarray, np.ndarray]:
    """Flatten gates into ``(ops[G, 5] int64, params[G, 4] complex128)``.

    ``ops`` rows are ``(kind, target, control, control_value, mask)`` with
    ``control = -1`` when unconditioned.
    """
    ops = np.zeros((len(gates), 5), dtype=np.int64)
    params = np.zeros((len(gates), 4), dtype=np.complex128)
    for k, g in enumerate(gates):
        control, cval = (-1, 1) if g.control is None else (g.control, g.control_value)
        if g.kind == "MULTIRZ":
            mask = sum(1 << q for q in g.qubits)
            ops[k] = (1, -1, control, cval, mask)
            params[k, 0] = np.exp(-0.5j * g.angle)
            params[k, 1] = np.exp(0.5j * g.angle)
        elif g.kind == "CNOT":
            ops[k] = (0, g.qubits[1], g.qubits[0], 1, 0)
            params[k] = _gate_matrix(g)
        else:
            ops[k] = (0, g.qubits[0], control, cval, 0)
            params[k] = _gate_matrix(g)
    return ops, params


def _check_register(state: StateVector, n_qubits: int) -> None:
    if state.n_qubits != n_qubits:
        raise ConfigurationError(f"state has {state.n_qubits} qubits, circuit has {n_qubits}")


def apply_gate(state: StateVector, g: Gate, *, inplace: bool = False) -> StateVector:
    if max(g.touched) >= state.n_qubits:
        raise ConfigurationError(f"gate {g} exceeds register of {state.n_qubits} qubits")
    out = state if inplace else state.copy()
    ops, params = lower([g])
    _backend.kernels.apply_ops(out.amplitudes, ops, params)
    return out


def run_circuit(c: QuantumCircuit, initial: StateVector) -> StateVector:
    _check_register(initial, c.n_qubits)
    out = initial.copy()
    ops, params = c.lowered
    _backend.kernels.apply_ops(out.amplitudes, ops, params)
    if c.global_phase:
        out.amplitudes *= np.exp(1j * c.global_phase)
    return out


def decompose_multirz(g: Gate) -> list[Gate]:
    """CNOT ladder onto the last qubit, (controlled) RZ, then the ladder undone."""
    if g.kind != "MULTIRZ":
        raise ConfigurationError(f"expected MULTIRZ, got {g.kind}")
    qs = g.qubits
    if len(qs) < 2:
        raise ConfigurationError("MULTIRZ decomposition needs at least two qubits")
    ladder = [CNOT(a, b) for a, b in zip(qs[:-1], qs[1:])]
    core = RZ(qs[-1], g.angle)
    if g.is_controlled:
        core = controlled(core, g.control, g.control_value)
    return ladder + [core] + ladder[::-1]


def measure_qubit(state: StateVector, q: int, shots: int, seed: int | None) -> tuple[int, int]:
    """Sample ``shots`` independent preparations; the state is not collapsed."""
    if shots < 1:
        raise ConfigurationError("shots must be >= 1")
    p1 = state.probability_one(q)
    ones = int(np.random.default_rng(seed).binomial(shots, p1))
    return shots - ones, ones


def expectation(state: StateVector, p: PauliString) -> float:
    if p.n_qubits != state.n_qubits:
        raise ConfigurationError(f"string on {p.n_qubits} qubits, state has {state.n_qubits}")
    if abs(p.coefficient.imag) > 1e-12:
        raise ConfigurationError(f"expectation needs a real coefficient, got {p.coefficient}")
    return float(np.vdot(state.amplitudes, pauli_action(p, state.amplitudes)).real)
