"""Exact diagonalization reference for every circuit-level result.

The overlap ``S(t)`` is computed directly on the system register from two
eigendecompositions; no ancilla or gate is involved, so this path is
independent of the circuit engine it checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import TYPE_CHECKING

import numpy as np

from .circuit import StateVector
from .errors import ConfigurationError, NumericalError
from .jw import PauliHamiltonian, hamiltonian_to_matrix

if TYPE_CHECKING:
    from .ramsey import RamseyConfig, RamseySignal

HERMITIAN_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class DenseOperator:
    matrix: np.ndarray
    n_qubits: int

    def __post_init__(self) -> None:
        dim = 1 << self.n_qubits
        if self.matrix.shape != (dim, dim):
            raise ConfigurationError(f"matrix shape {self.matrix.shape} does not match {self.n_qubits} qubits")

    @property
    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def require_hermitian(self) -> None:
        if self.hermiticity_error > HERMITIAN_TOL:
            raise NumericalError(f"operator is not Hermitian (max deviation {self.hermiticity_error:.3g})")

    @cached_property
    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        self.require_hermitian()
        return np.linalg.eigh(self.matrix)


def assemble(h: PauliHamiltonian) -> DenseOperator:
    op = DenseOperator(hamiltonian_to_matrix(h), h.n_qubits)
    op.require_hermitian()
    return op


def evolve_exact(op: DenseOperator, t: float, state: StateVector) -> StateVector:
    """``exp(-i M t) |psi>`` via the cached eigendecomposition."""
    if state.n_qubits != op.n_qubits:
        raise ConfigurationError("register size mismatch")
    w, v = op.eigh
    coeffs = v.conj().T @ state.amplitudes
    return StateVector(v @ (np.exp(-1j * w * t) * coeffs))


def overlap_series(h0: DenseOperator, h: DenseOperator, psi: StateVector, times) -> np.ndarray:
    """``<psi| e^{i H0 t} e^{-i H t} |psi>`` for every ``t``, from one decomposition each."""
    w0, v0 = h0.eigh
    w, v = h.eigh
    c0 = v0.conj().T @ psi.amplitudes
    c = v.conj().T @ psi.amplitudes
    bridge = v0.conj().T @ v
    t = np.asarray(times, dtype=float)[:, None]
    left = np.conj(c0)[None, :] * np.exp(1j * w0[None, :] * t)
    right = c[None, :] * np.exp(-1j * w[None, :] * t)
    return np.einsum("tn,nm,tm->t", left, bridge, right)


def exact_signal(config: RamseyConfig) -> RamseySignal:
    from .ramsey import RamseySignal

    h_full, h_bath = config.pauli_hamiltonians()
    psi = StateVector.from_bits(config.occupation)
    s = overlap_series(assemble(h_bath), assemble(h_full), psi, config.time_grid)
    return RamseySignal.from_complex(config.time_grid, s, mode="ed")


def ground_state(op: DenseOperator) -> tuple[float, StateVector]:
    w, v = op.eigh
    vec = v[:, 0]
    # fix the gauge so repeated calls agree
    k = int(np.argmax(np.abs(vec)))
    vec = vec * (abs(vec[k]) / vec[k])
    return float(w[0]), StateVector(vec)
