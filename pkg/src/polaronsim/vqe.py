"""Variational ground-state search with a hardware-efficient ansatz and SPSA.

The ansatz applies ``layers + 1`` rounds of per-qubit RY rotations separated
by CNOT chains (line by default, ring optional) to ``|0...0>`` and then flips
the reference occupation with X gates. The chains would permute a non-zero
basis state, so the flips come last: all-zero angles give exactly the
reference basis state.
"""

from __future__ import annotations

import io
from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Literal, Sequence

import numpy as np

from .circuit import CNOT, PHASE, RY, Gate, H, QuantumCircuit, StateVector, X, expectation, run_circuit
from .errors import ConfigurationError
from .jw import MAX_DENSE_QUBITS, PauliHamiltonian, PauliString, hamiltonian_to_matrix

Objective = Callable[[np.ndarray], float]


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    layers: int = 2
    entangler: Literal["line", "ring"] = "line"
    reference: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if self.n_qubits < 1:
            raise ConfigurationError("ansatz needs at least one qubit")
        if self.layers < 0:
            raise ConfigurationError("layers must be >= 0")
        if self.entangler not in ("line", "ring"):
            raise ConfigurationError(f"unknown entangler {self.entangler!r}")
        ref = self.reference
        if ref is not None:
            ref = tuple(int(b) for b in ref)
            if len(ref) != self.n_qubits or any(b not in (0, 1) for b in ref):
                raise ConfigurationError(f"reference must be {self.n_qubits} bits")
            object.__setattr__(self, "reference", ref)

    @property
    def parameter_count(self) -> int:
        return self.n_qubits * (self.layers + 1)

    def _pairs(self) -> list[tuple[int, int]]:
        n = self.n_qubits
        pairs = [(q, q + 1) for q in range(n - 1)]
        if self.entangler == "ring" and n > 2:
            pairs.append((n - 1, 0))
        return pairs

    def circuit(self, params: Sequence[float]) -> QuantumCircuit:
        theta = np.asarray(params, dtype=float).ravel()
        if theta.size != self.parameter_count:
            raise ConfigurationError(f"expected {self.parameter_count} parameters, got {theta.size}")
        n = self.n_qubits
        gates: list[Gate] = []
        for layer in range(self.layers + 1):
            if layer:
                gates += [CNOT(a, b) for a, b in self._pairs()]
            gates += [RY(q, float(theta[layer * n + q])) for q in range(n)]
        gates += [X(q) for q, b in enumerate(self.reference or ()) if b]
        return QuantumCircuit(n, tuple(gates))

    def state(self, params: Sequence[float]) -> StateVector:
        return run_circuit(self.circuit(params), StateVector.basis(self.n_qubits, 0))


def _rotate_to_z(p: PauliString) -> list[Gate]:
    gates: list[Gate] = []
    for q in p.support:
        if p.letters[q] == "X":
            gates.append(H(q))
        elif p.letters[q] == "Y":
            gates += [PHASE(q, -np.pi / 2), H(q)]
    return gates


def _parity_signs(n_qubits: int, support: Sequence[int]) -> np.ndarray:
    idx = np.arange(1 << n_qubits)
    par = np.zeros_like(idx)
    for q in support:
        par ^= (idx >> q) & 1
    return 1 - 2 * par


class _DenseCache:
    """Dense matrix of ``h`` computed once per Hamiltonian object."""

    def __init__(self) -> None:
        self._store: dict[int, tuple[PauliHamiltonian, np.ndarray]] = {}

    def get(self, h: PauliHamiltonian) -> np.ndarray:
        hit = self._store.get(id(h))
        if hit is None or hit[0] is not h:
            hit = (h, hamiltonian_to_matrix(h))
            self._store[id(h)] = hit
        return hit[1]


_dense = _DenseCache()


def energy(
    params: Sequence[float],
    h: PauliHamiltonian,
    ansatz: AnsatzSpec,
    shots: int | None = None,
    rng: np.random.Generator | None = None,
) -> float:
    """``<psi(theta)|h|psi(theta)>``, exact or estimated term by term from shots."""
    if h.n_qubits != ansatz.n_qubits:
        raise ConfigurationError(f"Hamiltonian on {h.n_qubits} qubits, ansatz on {ansatz.n_qubits}")
    psi = ansatz.state(params)
    if shots is None:
        if h.n_qubits <= MAX_DENSE_QUBITS:
            amp = psi.amplitudes
            return float(np.vdot(amp, _dense.get(h) @ amp).real)
        return float(sum(expectation(psi, p) for p in h.terms if not p.is_identity) + h.identity_coefficient())
    if shots < 1:
        raise ConfigurationError("shots must be >= 1")
    rng = rng if rng is not None else np.random.default_rng()
    total = h.identity_coefficient()
    circ = ansatz.circuit(params)
    for p in h.terms:
        if p.is_identity:
            continue
        rotated = run_circuit(circ.extended(_rotate_to_z(p)), StateVector.basis(h.n_qubits, 0))
        probs = np.abs(rotated.amplitudes) ** 2
        counts = rng.multinomial(shots, probs / probs.sum())
        mean = float(counts @ _parity_signs(h.n_qubits, p.support)) / shots
        total += p.coefficient.real * mean
    return float(total)


@dataclass(frozen=True)
class SPSAConfig:
    iterations: int = 300
    a: float = 0.2
    c: float = 0.1
    alpha: float = 0.602
    gamma: float = 0.101
    A: float | None = None
    seed: int = 0
    shots: int | None = None
    init_scale: float = 0.1

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise ConfigurationError("iterations must be >= 1")
        if self.a <= 0 or self.c <= 0:
            raise ConfigurationError("SPSA gains a and c must be positive")
        if not 0 < self.alpha <= 1:
            raise ConfigurationError("alpha must be in (0, 1]")
        if not 0 < self.gamma <= 0.5:
            raise ConfigurationError("gamma must be in (0, 1/2]")
        if self.shots is not None and self.shots < 1:
            raise ConfigurationError("shots must be >= 1")

    @property
    def stability(self) -> float:
        return self.iterations / 10 if self.A is None else self.A


@dataclass(frozen=True)
class SPSATrace:
    parameters: np.ndarray
    trace: np.ndarray
    best_energy: float
    best_parameters: np.ndarray


def spsa(objective: Objective, x0: Sequence[float], cfg: SPSAConfig, rng: np.random.Generator) -> SPSATrace:
    """Minimize ``objective``; ``trace[k]`` is the objective after update ``k``."""
    x = np.array(x0, dtype=float)
    trace = np.empty(cfg.iterations)
    best_x, best = x.copy(), np.inf
    for k in range(cfg.iterations):
        ak = cfg.a / (k + 1 + cfg.stability) ** cfg.alpha
        ck = cfg.c / (k + 1) ** cfg.gamma
        delta = rng.choice((-1.0, 1.0), size=x.size)
        diff = objective(x + ck * delta) - objective(x - ck * delta)
        x = x - ak * diff / (2 * ck) * delta
        trace[k] = objective(x)
        if trace[k] < best:
            best, best_x = float(trace[k]), x.copy()
    return SPSATrace(x, trace, best, best_x)


@dataclass(frozen=True)
class VQEResult:
    best_energy: float
    best_parameters: np.ndarray
    trace: np.ndarray
    reference_energy: float
    final_parameters: np.ndarray | None = None
    shots: int | None = None

    @property
    def error(self) -> float:
        return self.best_energy - self.reference_energy

    @cached_property
    def running_best(self) -> np.ndarray:
        return np.minimum.accumulate(self.trace)

    def to_csv(self, digits: int = 8) -> str:
        buf = io.StringIO()
        buf.write("iteration,energy,best_energy\n")
        for k, (e, b) in enumerate(zip(self.trace, self.running_best)):
            buf.write(f"{k},{e:.{digits}f},{b:.{digits}f}\n")
        return buf.getvalue()


def spsa_minimize(h: PauliHamiltonian, ansatz: AnsatzSpec, cfg: SPSAConfig | None = None) -> VQEResult:
    from .ed_oracle import assemble, ground_state

    cfg = cfg or SPSAConfig()
    e_ref, _ = ground_state(assemble(h))
    rng = np.random.default_rng(cfg.seed)
    x0 = rng.normal(0.0, cfg.init_scale, ansatz.parameter_count)
    shot_rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, 1]))

    def objective(theta: np.ndarray) -> float:
        return energy(theta, h, ansatz, cfg.shots, shot_rng)

    run = spsa(objective, x0, cfg, rng)
    return VQEResult(run.best_energy, run.best_parameters, run.trace, e_ref, run.parameters, cfg.shots)
