import numpy as np
import pytest

from polaronsim import _backend
from polaronsim.circuit import CNOT, MULTIRZ, PHASE, RY, RZ, H, QuantumCircuit, X, controlled


@pytest.fixture(params=_backend.available())
def backend(request):
    prev = _backend.NAME
    _backend.use(request.param)
    yield request.param
    _backend.use(prev)


def random_circuit(rng: np.random.Generator, n: int, depth: int) -> QuantumCircuit:
    """Random gate list over the full alphabet, including conditioned gates."""
    gates = []
    for _ in range(depth):
        kind = rng.integers(8)
        q = int(rng.integers(n))
        theta = float(rng.uniform(-np.pi, np.pi))
        if kind == 0:
            g = H(q)
        elif kind == 1:
            g = X(q)
        elif kind == 2:
            g = RY(q, theta)
        elif kind == 3:
            g = RZ(q, theta)
        elif kind == 4:
            g = PHASE(q, theta)
        elif n >= 2 and kind == 5:
            a, b = rng.choice(n, 2, replace=False)
            g = CNOT(int(a), int(b))
        elif n >= 2 and kind == 6:
            k = int(rng.integers(1, n + 1))
            g = MULTIRZ(theta, [int(v) for v in rng.choice(n, k, replace=False)])
        elif n >= 2:
            a, b = rng.choice(n, 2, replace=False)
            inner = [H(int(b)), RZ(int(b), theta), RY(int(b), theta), X(int(b))][int(rng.integers(4))]
            g = controlled(inner, int(a), int(rng.integers(2)))
        else:
            g = H(q)
        gates.append(g)
    return QuantumCircuit(n, tuple(gates))


def random_state(rng: np.random.Generator, n: int) -> np.ndarray:
    v = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    return v / np.linalg.norm(v)


def random_pauli_hamiltonian(rng: np.random.Generator, n: int, n_terms: int, scale: float = 1.0):
    """Hermitian Pauli sum with random letters and real coefficients."""
    from polaronsim.jw import PauliHamiltonian, PauliString

    terms = []
    for _ in range(n_terms):
        letters = "".join(rng.choice(list("IXYZ"), n))
        terms.append(PauliString(float(rng.normal(scale=scale)), letters))
    return PauliHamiltonian(n, terms)


def expm_hermitian(m: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i m t)`` by numpy eigendecomposition (test-side oracle)."""
    w, v = np.linalg.eigh(m)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


_ACCEPTANCE: list[str] = []


@pytest.fixture
def record():
    """Append one PASS/FAIL line per acceptance criterion to the terminal summary."""

    def _record(number: str, ok: bool, detail: str) -> bool:
        _ACCEPTANCE.append(f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}")
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
