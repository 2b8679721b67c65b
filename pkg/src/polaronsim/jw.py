"""Pauli-string algebra and the Jordan-Wigner fermion-to-qubit mapping.

Qubit ``k`` is bit ``k`` (least significant first) of the computational
basis index. ``PauliString.letters[k]`` is the operator on qubit ``k``, so
the text form ``"(-0.5+0j) * XXI"`` lists qubit 0 first.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping

import numpy as np

from .errors import CapacityError, ConfigurationError
from .hamiltonian import FermionHamiltonian

MAX_DENSE_QUBITS = 14
MAX_MODE_OPERATOR_MODES = 8
PRUNE_TOL = 1e-12

# (a, b) -> (phase, c) with a*b = phase * c
_PRODUCT: dict[tuple[str, str], tuple[complex, str]] = {}
for _p in "IXYZ":
    _PRODUCT[("I", _p)] = (1, _p)
    _PRODUCT[(_p, "I")] = (1, _p)
    _PRODUCT[(_p, _p)] = (1, "I")
for _a, _b, _c in (("X", "Y", "Z"), ("Y", "Z", "X"), ("Z", "X", "Y")):
    _PRODUCT[(_a, _b)] = (1j, _c)
    _PRODUCT[(_b, _a)] = (-1j, _c)


@dataclass(frozen=True)
class PauliString:
    coefficient: complex
    letters: str

    def __post_init__(self) -> None:
        if any(c not in "IXYZ" for c in self.letters):
            raise ConfigurationError(f"invalid Pauli letters {self.letters!r}")
        object.__setattr__(self, "coefficient", complex(self.coefficient))

    @classmethod
    def from_ops(cls, n_qubits: int, ops: Mapping[int, str], coefficient: complex = 1.0) -> PauliString:
        letters = ["I"] * n_qubits
        for q, p in ops.items():
            letters[q] = p
        return cls(coefficient, "".join(letters))

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(k for k, c in enumerate(self.letters) if c != "I")

    @property
    def is_identity(self) -> bool:
        return all(c == "I" for c in self.letters)

    @property
    def is_diagonal(self) -> bool:
        return all(c in "IZ" for c in self.letters)

    @property
    def x_mask(self) -> int:
        return sum(1 << k for k, c in enumerate(self.letters) if c in "XY")

    @property
    def z_mask(self) -> int:
        return sum(1 << k for k, c in enumerate(self.letters) if c in "YZ")

    @property
    def n_y(self) -> int:
        return self.letters.count("Y")

    def commutes_with(self, other: PauliString) -> bool:
        """Symplectic rule: strings commute iff they anticommute on an even number of sites."""
        if self.n_qubits != other.n_qubits:
            raise ConfigurationError("register size mismatch")
        x1, z1, x2, z2 = self.x_mask, self.z_mask, other.x_mask, other.z_mask
        return bin((x1 & z2) ^ (z1 & x2)).count("1") % 2 == 0

    def __mul__(self, other: PauliString | complex) -> PauliString:
        if not isinstance(other, PauliString):
            return PauliString(self.coefficient * other, self.letters)
        if self.n_qubits != other.n_qubits:
            raise ConfigurationError("register size mismatch")
        phase: complex = self.coefficient * other.coefficient
        out = []
        for a, b in zip(self.letters, other.letters):
            ph, c = _PRODUCT[(a, b)]
            phase *= ph
            out.append(c)
        return PauliString(phase, "".join(out))

    __rmul__ = __mul__

    def __str__(self) -> str:
        return f"{self.coefficient!r} * {self.letters}"


class PauliHamiltonian:
    """Weighted sum of Pauli strings on one register, like terms merged."""

    def __init__(self, n_qubits: int, terms: Iterable[PauliString] | Mapping[str, complex] = ()):
        self.n_qubits = int(n_qubits)
        self._terms: dict[str, complex] = {}
        items = terms.items() if isinstance(terms, Mapping) else ((t.letters, t.coefficient) for t in terms)
        for letters, coeff in items:
            if len(letters) != self.n_qubits:
                raise ConfigurationError(f"term {letters!r} does not match register of {self.n_qubits} qubits")
            self._terms[letters] = self._terms.get(letters, 0j) + complex(coeff)
        self._prune()

    def _prune(self, tol: float = PRUNE_TOL) -> None:
        self._terms = {k: v for k, v in self._terms.items() if abs(v) > tol}

    @property
    def terms(self) -> tuple[PauliString, ...]:
        return tuple(PauliString(c, k) for k, c in sorted(self._terms.items()))

    def coefficient(self, letters: str) -> complex:
        return self._terms.get(letters, 0j)

    def __iter__(self) -> Iterator[PauliString]:
        return iter(self.terms)

    def __len__(self) -> int:
        return len(self._terms)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PauliHamiltonian):
            return NotImplemented
        if self.n_qubits != other.n_qubits or set(self._terms) != set(other._terms):
            return False
        return all(abs(self._terms[k] - other._terms[k]) <= PRUNE_TOL for k in self._terms)

    def __add__(self, other: PauliHamiltonian) -> PauliHamiltonian:
        merged = dict(self._terms)
        for k, v in other._terms.items():
            merged[k] = merged.get(k, 0j) + v
        return PauliHamiltonian(self.n_qubits, merged)

    def __mul__(self, other: PauliHamiltonian | complex) -> PauliHamiltonian:
        if not isinstance(other, PauliHamiltonian):
            return PauliHamiltonian(self.n_qubits, {k: v * other for k, v in self._terms.items()})
        out: dict[str, complex] = {}
        for a in self.terms:
            for b in other.terms:
                p = a * b
                out[p.letters] = out.get(p.letters, 0j) + p.coefficient
        return PauliHamiltonian(self.n_qubits, out)

    __rmul__ = __mul__

    def dagger(self) -> PauliHamiltonian:
        return PauliHamiltonian(self.n_qubits, {k: v.conjugate() for k, v in self._terms.items()})

    @property
    def is_hermitian(self) -> bool:
        return all(abs(v.imag) <= PRUNE_TOL for v in self._terms.values())

    def identity_coefficient(self) -> float:
        return self._terms.get("I" * self.n_qubits, 0j).real

    def __str__(self) -> str:
        return "\n".join(str(t) for t in self.terms)

    def __repr__(self) -> str:
        return f"PauliHamiltonian(n_qubits={self.n_qubits}, terms={len(self)})"


@lru_cache(maxsize=None)
def _ladder(mode: int, dagger: bool, n: int) -> PauliHamiltonian:
    z_tail = "Z" * mode
    pad = "I" * (n - mode - 1)
    sign = -1 if dagger else 1
    return PauliHamiltonian(n, {z_tail + "X" + pad: 0.5, z_tail + "Y" + pad: sign * 0.5j})


def ladder_operator(mode: int, dagger: bool, n_modes: int) -> PauliHamiltonian:
    """Qubit image of ``c_mode`` (or its adjoint) with a Z tail on lower modes."""
    if not 0 <= mode < n_modes:
        raise ConfigurationError(f"mode {mode} out of range for {n_modes} modes")
    return _ladder(mode, dagger, n_modes)


def number_operator(mode: int, n_modes: int) -> PauliHamiltonian:
    return ladder_operator(mode, True, n_modes) * ladder_operator(mode, False, n_modes)


def jordan_wigner(h: FermionHamiltonian) -> PauliHamiltonian:
    n = h.n_modes
    out = PauliHamiltonian(n)
    for term in h.terms:
        if term.kind == "hop":
            i, j = term.modes
            op = ladder_operator(i, True, n) * ladder_operator(j, False, n)
            op = op + ladder_operator(j, True, n) * ladder_operator(i, False, n)
        elif term.kind == "number":
            op = number_operator(term.modes[0], n)
        else:
            i, j = term.modes
            op = number_operator(i, n) * number_operator(j, n)
        out = out + op * term.coefficient
    return out


def pauli_to_matrix(p: PauliString) -> np.ndarray:
    n = p.n_qubits
    if n > MAX_DENSE_QUBITS:
        raise CapacityError(f"{n} qubits exceeds dense limit of {MAX_DENSE_QUBITS}")
    dim = 1 << n
    idx = np.arange(dim)
    phase = _pauli_phases(idx, p.z_mask) * (1j**p.n_y)
    m = np.zeros((dim, dim), dtype=complex)
    m[idx ^ p.x_mask, idx] = p.coefficient * phase
    return m


def _pauli_phases(idx: np.ndarray, z_mask: int) -> np.ndarray:
    bits = idx & z_mask
    parity = np.zeros_like(bits)
    while np.any(bits):
        parity ^= bits & 1
        bits = bits >> 1
    return 1.0 - 2.0 * parity


def pauli_action(p: PauliString, amplitudes: np.ndarray) -> np.ndarray:
    """``P |psi>`` without building the matrix."""
    dim = amplitudes.shape[-1]
    idx = np.arange(dim)
    out = np.empty_like(amplitudes, dtype=complex)
    out[..., idx ^ p.x_mask] = amplitudes * (p.coefficient * (1j**p.n_y) * _pauli_phases(idx, p.z_mask))
    return out


def hamiltonian_to_matrix(h: PauliHamiltonian) -> np.ndarray:
    if h.n_qubits > MAX_DENSE_QUBITS:
        raise CapacityError(f"{h.n_qubits} qubits exceeds dense limit of {MAX_DENSE_QUBITS}")
    dim = 1 << h.n_qubits
    m = np.zeros((dim, dim), dtype=complex)
    for t in h.terms:
        m += pauli_to_matrix(t)
    return m


def mode_operator_matrix(mode: int, dagger: bool, n_modes: int) -> np.ndarray:
    if n_modes > MAX_MODE_OPERATOR_MODES:
        raise CapacityError(f"mode operator matrices limited to {MAX_MODE_OPERATOR_MODES} modes")
    if not 0 <= mode < n_modes:
        raise ConfigurationError(f"mode {mode} out of range for {n_modes} modes")
    return hamiltonian_to_matrix(ladder_operator(mode, dagger, n_modes))
