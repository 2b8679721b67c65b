"""First-order product-formula compilation of ``exp(-iHt)``.

Each Pauli term ``c P`` becomes ``exp(-i c dt P)``: basis changes to the Z
basis, a CNOT parity ladder around one RZ(2 c dt), and the basis changes
undone. The identity term is a phase, kept on the circuit (uncontrolled) or
emitted as a PHASE on the control qubit (controlled variant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Sequence

from .circuit import MULTIRZ, PHASE, RZ, Gate, H, QuantumCircuit, X, controlled, decompose_multirz
from .errors import CompileError, ConfigurationError
from .jw import PauliHamiltonian, PauliString

DEFAULT_N_STEPS = 15

TermOrder = Literal["kinetic_first", "interaction_first"] | Sequence[str]


def _sort_key(p: PauliString) -> tuple:
    return (p.support, p.letters)


def order_terms(h: PauliHamiltonian, order: TermOrder = "kinetic_first") -> tuple[PauliString, ...]:
    """Non-identity terms in exponentiation order.

    ``kinetic_first`` puts off-diagonal (hopping) strings before diagonal
    (interaction, onsite) strings, each group by ascending qubit support.
    An explicit sequence of letter strings must be a permutation of the
    non-identity terms.
    """
    terms = [t for t in h.terms if not t.is_identity]
    if isinstance(order, str):
        kinetic = sorted((t for t in terms if not t.is_diagonal), key=_sort_key)
        diagonal = sorted((t for t in terms if t.is_diagonal), key=_sort_key)
        if order == "kinetic_first":
            return tuple(kinetic + diagonal)
        if order == "interaction_first":
            return tuple(diagonal + kinetic)
        raise ConfigurationError(f"unknown term order {order!r}")
    by_letters = {t.letters: t for t in terms}
    if sorted(order) != sorted(by_letters):
        raise ConfigurationError("explicit term order is not a permutation of the Hamiltonian terms")
    return tuple(by_letters[k] for k in order)


@dataclass(frozen=True)
class TrotterPlan:
    hamiltonian: PauliHamiltonian
    total_time: float
    n_steps: int = DEFAULT_N_STEPS
    order: TermOrder = "kinetic_first"

    def __post_init__(self) -> None:
        if self.n_steps < 1:
            raise ConfigurationError(f"n_steps must be >= 1, got {self.n_steps}")
        if not self.total_time > 0:
            raise ConfigurationError(f"total_time must be positive, got {self.total_time}")
        if not isinstance(self.order, str):
            object.__setattr__(self, "order", tuple(self.order))

    @property
    def dt(self) -> float:
        return self.total_time / self.n_steps

    @property
    def n_qubits(self) -> int:
        return self.hamiltonian.n_qubits

    @property
    def term_order(self) -> tuple[PauliString, ...]:
        return order_terms(self.hamiltonian, self.order)

    @property
    def identity_phase(self) -> float:
        """Phase ``-c_I t`` contributed by the identity component."""
        return -self.hamiltonian.identity_coefficient() * self.total_time


def compile_term(
    term: PauliString,
    dt: float,
    *,
    offset: int = 0,
    control: int | None = None,
    use_multirz: bool = False,
) -> list[Gate]:
    """Gates for ``exp(-i c dt P)`` with only the RZ core conditioned on ``control``."""
    if abs(term.coefficient.imag) > 1e-12:
        raise CompileError(f"cannot exponentiate non-Hermitian term {term}")
    if term.is_identity:
        raise CompileError(f"identity term {term} is a phase, not a gate")
    theta = 2.0 * term.coefficient.real * dt
    support = [offset + q for q in term.support]
    letters = [term.letters[q] for q in term.support]

    pre: list[Gate] = []
    post: list[Gate] = []
    for q, p in zip(support, letters):
        if p == "X":
            pre.append(H(q))
            post.append(H(q))
        elif p == "Y":
            pre += [PHASE(q, -math.pi / 2), H(q)]
            post += [H(q), PHASE(q, math.pi / 2)]

    if len(support) == 1:
        core: list[Gate] = [RZ(support[0], theta)]
        if control is not None:
            core = [controlled(core[0], control)]
    else:
        g = MULTIRZ(theta, support)
        if control is not None:
            g = controlled(g, control)
        core = [g] if use_multirz else decompose_multirz(g)
    return pre + core + post


def _steps(plan: TrotterPlan, offset: int, control: int | None, use_multirz: bool) -> list[Gate]:
    step: list[Gate] = []
    for term in plan.term_order:
        step += compile_term(term, plan.dt, offset=offset, control=control, use_multirz=use_multirz)
    return step * plan.n_steps


def trotter_circuit(plan: TrotterPlan, *, use_multirz: bool = False) -> QuantumCircuit:
    """Uncontrolled product-formula circuit; the identity phase rides on ``global_phase``."""
    gates = _steps(plan, 0, None, use_multirz)
    return QuantumCircuit(plan.n_qubits, tuple(gates), plan.identity_phase)


def controlled_trotter(
    plan: TrotterPlan,
    control: int,
    control_value: int = 1,
    *,
    qubit_offset: int | None = None,
    n_qubits: int | None = None,
    use_multirz: bool = False,
) -> QuantumCircuit:
    """Product-formula circuit acting only when ``control`` holds ``control_value``.

    The system register occupies qubits ``qubit_offset .. qubit_offset+n-1``
    (default: shifted by one when the control is qubit 0). Conditioning on
    0 is realized by X-conjugating the control around a 1-conditioned body.
    """
    n_sys = plan.n_qubits
    if qubit_offset is None:
        qubit_offset = 1 if control == 0 else 0
    if n_qubits is None:
        n_qubits = max(qubit_offset + n_sys, control + 1)
    if qubit_offset <= control < qubit_offset + n_sys:
        raise ConfigurationError(f"control qubit {control} overlaps the system register")
    if control_value not in (0, 1):
        raise ConfigurationError(f"control value must be 0 or 1, got {control_value}")
    body = _steps(plan, qubit_offset, control, use_multirz)
    if plan.identity_phase:
        body.append(PHASE(control, plan.identity_phase))
    if control_value == 0:
        body = [X(control), *body, X(control)]
    return QuantumCircuit(n_qubits, tuple(body))

