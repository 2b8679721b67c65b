"""Lattice impurity model in second quantization.

The model is an extended Hubbard chain of ``L`` bath sites plus one static
impurity mode::

    H = sum_i eps_i n_i + sign*J sum_<ij> (c_i^dag c_j + h.c.)
        + U_ff sum_i n_iu n_id + U_imp sum_{i in S} n_imp n_i

Mode layout is fixed: impurity first (index 0), then bath sites ascending,
spin-up before spin-down when the bath is spinful.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Literal, Sequence

from .errors import ConfigurationError, DivergenceError

TermKind = Literal["hop", "number", "density_density"]

# Geometric constant of the cubic-lattice Green's function at zero energy.
LATTICE_SUM_CONSTANT = 0.243


@dataclass(frozen=True)
class LatticeSpec:
    """Open 1D bath chain with an optional impurity mode.

    ``impurity_sites`` lists the bath sites the impurity interacts with;
    ``None`` couples it to every bath mode.
    """

    bath_sites: int
    spinful: bool = False
    impurity_present: bool = True
    impurity_sites: tuple[int, ...] | None = None

    def __post_init__(self) -> None:
        if int(self.bath_sites) < 1:
            raise ConfigurationError(f"bath_sites must be >= 1, got {self.bath_sites}")
        if self.impurity_sites is not None:
            sites = tuple(int(s) for s in self.impurity_sites)
            for s in sites:
                if not 0 <= s < self.bath_sites:
                    raise ConfigurationError(f"impurity site {s} outside bath of {self.bath_sites} sites")
            if len(set(sites)) != len(sites):
                raise ConfigurationError(f"duplicate impurity sites {sites}")
            object.__setattr__(self, "impurity_sites", sites)

    @property
    def adjacency(self) -> tuple[tuple[int, int], ...]:
        return tuple((i, i + 1) for i in range(self.bath_sites - 1))

    @property
    def n_modes(self) -> int:
        per_site = 2 if self.spinful else 1
        return per_site * self.bath_sites + (1 if self.impurity_present else 0)

    @property
    def coupled_sites(self) -> tuple[int, ...]:
        if self.impurity_sites is None:
            return tuple(range(self.bath_sites))
        return self.impurity_sites

    def layout(self) -> dict[str, int]:
        """Role name -> mode index."""
        out: dict[str, int] = {}
        idx = 0
        if self.impurity_present:
            out["impurity"] = idx
            idx += 1
        for site in range(self.bath_sites):
            if self.spinful:
                out[f"bath{site}_up"] = idx
                out[f"bath{site}_down"] = idx + 1
                idx += 2
            else:
                out[f"bath{site}"] = idx
                idx += 1
        return out

    def bath_modes(self, site: int) -> tuple[int, ...]:
        offset = 1 if self.impurity_present else 0
        if self.spinful:
            return (offset + 2 * site, offset + 2 * site + 1)
        return (offset + site,)


@dataclass(frozen=True)
class HubbardParams:
    """Model couplings in units of the hopping amplitude.

    ``hopping_sign`` multiplies ``hopping_J`` in the kinetic term; -1 gives the
    usual tight-binding ``-J`` convention.
    """

    hopping_J: float = 1.0
    onsite_eps: tuple[float, ...] | None = None
    U_ff: float = 0.0
    U_imp: float = 0.0
    hopping_sign: int = -1

    def __post_init__(self) -> None:
        if not self.hopping_J > 0:
            raise ConfigurationError(f"hopping_J must be positive, got {self.hopping_J}")
        if self.hopping_sign not in (-1, 1):
            raise ConfigurationError(f"hopping_sign must be +1 or -1, got {self.hopping_sign}")
        if self.onsite_eps is not None:
            object.__setattr__(self, "onsite_eps", tuple(float(e) for e in self.onsite_eps))

    def eps_for(self, lattice: LatticeSpec) -> tuple[float, ...]:
        if self.onsite_eps is None:
            return (0.0,) * lattice.bath_sites
        if len(self.onsite_eps) != lattice.bath_sites:
            raise ConfigurationError(
                f"onsite_eps has {len(self.onsite_eps)} entries, lattice has {lattice.bath_sites} sites"
            )
        return self.onsite_eps


@dataclass(frozen=True)
class FermionTerm:
    """One term of the model.

    ``hop`` terms are stored once with ``i < j`` and an implied Hermitian
    conjugate; ``number`` terms carry one mode; ``density_density`` two
    distinct modes.
    """

    kind: TermKind
    modes: tuple[int, ...]
    coefficient: float

    def __post_init__(self) -> None:
        modes = tuple(int(m) for m in self.modes)
        object.__setattr__(self, "modes", modes)
        if self.kind == "number":
            if len(modes) != 1:
                raise ConfigurationError(f"number term needs one mode, got {modes}")
        elif self.kind in ("hop", "density_density"):
            if len(modes) != 2 or modes[0] == modes[1]:
                raise ConfigurationError(f"{self.kind} term needs two distinct modes, got {modes}")
            if self.kind == "hop" and modes[0] > modes[1]:
                object.__setattr__(self, "modes", (modes[1], modes[0]))
        else:
            raise ConfigurationError(f"unknown term kind {self.kind!r}")

    def touches(self, mode: int) -> bool:
        return mode in self.modes


@dataclass(frozen=True)
class FermionHamiltonian:
    terms: tuple[FermionTerm, ...]
    layout: dict[str, int] = field(compare=False)
    n_modes: int

    def count(self, kind: TermKind) -> int:
        return sum(1 for t in self.terms if t.kind == kind)

    def __len__(self) -> int:
        return len(self.terms)


def build_hamiltonian(lattice: LatticeSpec, params: HubbardParams) -> FermionHamiltonian:
    """Assemble the impurity-bath model for ``lattice``.

    Terms are emitted in a fixed order: hopping, onsite energies, bath
    onsite interaction, impurity interaction. Zero-coefficient terms are
    skipped.
    """
    eps = params.eps_for(lattice)
    t = params.hopping_sign * params.hopping_J
    terms: list[FermionTerm] = []

    for i, j in lattice.adjacency:
        for mi, mj in zip(lattice.bath_modes(i), lattice.bath_modes(j)):
            terms.append(FermionTerm("hop", (mi, mj), t))

    for site, e in enumerate(eps):
        if e != 0.0:
            for m in lattice.bath_modes(site):
                terms.append(FermionTerm("number", (m,), e))

    if lattice.spinful and params.U_ff != 0.0:
        for site in range(lattice.bath_sites):
            terms.append(FermionTerm("density_density", lattice.bath_modes(site), params.U_ff))

    if lattice.impurity_present and params.U_imp != 0.0:
        for site in lattice.coupled_sites:
            for m in lattice.bath_modes(site):
                terms.append(FermionTerm("density_density", (0, m), params.U_imp))

    return FermionHamiltonian(tuple(terms), lattice.layout(), lattice.n_modes)


def build_bath_hamiltonian(lattice: LatticeSpec, params: HubbardParams) -> FermionHamiltonian:
    """Reference Hamiltonian with the impurity interaction switched off.

    The impurity mode stays in the layout so both Hamiltonians act on the
    same register.
    """
    return build_hamiltonian(lattice, replace(params, U_imp=0.0))


def regularize_coupling(
    g_eff: float,
    lattice_spacing: float = 1.0,
    mass: float = 1.0,
    hbar: float = 1.0,
    *,
    tol: float = 1e-12,
) -> float:
    """Lattice onsite coupling ``U`` reproducing the continuum coupling ``g_eff``.

    Uses ``1/U = 1/g_eff - R`` with ``R = 0.243 m / (hbar^2 b)``.
    """
    if g_eff == 0:
        raise ConfigurationError("g_eff must be nonzero")
    r = LATTICE_SUM_CONSTANT * mass / (hbar**2 * lattice_spacing)
    denom = 1.0 / g_eff - r
    if abs(denom) <= tol * max(1.0, abs(r)):
        raise DivergenceError(f"1/g_eff equals the lattice constant R={r:.6g}: unitary point, U diverges")
    return 1.0 / denom


def reference_lattice() -> LatticeSpec:
    """Two spinless bath modes plus an impurity localized on bath site 0."""
    return LatticeSpec(bath_sites=2, spinful=False, impurity_present=True, impurity_sites=(0,))


def occupation_bits(pattern: Sequence[int] | str, n_modes: int) -> tuple[int, ...]:
    """Normalize an occupation pattern given as a bit string or sequence."""
    if isinstance(pattern, str):
        bits = tuple(int(c) for c in pattern.strip())
    else:
        bits = tuple(int(b) for b in pattern)
    if len(bits) != n_modes:
        raise ConfigurationError(f"occupation pattern has {len(bits)} entries, register has {n_modes} modes")
    if any(b not in (0, 1) for b in bits):
        raise ConfigurationError(f"occupation pattern must be 0/1, got {bits}")
    return bits
