"""Occupation-number registers, state vectors and reduced density matrices.

A register is an ordered list of modes (bosonic, fermionic or two-level),
each truncated at a finite occupation cutoff. The composite Hilbert space
is the tensor product of the per-mode spaces, indexed in mixed radix with
the first declared mode as the most significant digit. Mode order is fixed
at construction: the fermionic sign conventions in :mod:`qwave.operators`
depend on it.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import (
    DuplicateLabelError,
    InvalidCutoffError,
    OccupationOutOfRangeError,
    RegisterMismatchError,
    UnknownModeError,
)

#: Tolerance for state normalization and hermiticity checks.
NORM_ATOL = 1e-10

Occupation = tuple[int, ...]


class ModeKind(Enum):
    BOSON = "boson"
    FERMION = "fermion"
    TWO_LEVEL = "two_level"


class Site(Enum):
    """Spatial region tag for a mode."""

    A = "A"
    B = "B"
    O = "O"
    GLOBAL = "global"


@dataclass(frozen=True)
class ModeSpec:
    """One quantum degree of freedom: label, statistics, cutoff and region."""

    label: str
    kind: ModeKind
    cutoff: int = 1
    site: Site = Site.GLOBAL

    def __post_init__(self):
        if self.kind in (ModeKind.FERMION, ModeKind.TWO_LEVEL):
            if self.cutoff != 1:
                raise InvalidCutoffError(
                    f"mode {self.label!r}: {self.kind.value} modes have cutoff 1, "
                    f"got {self.cutoff}"
                )
        elif self.cutoff < 1:
            raise InvalidCutoffError(
                f"mode {self.label!r}: boson cutoff must be >= 1, got {self.cutoff}"
            )

    @property
    def dim(self) -> int:
        return self.cutoff + 1


def boson(label: str, cutoff: int = 1, site: Site = Site.GLOBAL) -> ModeSpec:
    return ModeSpec(label, ModeKind.BOSON, cutoff, site)


def fermion(label: str, site: Site = Site.GLOBAL) -> ModeSpec:
    return ModeSpec(label, ModeKind.FERMION, 1, site)


def two_level(label: str, site: Site = Site.GLOBAL) -> ModeSpec:
    return ModeSpec(label, ModeKind.TWO_LEVEL, 1, site)


class ModeRegister:
    """Ordered collection of modes defining a composite Hilbert space.

    Basis states are occupation tuples ``(n_0, ..., n_{k-1})`` mapped to flat
    indices in mixed radix, first mode most significant. The order of the
    modes is part of the physics: fermionic operators anticommute through a
    sign string that counts occupations of earlier-declared fermion modes.
    """

    def __init__(self, modes: Sequence[ModeSpec]):
        modes = tuple(modes)
        labels = [m.label for m in modes]
        if len(set(labels)) != len(labels):
            dupes = sorted({l for l in labels if labels.count(l) > 1})
            raise DuplicateLabelError(f"duplicate mode labels: {dupes}")
        self.modes = modes
        self.dims = tuple(m.dim for m in modes)
        self.dim = int(np.prod(self.dims, initial=1))
        self._position = {m.label: i for i, m in enumerate(modes)}
        self._occupations: np.ndarray | None = None

    def __eq__(self, other) -> bool:
        return isinstance(other, ModeRegister) and self.modes == other.modes

    def __hash__(self) -> int:
        return hash(self.modes)

    def __repr__(self) -> str:
        parts = ", ".join(f"{m.label}:{m.kind.value}({m.cutoff})" for m in self.modes)
        return f"ModeRegister[{parts}]"

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.modes)

    def position(self, label: str) -> int:
        try:
            return self._position[label]
        except KeyError:
            raise UnknownModeError(f"no mode labeled {label!r} in {self!r}") from None

    def mode(self, label: str) -> ModeSpec:
        return self.modes[self.position(label)]

    def fermion_positions(self) -> tuple[int, ...]:
        return tuple(
            i for i, m in enumerate(self.modes) if m.kind is ModeKind.FERMION
        )

    def index_of(self, occ: Sequence[int]) -> int:
        """Flat basis index of an occupation tuple (first mode most significant)."""
        occ = tuple(occ)
        if len(occ) != len(self.modes):
            raise OccupationOutOfRangeError(
                f"occupation length {len(occ)} != {len(self.modes)} modes"
            )
        for n, m in zip(occ, self.modes):
            if not 0 <= n <= m.cutoff:
                raise OccupationOutOfRangeError(
                    f"occupation {n} out of range for mode {m.label!r} "
                    f"(cutoff {m.cutoff})"
                )
        if not occ:
            return 0
        return int(np.ravel_multi_index(occ, self.dims))

    def occupation_of(self, index: int) -> Occupation:
        """Inverse of :meth:`index_of`."""
        if not 0 <= index < self.dim:
            raise OccupationOutOfRangeError(f"index {index} out of range [0, {self.dim})")
        if not self.modes:
            return ()
        return tuple(int(x) for x in np.unravel_index(index, self.dims))

    def occupation_table(self) -> np.ndarray:
        """All occupations as a (dim, n_modes) int array, row i = occupation_of(i)."""
        if self._occupations is None:
            if not self.modes:
                table = np.zeros((1, 0), dtype=np.int64)
            else:
                cols = np.unravel_index(np.arange(self.dim), self.dims)
                table = np.stack(cols, axis=1).astype(np.int64)
            table.flags.writeable = False
            self._occupations = table
        return self._occupations

    def sub_register(self, keep: Iterable[str]) -> "ModeRegister":
        """Register of the kept modes, preserving declaration order."""
        keep = set(keep)
        for label in keep:
            self.position(label)
        return ModeRegister([m for m in self.modes if m.label in keep])


def build_register(specs: Sequence[ModeSpec]) -> ModeRegister:
    """Build a register from mode specs; validates labels and cutoffs."""
    specs = tuple(specs)
    if not specs:
        raise ValueError("register needs at least one mode")
    return ModeRegister(specs)


@dataclass(frozen=True)
class StateVector:
    """Normalized pure state over a register's occupation basis. Immutable."""

    register: ModeRegister
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).copy()
        if amps.shape != (self.register.dim,):
            raise ValueError(
                f"amplitude vector has shape {amps.shape}, expected ({self.register.dim},)"
            )
        nrm = np.linalg.norm(amps)
        if abs(nrm - 1.0) > NORM_ATOL:
            raise ValueError(f"state not normalized: |norm - 1| = {abs(nrm - 1.0):.3e}")
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def overlap(self, other: "StateVector") -> complex:
        """Inner product <self|other>."""
        _check_same_register(self.register, other.register)
        return complex(np.vdot(self.amplitudes, other.amplitudes))

    def fidelity(self, other: "StateVector") -> float:
        """|<self|other>|^2, i.e. agreement up to a global phase."""
        return float(abs(self.overlap(other)) ** 2)

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2

    def amplitude(self, occ: Sequence[int]) -> complex:
        return complex(self.amplitudes[self.register.index_of(occ)])


def from_amplitudes(
    register: ModeRegister, amplitudes: Sequence[complex], normalize: bool = False
) -> StateVector:
    """Wrap raw amplitudes as a StateVector, optionally renormalizing."""
    amps = np.asarray(amplitudes, dtype=complex)
    if normalize:
        nrm = np.linalg.norm(amps)
        if nrm < 1e-12:
            raise ValueError("cannot normalize a (numerically) zero vector")
        amps = amps / nrm
    return StateVector(register, amps)


def vacuum_state(register: ModeRegister) -> StateVector:
    amps = np.zeros(register.dim, dtype=complex)
    amps[0] = 1.0
    return StateVector(register, amps)


def basis_state(register: ModeRegister, occ: Sequence[int]) -> StateVector:
    amps = np.zeros(register.dim, dtype=complex)
    amps[register.index_of(occ)] = 1.0
    return StateVector(register, amps)


def prepare_superposition(
    register: ModeRegister, mode_a: str, mode_b: str, phi: float
) -> StateVector:
    """Single particle split over two modes with relative phase phi.

    Returns ``(|1>_a |0>_b + e^{i phi} |0>_a |1>_b) / sqrt(2)`` with every
    other mode in its vacuum state.
    """
    pa, pb = register.position(mode_a), register.position(mode_b)
    if pa == pb:
        raise UnknownModeError("the two modes must be distinct")
    occ_a = [0] * len(register.modes)
    occ_b = [0] * len(register.modes)
    occ_a[pa] = 1
    occ_b[pb] = 1
    amps = np.zeros(register.dim, dtype=complex)
    amps[register.index_of(occ_a)] = 1.0 / np.sqrt(2.0)
    amps[register.index_of(occ_b)] = np.exp(1j * phi) / np.sqrt(2.0)
    return StateVector(register, amps)


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, unit-trace, positive-semidefinite matrix over a register."""

    register: ModeRegister
    elements: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.elements, dtype=complex).copy()
        d = self.register.dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix has shape {mat.shape}, expected ({d}, {d})")
        if np.abs(mat - mat.conj().T).max() > NORM_ATOL:
            raise ValueError("density matrix not hermitian")
        tr = np.trace(mat).real
        if abs(tr - 1.0) > NORM_ATOL:
            raise ValueError(f"density matrix trace {tr} != 1")
        evals = np.linalg.eigvalsh(mat)
        if evals.min() < -NORM_ATOL:
            raise ValueError(f"density matrix has negative eigenvalue {evals.min():.3e}")
        mat.flags.writeable = False
        object.__setattr__(self, "elements", mat)

    def purity(self) -> float:
        return float(np.trace(self.elements @ self.elements).real)

    def expectation(self, vector: np.ndarray) -> float:
        """<v| rho |v> for a raw complex vector of matching dimension."""
        v = np.asarray(vector, dtype=complex)
        return float(np.real(np.vdot(v, self.elements @ v)))


def partial_trace(
    state: Union[StateVector, DensityMatrix], keep: Iterable[str]
) -> DensityMatrix:
    """Reduced density matrix over the kept modes.

    Parameters
    ----------
    state:
        Pure state or density matrix on the full register.
    keep:
        Labels of the modes to keep. The result is ordered by the modes'
        original declaration order, regardless of the order given here.
        An empty set traces out everything, yielding the 1x1 matrix [[1.0]]
        over the empty register.
    """
    register = state.register
    keep = set(keep)
    keep_pos = sorted(register.position(l) for l in keep)
    drop_pos = [i for i in range(len(register.modes)) if i not in keep_pos]
    sub = register.sub_register(keep)

    if isinstance(state, StateVector):
        tensor = state.amplitudes.reshape(register.dims)
        rho = np.tensordot(tensor, tensor.conj(), axes=(drop_pos, drop_pos))
        # tensordot leaves kept axes of ket then bra; flatten each side
        rho = rho.reshape(sub.dim, sub.dim)
        return DensityMatrix(sub, rho)

    n = len(register.modes)
    tensor = state.elements.reshape(register.dims + register.dims)
    perm = (
        keep_pos
        + [p + n for p in keep_pos]
        + drop_pos
        + [p + n for p in drop_pos]
    )
    tensor = tensor.transpose(perm)
    drop_dim = int(np.prod([register.dims[p] for p in drop_pos], initial=1))
    tensor = tensor.reshape(sub.dim, sub.dim, drop_dim, drop_dim)
    return DensityMatrix(sub, np.trace(tensor, axis1=2, axis2=3))


def _check_same_register(a: ModeRegister, b: ModeRegister) -> None:
    if a != b:
        raise RegisterMismatchError(f"registers differ: {a!r} vs {b!r}")
