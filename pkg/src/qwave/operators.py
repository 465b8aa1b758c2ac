"""Ladder operators, interaction couplers, coherent states, exact evolution.

Fermionic annihilation lowers a mode's occupation and multiplies by
``(-1)**(sum of occupations of earlier-declared fermion modes)``. The sign
string is confined to the fermionic sector of the register (graded tensor
product), so operators of different statistics commute by construction,
while fermion operators on distinct modes anticommute. Two-level modes
behave like stringless hardcore modes: annihilation is the lowering
operator taking the excited level to the ground level.

Time evolution is exact: ``exp(-iHt)`` through the eigendecomposition of
the (hermitian) generator. No series expansion, no Trotterization.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import gammaln

from .errors import (
    KindMismatchError,
    NotHermitianError,
    RegisterMismatchError,
    TailBoundExceededError,
)
from .fock import (
    NORM_ATOL,
    ModeKind,
    ModeRegister,
    StateVector,
    _check_same_register,
)


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense complex matrix acting on a register's Hilbert space."""

    register: ModeRegister
    elements: np.ndarray
    hermitian_hint: bool = False

    def __post_init__(self):
        mat = np.asarray(self.elements, dtype=complex).copy()
        d = self.register.dim
        if mat.shape != (d, d):
            raise ValueError(f"operator has shape {mat.shape}, expected ({d}, {d})")
        if self.hermitian_hint and np.abs(mat - mat.conj().T).max() > NORM_ATOL:
            raise NotHermitianError("operator marked hermitian is not")
        mat.flags.writeable = False
        object.__setattr__(self, "elements", mat)

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.register, self.elements.conj().T, self.hermitian_hint)

    def is_hermitian(self, atol: float = NORM_ATOL) -> bool:
        return bool(np.abs(self.elements - self.elements.conj().T).max() <= atol)

    def eigh(self) -> tuple[np.ndarray, np.ndarray]:
        """Eigendecomposition; requires hermiticity."""
        if not self.is_hermitian():
            raise NotHermitianError("eigendecomposition requires a hermitian operator")
        return np.linalg.eigh(self.elements)

    def expectation(self, state: StateVector) -> complex:
        _check_same_register(self.register, state.register)
        return complex(np.vdot(state.amplitudes, self.elements @ state.amplitudes))

    def __matmul__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_same_register(self.register, other.register)
        return OperatorMatrix(self.register, self.elements @ other.elements)

    def __add__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_same_register(self.register, other.register)
        return OperatorMatrix(
            self.register,
            self.elements + other.elements,
            self.hermitian_hint and other.hermitian_hint,
        )

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        _check_same_register(self.register, other.register)
        return OperatorMatrix(
            self.register,
            self.elements - other.elements,
            self.hermitian_hint and other.hermitian_hint,
        )

    def __mul__(self, scalar: complex) -> "OperatorMatrix":
        hint = self.hermitian_hint and float(np.imag(scalar)) == 0.0
        return OperatorMatrix(self.register, self.elements * scalar, hint)

    __rmul__ = __mul__

    def __neg__(self) -> "OperatorMatrix":
        return OperatorMatrix(self.register, -self.elements, self.hermitian_hint)


def identity(register: ModeRegister) -> OperatorMatrix:
    return OperatorMatrix(register, np.eye(register.dim, dtype=complex), True)


def annihilation(register: ModeRegister, mode: str) -> OperatorMatrix:
    """Annihilation operator of the named mode.

    Bosonic modes get the usual sqrt(n) matrix elements within the cutoff.
    Fermionic modes get matrix elements +/-1 with the sign string over
    earlier-declared fermion modes, which makes distinct fermion operators
    anticommute. Two-level modes are the stringless lowering operator.
    """
    p = register.position(mode)
    spec = register.modes[p]
    occ = register.occupation_table()
    n = occ[:, p]
    src = np.nonzero(n > 0)[0]
    stride = int(np.prod(register.dims[p + 1 :], initial=1))
    dst = src - stride  # lowering this digit by one

    if spec.kind is ModeKind.BOSON:
        amp = np.sqrt(n[src]).astype(complex)
    else:
        amp = np.ones(len(src), dtype=complex)
        if spec.kind is ModeKind.FERMION:
            earlier = [q for q in register.fermion_positions() if q < p]
            if earlier:
                parity = occ[np.ix_(src, earlier)].sum(axis=1) % 2
                amp *= 1.0 - 2.0 * parity

    mat = np.zeros((register.dim, register.dim), dtype=complex)
    mat[dst, src] = amp
    return OperatorMatrix(register, mat)


def creation(register: ModeRegister, mode: str) -> OperatorMatrix:
    return annihilation(register, mode).dag()


def number_operator(register: ModeRegister, mode: str) -> OperatorMatrix:
    p = register.position(mode)
    diag = register.occupation_table()[:, p].astype(complex)
    return OperatorMatrix(register, np.diag(diag), True)


def quadrature(register: ModeRegister, mode: str) -> OperatorMatrix:
    """The hermitian combination a_dag + a of the named mode.

    For a fermion mode this includes the sign string, so quadratures of
    distinct fermion modes do not commute; bosonic ones do.
    """
    a = annihilation(register, mode)
    return OperatorMatrix(register, a.elements + a.elements.conj().T, True)


def pair_exchange(register: ModeRegister, mode1: str, mode2: str) -> OperatorMatrix:
    """Particle-transfer operator x_dag y + y_dag x between two modes.

    Even in each fermion operator pair, so for adjacent modes it is local
    to the pair; its eigenvalues on the one-particle sector are +/-1 with
    eigenstates (|10> +/- |01>)/sqrt(2).
    """
    x = annihilation(register, mode1)
    y = annihilation(register, mode2)
    t = x.elements.conj().T @ y.elements
    return OperatorMatrix(register, t + t.conj().T, True)


def swap_coupler(
    register: ModeRegister, boson_mode: str, twolevel_mode: str, strength: float
) -> OperatorMatrix:
    """Excitation-swapping coupler between a field mode and a two-level mode.

    H = strength * (a_dag |g><e| + a |e><g|): one field quantum converts to
    one excitation of the two-level system and back. Conserves the total
    excitation number; |0, g> is dark.
    """
    bk = register.mode(boson_mode).kind
    tk = register.mode(twolevel_mode).kind
    if bk is not ModeKind.BOSON:
        raise KindMismatchError(f"{boson_mode!r} must be bosonic, is {bk.value}")
    if tk is not ModeKind.TWO_LEVEL:
        raise KindMismatchError(f"{twolevel_mode!r} must be two-level, is {tk.value}")
    a = annihilation(register, boson_mode).elements
    lower = annihilation(register, twolevel_mode).elements
    h = a.conj().T @ lower
    return OperatorMatrix(register, strength * (h + h.conj().T), True)


def nucleon_coupler(
    register: ModeRegister, meson_mode: str, nucleon_mode: str, strength: float
) -> OperatorMatrix:
    """Charge-exchange coupler: absorbing a field quantum flips the two-level
    nucleon from its ground level (proton) to its excited level (neutron).

    Structurally identical to :func:`swap_coupler` with relabeled levels.
    """
    mk = register.mode(meson_mode).kind
    nk = register.mode(nucleon_mode).kind
    if mk is not ModeKind.BOSON:
        raise KindMismatchError(f"{meson_mode!r} must be bosonic, is {mk.value}")
    if nk is not ModeKind.TWO_LEVEL:
        raise KindMismatchError(f"{nucleon_mode!r} must be two-level, is {nk.value}")
    return swap_coupler(register, meson_mode, nucleon_mode, strength)


@dataclass(frozen=True)
class CoherentSpec:
    """Coherent-state request: amplitude, target mode, allowed truncation tail."""

    alpha: complex
    mode: str
    cutoff_tail_bound: float = 1e-8


def poisson_tail(alpha: complex, cutoff: int) -> float:
    """Probability mass of a coherent state's occupation above the cutoff."""
    return float(stats.poisson.sf(cutoff, abs(alpha) ** 2))


def coherent_amplitudes(alpha: complex, cutoff: int) -> np.ndarray:
    """Amplitudes exp(-|a|^2/2) a^n / sqrt(n!) for n = 0..cutoff (not renormalized)."""
    n = np.arange(cutoff + 1)
    mag = np.abs(alpha)
    if mag == 0.0:
        amps = np.zeros(cutoff + 1, dtype=complex)
        amps[0] = 1.0
        return amps
    log_mag = -0.5 * mag**2 + n * np.log(mag) - 0.5 * gammaln(n + 1.0)
    phase = n * np.angle(alpha)
    return np.exp(log_mag) * np.exp(1j * phase)


def coherent_state(register: ModeRegister, spec: CoherentSpec) -> StateVector:
    """Truncated, renormalized coherent state on one bosonic mode.

    Fails loudly (TailBoundExceededError) if the Poisson occupation tail
    above the mode cutoff exceeds ``spec.cutoff_tail_bound``; silent
    truncation would corrupt the rotation-rate guarantees downstream.
    """
    p = register.position(spec.mode)
    mspec = register.modes[p]
    if mspec.kind is not ModeKind.BOSON:
        raise KindMismatchError(f"{spec.mode!r} must be bosonic for a coherent state")
    tail = poisson_tail(spec.alpha, mspec.cutoff)
    if tail > spec.cutoff_tail_bound:
        raise TailBoundExceededError(
            f"occupation tail {tail:.3e} above cutoff {mspec.cutoff} exceeds "
            f"bound {spec.cutoff_tail_bound:.3e} for alpha={spec.alpha}"
        )
    mode_amps = coherent_amplitudes(spec.alpha, mspec.cutoff)
    mode_amps = mode_amps / np.linalg.norm(mode_amps)
    amps = np.zeros(register.dim, dtype=complex)
    stride = int(np.prod(register.dims[p + 1 :], initial=1))
    amps[np.arange(mspec.cutoff + 1) * stride] = mode_amps
    return StateVector(register, amps)


def phase_kick(register: ModeRegister, mode: str, phi: float) -> OperatorMatrix:
    """Diagonal unitary exp(i phi n) on the named mode's occupation n.

    Models a potential pulse acting on whatever charge sits in the mode;
    kicks compose additively in phi.
    """
    p = register.position(mode)
    n = register.occupation_table()[:, p]
    return OperatorMatrix(register, np.diag(np.exp(1j * phi * n)))


def evolve(state: StateVector, hamiltonian: OperatorMatrix, t: float) -> StateVector:
    """Exact exp(-iHt)|psi> via the spectral decomposition of H."""
    _check_same_register(state.register, hamiltonian.register)
    w, v = hamiltonian.eigh()
    phases = np.exp(-1j * w * t)
    amps = v @ (phases * (v.conj().T @ state.amplitudes))
    return StateVector(state.register, amps)


def apply(
    op: OperatorMatrix, state: StateVector, renormalize: bool = False
) -> StateVector:
    """Apply an operator matrix to a state.

    With ``renormalize`` the result is rescaled to unit norm (state
    preparation with creation-operator polynomials, isometries). Without
    it, the result must already be normalized (unitaries); norm drift
    raises, signaling a bug rather than hiding it.
    """
    _check_same_register(op.register, state.register)
    amps = op.elements @ state.amplitudes
    if renormalize:
        nrm = np.linalg.norm(amps)
        if nrm < 1e-12:
            raise ValueError("operator annihilated the state; cannot renormalize")
        amps = amps / nrm
    return StateVector(state.register, amps)


def commutator_norm(x: OperatorMatrix, y: OperatorMatrix) -> float:
    """Max-norm of the commutator XY - YX."""
    _check_same_register(x.register, y.register)
    c = x.elements @ y.elements - y.elements @ x.elements
    return float(np.abs(c).max())
