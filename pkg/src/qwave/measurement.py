"""Projective measurements, Born-rule sampling and post-selection.

A measurement is a complete set of mutually orthogonal projectors with
outcome labels. Joint sampling of several measurements requires them to
commute pairwise; shots are drawn from the exact joint Born distribution
with a counter-based generator, so a run is reproducible from its seed and
shot streams can be regenerated independently by counter position.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as iter_product

import numpy as np

from .errors import (
    ImpossibleOutcomeError,
    InvalidCutoffError,
    KindMismatchError,
    NonCommutingSpecsError,
    SiteMismatchError,
)
from .fock import (
    ModeKind,
    ModeRegister,
    Site,
    StateVector,
    _check_same_register,
)
from .operators import (
    OperatorMatrix,
    annihilation,
    pair_exchange,
    quadrature,
)

#: Projector algebra tolerance (idempotence, orthogonality, completeness).
PROJECTOR_ATOL = 1e-10


@dataclass(frozen=True)
class MeasurementSpec:
    """Labeled complete set of orthogonal projectors, optionally site-tagged.

    When ``site`` is set the projectors are guaranteed to act as the
    identity on every mode outside that site; constructors leave the tag
    unset for constructions that fail this check (fermionic sign strings
    can reach across sites).
    """

    name: str
    projectors: tuple[tuple[str, OperatorMatrix], ...]
    site: Site | None = None

    def __post_init__(self):
        if not self.projectors:
            raise ValueError("measurement needs at least one projector")
        reg = self.register
        labels = [l for l, _ in self.projectors]
        if len(set(labels)) != len(labels):
            raise ValueError(f"duplicate outcome labels in {self.name!r}")
        mats = [p.elements for _, p in self.projectors]
        for (label, p), m in zip(self.projectors, mats):
            _check_same_register(reg, p.register)
            if np.abs(m @ m - m).max() > PROJECTOR_ATOL:
                raise ValueError(f"projector {label!r} of {self.name!r} not idempotent")
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                if np.abs(mats[i] @ mats[j]).max() > PROJECTOR_ATOL:
                    raise ValueError(
                        f"projectors {labels[i]!r}, {labels[j]!r} of "
                        f"{self.name!r} not orthogonal"
                    )
        total = sum(mats)
        if np.abs(total - np.eye(reg.dim)).max() > PROJECTOR_ATOL:
            raise ValueError(f"projectors of {self.name!r} do not sum to identity")
        if self.site is not None and site_locality_gap(self) > PROJECTOR_ATOL:
            raise ValueError(
                f"{self.name!r} tagged site {self.site.value} but its projectors "
                f"act outside that site"
            )

    @property
    def register(self) -> ModeRegister:
        return self.projectors[0][1].register

    @property
    def outcome_labels(self) -> tuple[str, ...]:
        return tuple(l for l, _ in self.projectors)

    def projector(self, outcome: str) -> OperatorMatrix:
        for label, p in self.projectors:
            if label == outcome:
                return p
        raise ValueError(f"{self.name!r} has no outcome {outcome!r}")


@dataclass(frozen=True)
class ShotRecord:
    """One sampled shot: outcome label per measurement name."""

    outcomes: dict[str, str]
    pre_measurement_seed: int
    shot_index: int


def _stringless_shift(reg: ModeRegister, position: int) -> np.ndarray:
    """Occupation-lowering matrix unit on one mode, identity elsewhere and
    no sign string: probes tensor-factor structure, not operator algebra.
    A projector commuting with this shift (and its dagger) for every mode
    outside a site acts as the identity on those modes."""
    occ = reg.occupation_table()[:, position]
    stride = int(np.prod(reg.dims[position + 1 :], initial=1))
    src = np.nonzero(occ > 0)[0]
    mat = np.zeros((reg.dim, reg.dim), dtype=complex)
    mat[src - stride, src] = 1.0
    return mat


def site_locality_gap(spec: MeasurementSpec) -> float:
    """Max commutator norm of the spec's projectors with matrix units of
    modes outside the spec's site. Zero means the projectors factorize as
    identity on everything outside the site; a fermionic sign string
    crossing the site boundary shows up as a positive gap."""
    if spec.site is None:
        raise ValueError("spec has no site tag")
    return _raw_gap(spec.projectors, spec.site)


def _maybe_site(
    name: str, projectors: tuple[tuple[str, OperatorMatrix], ...], site: Site
) -> MeasurementSpec:
    """Tag the spec with the site only if the construction is actually local."""
    if _raw_gap(projectors, site) <= PROJECTOR_ATOL:
        return MeasurementSpec(name, projectors, site)
    return MeasurementSpec(name, projectors)


def _raw_gap(projectors, site: Site) -> float:
    reg = projectors[0][1].register
    gap = 0.0
    for pos, m in enumerate(reg.modes):
        if m.site is site:
            continue
        shift = _stringless_shift(reg, pos)
        for _, p in projectors:
            c = p.elements @ shift - shift @ p.elements
            gap = max(gap, float(np.abs(c).max()))
    return gap


def spin_direction_measurement(
    register: ModeRegister, twolevel_mode: str, theta: float, name: str | None = None
) -> MeasurementSpec:
    """Two-outcome measurement of cos(theta) sz + sin(theta) sx on a two-level
    mode, excited level identified with spin up. Outcomes "+1" / "-1";
    theta = pi reproduces the theta = 0 projectors with swapped labels."""
    spec = register.mode(twolevel_mode)
    if spec.kind is not ModeKind.TWO_LEVEL:
        raise KindMismatchError(
            f"{twolevel_mode!r} must be two-level, is {spec.kind.value}"
        )
    lower = annihilation(register, twolevel_mode).elements
    sx = lower + lower.conj().T
    n = np.diag(register.occupation_table()[:, register.position(twolevel_mode)])
    sz = 2.0 * n - np.eye(register.dim)
    sigma = np.cos(theta) * sz + np.sin(theta) * sx
    eye = np.eye(register.dim)
    projectors = (
        ("+1", OperatorMatrix(register, (eye + sigma) / 2.0)),
        ("-1", OperatorMatrix(register, (eye - sigma) / 2.0)),
    )
    return _maybe_site(name or f"spin({twolevel_mode})", projectors, spec.site)


def plus_minus_basis(
    register: ModeRegister, mode1: str, mode2: str, name: str | None = None
) -> MeasurementSpec:
    """Measurement distinguishing the one-particle states
    (|10> +/- |01>)/sqrt(2) of a same-site mode pair, built from the
    particle-transfer operator so it is independent of mode declaration
    order. Outcomes "+", "-" and "other" (zero or two particles)."""
    s1, s2 = register.mode(mode1), register.mode(mode2)
    if s1.site is not s2.site:
        raise SiteMismatchError(
            f"{mode1!r} at {s1.site.value} vs {mode2!r} at {s2.site.value}"
        )
    if s1.cutoff != 1 or s2.cutoff != 1:
        raise InvalidCutoffError("plus/minus basis needs cutoff-1 modes")
    t = pair_exchange(register, mode1, mode2).elements
    t2 = t @ t
    eye = np.eye(register.dim)
    projectors = (
        ("+", OperatorMatrix(register, (t2 + t) / 2.0)),
        ("-", OperatorMatrix(register, (t2 - t) / 2.0)),
        ("other", OperatorMatrix(register, eye - t2)),
    )
    return _maybe_site(name or f"pm({mode1},{mode2})", projectors, s1.site)


def vacuum_one_superposition_basis(
    register: ModeRegister, mode: str, name: str | None = None
) -> MeasurementSpec:
    """Measurement of (|0> +/- |1>)/sqrt(2) on one mode's lowest two levels,
    plus an "other" outcome for occupations >= 2 when the cutoff allows them.

    Built directly from occupation amplitudes: for a fermion mode this is
    the idealized construction that ignores sign strings (physically
    implementable only for bosons; see quadrature_basis for the honest
    fermionic counterpart)."""
    p = register.position(mode)
    spec = register.modes[p]
    occ = register.occupation_table()[:, p]
    stride = int(np.prod(register.dims[p + 1 :], initial=1))
    idx0 = np.nonzero(occ == 0)[0]
    idx1 = idx0 + stride
    dim = register.dim
    plus = np.zeros((dim, dim), dtype=complex)
    minus = np.zeros((dim, dim), dtype=complex)
    for sign, mat in ((1.0, plus), (-1.0, minus)):
        mat[idx0, idx0] = 0.5
        mat[idx1, idx1] = 0.5
        mat[idx0, idx1] = sign * 0.5
        mat[idx1, idx0] = sign * 0.5
    projectors = [
        ("+", OperatorMatrix(register, plus)),
        ("-", OperatorMatrix(register, minus)),
    ]
    if spec.cutoff > 1:
        rest = np.diag((occ >= 2).astype(complex))
        projectors.append(("other", OperatorMatrix(register, rest)))
    return _maybe_site(name or f"vac1({mode})", tuple(projectors), spec.site)


def quadrature_basis(
    register: ModeRegister, mode: str, name: str | None = None
) -> MeasurementSpec:
    """Eigenbasis of the quadrature a_dag + a of a cutoff-1 mode.

    For bosons this coincides with vacuum_one_superposition_basis. For a
    fermion mode the quadrature carries its anticommutation sign string, so
    the "measurement" is not local to the mode's site; the returned spec is
    left untagged in that case."""
    spec = register.mode(mode)
    if spec.cutoff != 1:
        raise InvalidCutoffError("quadrature basis supported for cutoff-1 modes")
    x = quadrature(register, mode).elements
    eye = np.eye(register.dim)
    projectors = (
        ("+1", OperatorMatrix(register, (eye + x) / 2.0)),
        ("-1", OperatorMatrix(register, (eye - x) / 2.0)),
    )
    return _maybe_site(name or f"quad({mode})", projectors, spec.site)


def born_probabilities(state: StateVector, spec: MeasurementSpec) -> dict[str, float]:
    """Outcome probabilities <psi|P|psi>; they sum to 1 for any valid spec."""
    _check_same_register(state.register, spec.register)
    out = {}
    for label, p in spec.projectors:
        v = p.elements @ state.amplitudes
        out[label] = float(np.real(np.vdot(state.amplitudes, v)))
    return out


def _check_commuting(specs: list[MeasurementSpec]) -> None:
    for i in range(len(specs)):
        for j in range(i + 1, len(specs)):
            for _, p in specs[i].projectors:
                for _, q in specs[j].projectors:
                    c = p.elements @ q.elements - q.elements @ p.elements
                    if np.abs(c).max() > PROJECTOR_ATOL:
                        raise NonCommutingSpecsError(
                            f"{specs[i].name!r} and {specs[j].name!r} do not "
                            f"commute; no joint distribution exists"
                        )


def joint_distribution(
    state: StateVector, specs: list[MeasurementSpec]
) -> dict[tuple[str, ...], float]:
    """Exact joint Born distribution of pairwise-commuting measurements."""
    if not specs:
        raise ValueError("need at least one measurement spec")
    for s in specs:
        _check_same_register(state.register, s.register)
    _check_commuting(specs)
    dist = {}
    for combo in iter_product(*(s.projectors for s in specs)):
        v = state.amplitudes
        for _, p in combo:
            v = p.elements @ v
        dist[tuple(label for label, _ in combo)] = float(np.real(np.vdot(v, v)))
    return dist


def _draw_picks(
    dist: dict[tuple[str, ...], float], shots: int, seed: int
) -> np.ndarray:
    """Outcome indices for each shot: cumulative inversion of the joint law
    against a Philox counter stream keyed by the seed (shot i uses counter
    position i, so streams are reproducible and parallelizable)."""
    combos = list(dist.keys())
    probs = np.clip(np.array([dist[c] for c in combos]), 0.0, None)
    cum = np.cumsum(probs)
    cum /= cum[-1]
    rng = np.random.Generator(np.random.Philox(key=seed))
    picks = np.searchsorted(cum, rng.random(shots), side="right")
    return np.minimum(picks, len(combos) - 1)


def sample(
    state: StateVector, specs: list[MeasurementSpec], shots: int, seed: int
) -> list[ShotRecord]:
    """Draw independent shots from the joint Born distribution.

    Deterministic given the seed; outcome ties resolve by cumulative
    inversion in declaration order. ``sample_counts`` draws from the same
    stream when only the histogram is needed.
    """
    if shots < 0:
        raise ValueError("shots must be >= 0")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError("measurement specs must have unique names for sampling")
    dist = joint_distribution(state, specs)
    if shots == 0:
        return []
    combos = list(dist.keys())
    picks = _draw_picks(dist, shots, seed)
    return [
        ShotRecord(
            outcomes=dict(zip(names, combos[k])),
            pre_measurement_seed=seed,
            shot_index=i,
        )
        for i, k in enumerate(picks)
    ]


def sample_counts(
    state: StateVector, specs: list[MeasurementSpec], shots: int, seed: int
) -> dict[tuple[str, ...], int]:
    """Histogram of ``sample`` outcomes, drawn from the identical stream."""
    if shots < 0:
        raise ValueError("shots must be >= 0")
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ValueError("measurement specs must have unique names for sampling")
    dist = joint_distribution(state, specs)
    combos = list(dist.keys())
    if shots == 0:
        return {c: 0 for c in combos}
    picks = _draw_picks(dist, shots, seed)
    counts = np.bincount(picks, minlength=len(combos))
    return {c: int(k) for c, k in zip(combos, counts)}


def post_select(
    state: StateVector, spec: MeasurementSpec, outcome: str
) -> tuple[StateVector, float]:
    """Project onto one outcome and renormalize; returns (state, probability)."""
    _check_same_register(state.register, spec.register)
    p = spec.projector(outcome)
    v = p.elements @ state.amplitudes
    prob = float(np.real(np.vdot(v, v)))
    if prob < 1e-12:
        raise ImpossibleOutcomeError(
            f"outcome {outcome!r} of {spec.name!r} has probability {prob:.3e}"
        )
    return StateVector(state.register, v / np.sqrt(prob)), prob
