import numpy as np
import pytest

from qwave import (
    CoherentSpec,
    KindMismatchError,
    NotHermitianError,
    RegisterMismatchError,
    Site,
    TailBoundExceededError,
    annihilation,
    apply,
    basis_state,
    boson,
    build_register,
    coherent_state,
    commutator_norm,
    creation,
    evolve,
    fermion,
    from_amplitudes,
    identity,
    number_operator,
    nucleon_coupler,
    phase_kick,
    poisson_tail,
    prepare_superposition,
    quadrature,
    swap_coupler,
    two_level,
    vacuum_state,
)


def test_boson_lowering_matrix_element():
    reg = build_register([boson("a", 2)])
    a = annihilation(reg, "a")
    two = basis_state(reg, (2,))
    lowered = a.elements @ two.amplitudes
    assert lowered[reg.index_of((1,))] == pytest.approx(np.sqrt(2.0))


def test_fermion_sign_string():
    reg = build_register([fermion("f1"), fermion("f2")])
    a2 = annihilation(reg, "f2")
    both = basis_state(reg, (1, 1))
    out = a2.elements @ both.amplitudes
    assert out[reg.index_of((1, 0))] == pytest.approx(-1.0)


def test_fermion_anticommutators_three_modes():
    reg = build_register([fermion("x"), fermion("y"), fermion("z")])
    eye = np.eye(reg.dim)
    ops = {l: annihilation(reg, l).elements for l in "xyz"}
    for i in "xyz":
        for j in "xyz":
            anti = ops[i] @ ops[j].conj().T + ops[j].conj().T @ ops[i]
            expected = eye if i == j else np.zeros_like(eye)
            assert np.abs(anti - expected).max() < 1e-12
            anti2 = ops[i] @ ops[j] + ops[j] @ ops[i]
            assert np.abs(anti2).max() < 1e-12


def test_boson_commutator_below_cutoff():
    reg = build_register([boson("a", 4)])
    a = annihilation(reg, "a").elements
    comm = a @ a.conj().T - a.conj().T @ a
    # canonical on every state below the cutoff; truncated on the edge
    for n in range(4):
        assert comm[n, n] == pytest.approx(1.0)


def test_cross_statistics_commute():
    reg = build_register([fermion("f"), boson("b", 2), two_level("t")])
    pairs = [("f", "b"), ("f", "t"), ("b", "t")]
    for l1, l2 in pairs:
        a1 = annihilation(reg, l1).elements
        a2 = annihilation(reg, l2).elements
        assert np.abs(a1 @ a2 - a2 @ a1).max() < 1e-12
        assert np.abs(a1 @ a2.conj().T - a2.conj().T @ a1).max() < 1e-12


def test_swap_coupler_matrix_elements():
    reg = build_register([boson("field", 1), two_level("atom")])
    h = swap_coupler(reg, "field", "atom", 0.7)
    one_g = reg.index_of((1, 0))
    zero_e = reg.index_of((0, 1))
    assert h.elements[zero_e, one_g] == pytest.approx(0.7)
    assert h.elements[one_g, zero_e] == pytest.approx(0.7)
    # vacuum ground state is dark
    dark = h.elements @ basis_state(reg, (0, 0)).amplitudes
    assert np.abs(dark).max() < 1e-15


def test_swap_coupler_squares_to_identity_on_sector():
    reg = build_register([boson("field", 1), two_level("atom")])
    s = 1.3
    h = swap_coupler(reg, "field", "atom", s)
    h2 = h.elements @ h.elements
    for occ in ((1, 0), (0, 1)):
        i = reg.index_of(occ)
        assert h2[i, i] == pytest.approx(s**2)
    assert abs(h2[reg.index_of((1, 0)), reg.index_of((0, 1))]) < 1e-15


def test_swap_coupler_kind_checks():
    reg = build_register([boson("field", 1), two_level("atom")])
    with pytest.raises(KindMismatchError):
        swap_coupler(reg, "atom", "field", 1.0)


def test_swap_coupler_conserves_total_excitation():
    reg = build_register([boson("field", 3), two_level("atom")])
    h = swap_coupler(reg, "field", "atom", 1.0)
    n_total = number_operator(reg, "field") + number_operator(reg, "atom")
    assert commutator_norm(h, n_total) < 1e-10


def test_nucleon_coupler_swaps_sector():
    reg = build_register([boson("meson", 1), two_level("nucleon")])
    s = 0.9
    h = nucleon_coupler(reg, "meson", "nucleon", s)
    start = basis_state(reg, (1, 0))  # one meson, proton
    swapped = evolve(start, h, np.pi / (2.0 * s))
    # swapped branch carries factor -i; compare up to global phase
    target = basis_state(reg, (0, 1))
    assert swapped.fidelity(target) == pytest.approx(1.0, abs=1e-12)
    amp = swapped.amplitude((0, 1))
    assert amp == pytest.approx(-1.0j)
    # no meson, proton: stationary
    still = evolve(basis_state(reg, (0, 0)), h, 1.7)
    assert still.fidelity(basis_state(reg, (0, 0))) == pytest.approx(1.0)


def test_nucleon_coupler_two_site_swap_keeps_phase():
    # a charged field quantum split over two sites converts one nucleon
    # per branch; the relative phase survives the double swap
    reg = build_register(
        [
            boson("meson_a", 1, Site.A),
            boson("meson_b", 1, Site.B),
            two_level("nucleon_a", Site.A),
            two_level("nucleon_b", Site.B),
        ]
    )
    phi = 0.9
    psi = prepare_superposition(reg, "meson_a", "meson_b", phi)
    h = nucleon_coupler(reg, "meson_a", "nucleon_a", 1.0) + nucleon_coupler(
        reg, "meson_b", "nucleon_b", 1.0
    )
    out = evolve(psi, h, np.pi / 2.0)
    amp_a = out.amplitude((0, 0, 1, 0))
    amp_b = out.amplitude((0, 0, 0, 1))
    assert abs(abs(amp_a) - 1.0 / np.sqrt(2.0)) < 1e-12
    assert amp_b / amp_a == pytest.approx(np.exp(1j * phi))


def test_coherent_state_alpha_zero_is_vacuum():
    reg = build_register([boson("m", 5)])
    psi = coherent_state(reg, CoherentSpec(0.0, "m"))
    assert psi.fidelity(vacuum_state(reg)) == pytest.approx(1.0)


def test_coherent_state_mean_occupation():
    reg = build_register([boson("m", 20)])
    psi = coherent_state(reg, CoherentSpec(2.0, "m"))
    mean = number_operator(reg, "m").expectation(psi).real
    assert abs(mean - 4.0) < 1e-6


def test_coherent_state_tail_bound():
    assert poisson_tail(10.0, 160) < 2e-8
    reg = build_register([boson("m", 20)])
    with pytest.raises(TailBoundExceededError):
        coherent_state(reg, CoherentSpec(10.0, "m", 1e-8))
    with pytest.raises(KindMismatchError):
        coherent_state(
            build_register([two_level("t")]), CoherentSpec(0.1, "t")
        )


def test_phase_kick_identity_and_composition():
    reg = build_register([boson("a", 2), boson("b", 1)])
    assert np.abs(phase_kick(reg, "a", 0.0).elements - np.eye(reg.dim)).max() < 1e-15
    k1 = phase_kick(reg, "a", 0.4)
    k2 = phase_kick(reg, "a", 1.1)
    k12 = phase_kick(reg, "a", 1.5)
    assert np.abs((k1 @ k2).elements - k12.elements).max() < 1e-12


def test_phase_kick_shifts_split_particle_phase():
    reg = build_register([boson("a", 1, Site.A), boson("b", 1, Site.B)])
    psi = prepare_superposition(reg, "a", "b", 0.3)
    kicked = apply(phase_kick(reg, "b", 0.9), psi)
    target = prepare_superposition(reg, "a", "b", 1.2)
    assert np.abs(kicked.amplitudes - target.amplitudes).max() < 1e-12


def test_phase_kick_rotates_coherent_state():
    reg = build_register([boson("m", 25)])
    psi = coherent_state(reg, CoherentSpec(2.0, "m"))
    kicked = apply(phase_kick(reg, "m", 0.8), psi)
    target = coherent_state(reg, CoherentSpec(2.0 * np.exp(0.8j), "m"))
    assert kicked.fidelity(target) == pytest.approx(1.0, abs=1e-10)


def test_evolve_identity_at_t_zero():
    reg = build_register([boson("field", 1), two_level("atom")])
    h = swap_coupler(reg, "field", "atom", 1.0)
    psi = prepare_superposition(reg, "field", "atom", 0.5)
    assert evolve(psi, h, 0.0).fidelity(psi) == pytest.approx(1.0)


def test_evolve_swap_preserves_relative_phase():
    reg = build_register(
        [
            boson("light_a", 1, Site.A),
            boson("light_b", 1, Site.B),
            two_level("atom_a", Site.A),
            two_level("atom_b", Site.B),
        ]
    )
    phi = 1.1
    psi = prepare_superposition(reg, "light_a", "light_b", phi)
    h = swap_coupler(reg, "light_a", "atom_a", 1.0) + swap_coupler(
        reg, "light_b", "atom_b", 1.0
    )
    out = evolve(psi, h, np.pi / 2.0)
    amp_a = out.amplitude((0, 0, 1, 0))
    amp_b = out.amplitude((0, 0, 0, 1))
    # each branch picks up -i; the relative phase survives untouched
    assert amp_a == pytest.approx(-1.0j / np.sqrt(2.0))
    assert amp_b / amp_a == pytest.approx(np.exp(1j * phi))


def test_evolve_unitary_on_random_hermitian():
    from qwave import OperatorMatrix

    rng = np.random.default_rng(42)
    reg = build_register([boson("a", 2), two_level("t")])
    d = reg.dim
    for _ in range(100):
        m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        h = OperatorMatrix(reg, (m + m.conj().T) / 2.0, True)
        v = rng.normal(size=d) + 1j * rng.normal(size=d)
        psi = from_amplitudes(reg, v, normalize=True)
        out = evolve(psi, h, rng.uniform(0, 3))
        assert abs(out.norm() - 1.0) < 1e-9


def test_evolve_rejects_non_hermitian():
    reg = build_register([boson("a", 1)])
    bad = annihilation(reg, "a")
    with pytest.raises(NotHermitianError):
        evolve(vacuum_state(reg), bad, 1.0)


def test_quadrature_commutators():
    breg = build_register([boson("a", 1, Site.A), boson("b", 1, Site.B)])
    assert commutator_norm(quadrature(breg, "a"), quadrature(breg, "b")) < 1e-12
    freg = build_register([fermion("a", Site.A), fermion("b", Site.B)])
    assert commutator_norm(quadrature(freg, "a"), quadrature(freg, "b")) > 0.5


def test_fermion_pair_operators_commute():
    reg = build_register(
        [fermion("ua", Site.A), fermion("da", Site.A),
         fermion("ub", Site.B), fermion("db", Site.B)]
    )

    def pair(up, down):
        return creation(reg, up) @ creation(reg, down) + annihilation(
            reg, down
        ) @ annihilation(reg, up)

    assert commutator_norm(pair("ua", "da"), pair("ub", "db")) < 1e-12


def test_commutator_norm_register_mismatch():
    r1 = build_register([boson("a", 1)])
    r2 = build_register([boson("b", 1)])
    with pytest.raises(RegisterMismatchError):
        commutator_norm(identity(r1), identity(r2))


def test_apply_renormalize_guard():
    reg = build_register([boson("a", 1)])
    a = annihilation(reg, "a")
    with pytest.raises(ValueError):
        apply(a, vacuum_state(reg), renormalize=True)


def test_canonical_relations_random_registers():
    rng = np.random.default_rng(7)
    kinds = [
        lambda l: boson(l, int(rng.integers(1, 4))),
        fermion,
        two_level,
    ]
    for _ in range(30):
        n = int(rng.integers(2, 4))
        specs = [kinds[rng.integers(0, 3)](f"m{i}") for i in range(n)]
        reg = build_register(specs)
        ops = {m.label: annihilation(reg, m.label).elements for m in reg.modes}
        for mi in reg.modes:
            for mj in reg.modes:
                ai, aj = ops[mi.label], ops[mj.label]
                both_fermion = (
                    mi.kind.value == "fermion" and mj.kind.value == "fermion"
                )
                if both_fermion:
                    anti = ai @ aj.conj().T + aj.conj().T @ ai
                    expected = np.eye(reg.dim) if mi.label == mj.label else 0.0
                    assert np.abs(anti - expected).max() < 1e-12
                elif mi.label != mj.label:
                    comm = ai @ aj.conj().T - aj.conj().T @ ai
                    assert np.abs(comm).max() < 1e-12
