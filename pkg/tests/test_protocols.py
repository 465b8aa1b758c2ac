import itertools
import math

import numpy as np
import pytest

from qwave import (
    LhvStrategy,
    NTooLargeError,
    TailBoundExceededError,
    ab_gauge_check,
    aux_particle_phase,
    bell_chain,
    coherent_factorization,
    coincidence_rate,
    collective_chain,
    fermion_nogo,
    lhv_max_satisfied,
    photon_swap_experiment,
    rabi_rotation,
)

PHI_GRID = [0.0, math.pi / 3.0, math.pi / 2.0, math.pi, 4.0]


# --- photon swap -------------------------------------------------------------

def test_photon_swap_analytics():
    for phi in PHI_GRID:
        r = photon_swap_experiment(phi, shots=0, seed=1)
        assert r.passed
        assert r.analytic["coincidence"] == pytest.approx(
            abs(1.0 + np.exp(1j * phi)) ** 2 / 4.0, abs=1e-12
        )
        assert r.analytic["swap_fidelity"] > 1.0 - 1e-9


def test_photon_swap_limit_phases():
    r0 = photon_swap_experiment(0.0, shots=0, seed=1)
    assert r0.analytic["coincidence"] == pytest.approx(1.0)
    assert r0.analytic["anticoincidence"] == pytest.approx(0.0, abs=1e-12)
    r_pi = photon_swap_experiment(math.pi, shots=0, seed=1)
    assert r_pi.analytic["coincidence"] == pytest.approx(0.0, abs=1e-12)
    assert r_pi.analytic["anticoincidence"] == pytest.approx(1.0)
    r_q = photon_swap_experiment(math.pi / 2.0, shots=0, seed=1)
    assert r_q.analytic["coincidence"] == pytest.approx(0.5)
    assert r_q.analytic["anticoincidence"] == pytest.approx(0.5)


def test_photon_swap_sampling_and_determinism():
    r1 = photon_swap_experiment(0.8, shots=20_000, seed=5)
    r2 = photon_swap_experiment(0.8, shots=20_000, seed=5)
    assert r1.passed and r2.passed
    assert r1.to_dict() == r2.to_dict()
    assert r1.empirical["coincidence"].count == 20_000


# --- rabi rotation -----------------------------------------------------------

def test_rabi_starts_in_ground_state():
    r = rabi_rotation(2.0, 24, times=[0.0])
    assert r.analytic["excited_population_final"] == pytest.approx(0.0, abs=1e-12)


def test_rabi_large_amplitude_tracks_rotation_formula():
    r10 = rabi_rotation(10.0, 160)
    assert r10.passed
    assert r10.analytic["max_deviation_from_rotation_formula"] <= 0.03
    assert r10.analytic["excited_population_final"] == pytest.approx(1.0, abs=0.03)
    r2 = rabi_rotation(2.0, 24)
    assert (
        r10.analytic["max_deviation_from_rotation_formula"]
        < r2.analytic["max_deviation_from_rotation_formula"]
    )


def test_rabi_tail_guard():
    with pytest.raises(TailBoundExceededError):
        rabi_rotation(10.0, 60)


# --- bell chain ---------------------------------------------------------------

def test_bell_chain_closed_forms():
    r2 = bell_chain(2, shots=0, seed=1)
    assert r2.passed
    assert r2.analytic["satisfaction_probability"] == pytest.approx(
        math.cos(math.pi / 8.0) ** 2, abs=1e-12
    )
    assert r2.analytic["failure_probability_bound"] == pytest.approx(
        0.585786, abs=1e-6
    )
    assert r2.analytic["lhv_max_satisfied"] == 3.0

    r5 = bell_chain(5, shots=0, seed=1)
    assert r5.analytic["failure_probability_bound"] == pytest.approx(
        0.244717, abs=1e-6
    )
    assert r5.analytic["large_chain_approximation"] == pytest.approx(
        math.pi**2 / 40.0, abs=1e-12
    )


def test_bell_chain_quantum_beats_every_lhv():
    for n in range(2, 6):
        r = bell_chain(n, shots=0, seed=0)
        assert r.analytic["lhv_max_satisfied"] == 2 * n - 1
        assert (
            r.analytic["satisfaction_probability"]
            > r.analytic["lhv_satisfaction_ceiling"]
        )
        assert r.analytic["failure_probability_bound"] < 1.0


def test_bell_chain_bounds():
    with pytest.raises(ValueError):
        bell_chain(1, 0, 0)
    with pytest.raises(NTooLargeError):
        bell_chain(9, 0, 0)


def test_lhv_strategy_oracle_matches_enumeration():
    # brute-force over explicit strategy objects reproduces the vectorized
    # enumeration maximum
    for n in (2, 3):
        best = 0
        for a_bits in itertools.product((1, -1), repeat=n):
            site_a = tuple(a_bits) + (-a_bits[0],)
            for site_b in itertools.product((1, -1), repeat=n):
                s = LhvStrategy(site_a, tuple(site_b))
                best = max(best, s.satisfied_relations())
        assert best == lhv_max_satisfied(n) == 2 * n - 1


def test_lhv_strategy_validation():
    with pytest.raises(ValueError):
        LhvStrategy((1, 1), (1,))  # half-turn constraint violated
    with pytest.raises(ValueError):
        LhvStrategy((1, 0, -1), (1, 1))  # not +/-1


def test_bell_chain_sampling():
    r = bell_chain(2, shots=20_000, seed=3)
    assert r.passed
    assert len([k for k in r.empirical if k.startswith("relation_")]) == 4


# --- auxiliary-particle phase estimation ---------------------------------------

def test_aux_phase_boson_statistics():
    for phi in PHI_GRID:
        r = aux_particle_phase(phi, "boson", shots=0, seed=1)
        assert r.passed
        assert r.analytic["conditioning_probability"] == 0.5
        assert r.analytic["conditional_coincidence"] == pytest.approx(
            coincidence_rate(phi, +1.0), abs=1e-12
        )
        assert r.analytic["ordering_gap"] < 1e-10


def test_aux_phase_fermion_exchange_sign():
    # identical-particle exchange flips the interference term for fermions:
    # coincidence and anti-coincidence trade places relative to bosons
    for phi in PHI_GRID:
        rf = aux_particle_phase(phi, "fermion", shots=0, seed=1)
        rb = aux_particle_phase(phi, "boson", shots=0, seed=1)
        assert rf.passed
        assert rf.analytic["exchange_sign"] == -1.0
        assert rf.analytic["conditional_coincidence"] == pytest.approx(
            rb.analytic["conditional_anticoincidence"], abs=1e-12
        )
        assert rf.analytic["ordering_gap"] < 1e-10


def test_aux_phase_limit_cases():
    rb = aux_particle_phase(0.0, "boson", shots=0, seed=1)
    assert rb.analytic["conditional_coincidence"] == pytest.approx(1.0)
    rf = aux_particle_phase(0.0, "fermion", shots=0, seed=1)
    assert rf.analytic["conditional_coincidence"] == pytest.approx(0.0, abs=1e-12)


def test_aux_phase_sampling():
    r = aux_particle_phase(1.0, "fermion", shots=20_000, seed=11)
    assert r.passed
    assert r.empirical["conditioning_probability"].count == 20_000
    # conditional counts hover around half the shots
    assert abs(r.empirical["conditional_coincidence"].count - 10_000) < 500


def test_aux_phase_rejects_unknown_statistics():
    with pytest.raises(ValueError):
        aux_particle_phase(0.0, "anyon", shots=0, seed=0)


def test_aux_phase_accepts_mode_kind():
    from qwave import ModeKind

    r = aux_particle_phase(0.5, ModeKind.FERMION, shots=0, seed=0)
    assert r.params["statistics"] == "fermion"
    with pytest.raises(ValueError):
        aux_particle_phase(0.5, ModeKind.TWO_LEVEL, shots=0, seed=0)


# --- fermion no-go --------------------------------------------------------------

def test_signaling_chain_is_declaration_order_invariant():
    # the no-go quantities cannot depend on bookkeeping: rebuild the
    # repeat-measurement chain with the two modes declared in either order
    from qwave import (
        Site,
        born_probabilities,
        boson,
        build_register,
        fermion,
        post_select,
        prepare_superposition,
        quadrature_basis,
    )

    def chain_tvd(order, kind):
        site = {"a": Site.A, "b": Site.B}
        if kind == "fermion":
            reg = build_register([fermion(l, site[l]) for l in order])
        else:
            reg = build_register([boson(l, 1, site[l]) for l in order])
        psi = prepare_superposition(reg, "a", "b", math.pi / 3.0)
        spec_a = quadrature_basis(reg, "a", "qa")
        spec_b = quadrature_basis(reg, "b", "qb")
        first, _ = post_select(psi, spec_b, "+1")
        repeat = born_probabilities(first, spec_b)
        rho = np.zeros((reg.dim, reg.dim), dtype=complex)
        for _, p in spec_a.projectors:
            v = p.elements @ first.amplitudes
            rho += np.outer(v, v.conj())
        disturbed = {
            l: float(np.real(np.trace(rho @ p.elements)))
            for l, p in spec_b.projectors
        }
        return 0.5 * sum(abs(repeat[l] - disturbed[l]) for l in repeat)

    for kind, expected in (("boson", 0.0), ("fermion", 0.5)):
        t1 = chain_tvd(["a", "b"], kind)
        t2 = chain_tvd(["b", "a"], kind)
        assert t1 == pytest.approx(expected, abs=1e-10)
        assert abs(t1 - t2) < 1e-10


def test_fermion_nogo_report():
    r = fermion_nogo(seed=0)
    assert r.passed
    assert r.analytic["boson_quadrature_commutator"] < 1e-12
    assert r.analytic["fermion_quadrature_commutator"] >= 0.5
    assert r.analytic["fermion_pair_commutator"] < 1e-12
    assert r.analytic["boson_signaling_tvd"] < 1e-10
    assert r.analytic["fermion_signaling_tvd"] > 0.1
    assert r.exact_only()  # analytic-only protocol


# --- coherent factorization ------------------------------------------------------

def test_coherent_factorization_exact_identity():
    r = coherent_factorization(2.0, 24)
    assert r.passed
    assert r.analytic["fidelity"] > 1.0 - 1e-8
    assert r.analytic["mean_occupation_site_a"] == pytest.approx(2.0, abs=1e-6)
    assert r.analytic["mean_occupation_site_b"] == pytest.approx(2.0, abs=1e-6)


def test_coherent_factorization_vacuum_case():
    r = coherent_factorization(0.0, 4)
    assert r.analytic["fidelity"] == pytest.approx(1.0)


def test_coherent_factorization_tail_guard():
    with pytest.raises(TailBoundExceededError):
        coherent_factorization(4.0, 6)


# --- collective chain -------------------------------------------------------------

def test_collective_chain_exact_results():
    for phi in (0.0, math.pi / 3.0, math.pi):
        r = collective_chain(phi, shots=0, seed=1)
        assert r.passed
        a = r.analytic
        assert a["direct_postselection_probability"] == pytest.approx(0.5, abs=1e-12)
        assert a["direct_photon_fidelity"] > 1.0 - 1e-9
        assert a["stage2_postselection_probability"] == pytest.approx(0.25, abs=1e-12)
        assert a["positron_fidelity_exchange"] > 1.0 - 1e-9
        # naive bookkeeping target (no exchange sign) is orthogonal
        assert a["positron_fidelity_naive"] < 1e-9
        assert a["stage3_postselection_probability"] == pytest.approx(0.5, abs=1e-12)
        assert a["stage3_phase_pi_fidelity"] > 1.0 - 1e-9
        assert a["ordering_gap"] < 1e-10


def test_collective_chain_stage3_phase_independent():
    r0 = collective_chain(0.0, shots=0, seed=1)
    r1 = collective_chain(2.0 * math.pi / 3.0, shots=0, seed=1)
    for key in r0.analytic:
        if key.startswith("stage3_joint_"):
            assert r0.analytic[key] == pytest.approx(
                r1.analytic[key], abs=1e-10
            )


def test_collective_chain_sampling():
    r = collective_chain(1.0, shots=20_000, seed=2)
    assert r.passed
    stat = r.empirical["direct_postselection_probability"]
    assert abs(stat.value - 0.5) < 5.0 * math.sqrt(0.25 / stat.count)


# --- gauge check --------------------------------------------------------------------

def test_gauge_check_kick_zero():
    r = ab_gauge_check(0.7, 0.0, shots=0, seed=1)
    assert r.passed
    assert r.analytic["kicked_both_tvd"] == pytest.approx(0.0, abs=1e-12)


def test_gauge_check_kicking_all_charges_changes_nothing():
    for kick in (math.pi / 2.0, 1.0, 2.5):
        r = ab_gauge_check(0.7, kick, shots=0, seed=1)
        assert r.passed
        assert r.analytic["kicked_both_tvd"] < 1e-10


def test_gauge_check_kicking_test_only_shifts_phase():
    phi, kick = 0.7, math.pi / 2.0
    r = ab_gauge_check(phi, kick, shots=0, seed=1)
    assert r.analytic["kicked_test_only_coincidence"] == pytest.approx(
        coincidence_rate(phi + kick, +1.0), abs=1e-12
    )


def test_gauge_check_sampling():
    r = ab_gauge_check(0.3, 1.1, shots=20_000, seed=21)
    assert r.passed
    assert "kicked_both_coincidence" in r.empirical


# --- report structure -----------------------------------------------------------------

def test_report_schema_and_flags():
    r = photon_swap_experiment(0.4, shots=1_000, seed=9)
    d = r.to_dict()
    assert set(d) == {
        "experiment", "params", "seed", "shots",
        "analytic", "empirical", "discrepancies", "pass",
    }
    assert d["pass"] is True
    assert "swap_fidelity" in r.exact_only()
    for key, gap in r.discrepancies.items():
        assert gap == abs(r.analytic[key] - r.empirical[key].value)


def test_phi_canonicalized_mod_two_pi():
    r = photon_swap_experiment(2.0 * math.pi + 0.3, shots=0, seed=0)
    assert r.params["phi"] == pytest.approx(0.3)
