import math

import numpy as np
import pytest

from conftest import SKEWED, UNIFORM, random_pairs
from telepovm import protocol as pr
from telepovm import statevec as sv
from telepovm.errors import NumericalError, ValidationError
from telepovm.protocol import (
    BELL_ORDER,
    OUTCOME_ORDER,
    BellIndex,
    BellOutcome,
    Channel,
    Payload,
)
from telepovm.statevec import StateVector

P, M, SP, SM = BELL_ORDER


def bob(amps):
    return StateVector(("5", "6"), np.asarray(amps, dtype=complex)).normalized()


# ---- validation ---------------------------------------------------------


def test_payload_must_be_normalized():
    with pytest.raises(ValidationError):
        Payload(1, 1, 0, 0)
    Payload(0.5, 0.5j, -0.5, 0.5)


def test_channel_validation():
    with pytest.raises(ValidationError):
        Channel(1.0, 0.0, 0.0, 0.0)
    with pytest.raises(ValidationError):
        Channel(0.5, 0.5, 0.5, 0.6)
    with pytest.raises(ValidationError):
        Channel(0.5j, 0.5, 0.5, 0.5)
    Channel(-0.5, 0.5, 0.5, -0.5)


def test_channel_floor_is_inclusive():
    t = 1e-6
    rest = math.sqrt((1 - t * t) / 3)
    Channel(t, rest, rest, rest)
    with pytest.raises(ValidationError):
        Channel.normalized([0.9e-6, 1, 1, 1])


def test_haar_payload_is_normalized(rng):
    for _ in range(20):
        p = Payload.haar(rng)
        assert abs(np.linalg.norm(p.vector()) - 1) < 1e-12


# ---- world state ----------------------------------------------------------


def test_world_state_basis_payload_uniform_channel():
    w = pr.build_world_state(Payload(1, 0, 0, 0), Channel(*UNIFORM))
    nz = {i: a for i, a in enumerate(w.amps) if abs(a) > 1e-15}
    assert set(nz) == {int(b, 2) for b in ["000000", "001001", "000110", "001111"]}
    for a in nz.values():
        assert a == pytest.approx(0.5)


def test_world_state_dominant_amplitude():
    eps = 1e-3
    w = pr.build_world_state(Payload(0, 1, 0, 0), Channel.normalized([1, eps, eps, eps]))
    assert int(np.argmax(np.abs(w.amps))) == 0b010000


def test_world_state_norm_and_support():
    for p, c in random_pairs(100):
        w = pr.build_world_state(p, c)
        assert abs(w.norm2() - 1) < 1e-12
        assert np.count_nonzero(np.abs(w.amps) > 1e-15) == 16


# ---- Bell branches --------------------------------------------------------


def test_branch_probabilities_sum_to_one():
    for p, c in random_pairs(50, seed=11):
        probs = [o.probability for o, _ in pr.bell_branches(pr.build_world_state(p, c))]
        assert abs(sum(probs) - 1) < 1e-12


def test_batched_and_sequential_projection_agree():
    for p, c in random_pairs(20, seed=3):
        w = pr.build_world_state(p, c)
        for (o1, s1), (o2, s2) in zip(pr.bell_branches(w), pr.bell_branches_sequential(w)):
            assert o1.key == o2.key
            assert o1.probability == pytest.approx(o2.probability, abs=1e-14)
            np.testing.assert_allclose(s1.amps, s2.amps, atol=1e-14)


def test_uniform_inputs_give_equiprobable_branches():
    w = pr.build_world_state(Payload(*UNIFORM), Channel(*UNIFORM))
    for o, _ in pr.bell_branches(w):
        assert o.probability == pytest.approx(1 / 16, abs=1e-14)


def test_canonical_branch_of_basis_payload():
    w = pr.build_world_state(Payload(1, 0, 0, 0), Channel(*UNIFORM))
    (o, s) = pr.bell_branches(w)[0]
    assert o.key == (P, P)
    assert sv.fidelity(s.normalized(), sv.basis_state("56", "00")) == pytest.approx(1, abs=1e-12)


def test_psi_plus_on_14_collapsed_state():
    # aγ|10> + bδ|11> + cα|00> + dβ|01>
    p = Payload.normalized([0.3, 0.2 + 0.4j, -0.5, 0.6j])
    c = Channel(*SKEWED)
    a, b, cc, d = p.vector()
    al, be, ga, de = c.coeffs()
    expected = bob([cc * al, d * be, a * ga, b * de])
    branches = dict((o.key, s) for o, s in pr.bell_branches(pr.build_world_state(p, c)))
    got = branches[(P, SP)].normalized()
    assert sv.fidelity(got, expected) == pytest.approx(1, abs=1e-12)


def test_closed_form_against_projection():
    for p, c in random_pairs(50, seed=5):
        w = pr.build_world_state(p, c)
        for o, res in pr.bell_branches_sequential(w):
            cf, prob = pr.collapsed_closed_form(p, c, o)
            assert prob == pytest.approx(o.probability, abs=1e-12)
            assert sv.fidelity(cf, res.normalized()) == pytest.approx(1, abs=1e-10)


def test_closed_form_canonical_and_last():
    p = Payload.normalized([0.1, 0.7j, -0.3, 0.2])
    c = Channel(*SKEWED)
    a, b, cc, d = p.vector()
    al, be, ga, de = c.coeffs()
    n2 = abs(a * al) ** 2 + abs(b * be) ** 2 + abs(cc * ga) ** 2 + abs(d * de) ** 2
    s, prob = pr.collapsed_closed_form(p, c, (P, P))
    np.testing.assert_allclose(s.amps, np.array([a * al, b * be, cc * ga, d * de]) / math.sqrt(n2))
    assert prob == pytest.approx(n2 / 4, abs=1e-15)
    # Psi- on both pairs: aδ|11> − bγ|10> − cβ|01> + dα|00>
    s, _ = pr.collapsed_closed_form(p, c, (SM, SM))
    assert sv.fidelity(s, bob([d * al, -cc * be, -b * ga, a * de])) == pytest.approx(1, abs=1e-12)


def test_closed_form_tables_cover_all_outcomes():
    assert set(pr.CLOSED_FORMS) == set(OUTCOME_ORDER)


def test_equal_denominators_give_equal_probabilities():
    # the normalization depends only on which coefficient pairing the 14/23 Psi-ness selects
    for p, c in random_pairs(20, seed=9):
        probs = {o.key: o.probability for o, _ in pr.bell_branches(pr.build_world_state(p, c))}
        for p23 in BELL_ORDER:
            for p14 in BELL_ORDER:
                twin23 = {P: M, M: P, SP: SM, SM: SP}[p23]
                twin14 = {P: M, M: P, SP: SM, SM: SP}[p14]
                for k in [(twin23, p14), (p23, twin14), (twin23, twin14)]:
                    assert probs[(p23, p14)] == pytest.approx(probs[k], abs=1e-12)


def test_measure_bell_pairs_returns_normalized_conditional(rng):
    p, c = random_pairs(1, seed=21)[0]
    w = pr.build_world_state(p, c)
    for _ in range(20):
        o, s = pr.measure_bell_pairs(w, rng)
        cf, prob = pr.collapsed_closed_form(p, c, o)
        assert abs(s.norm2() - 1) < 1e-12
        assert o.probability == pytest.approx(prob, abs=1e-12)
        assert sv.fidelity(s, cf) == pytest.approx(1, abs=1e-10)


def test_measure_bell_pairs_is_reproducible():
    p, c = random_pairs(1, seed=4)[0]
    w = pr.build_world_state(p, c)
    a = [pr.measure_bell_pairs(w, np.random.default_rng(99))[0].key for _ in range(3)]
    assert len(set(a)) == 1
    g1, g2 = np.random.default_rng(5), np.random.default_rng(5)
    for _ in range(50):
        assert pr.measure_bell_pairs(w, g1)[0].key == pr.measure_bell_pairs_for(p, c, g2)[0].key


def test_measure_bell_pairs_needs_world_labels(rng):
    with pytest.raises(ValidationError):
        pr.measure_bell_pairs(sv.basis_state("123456"[:5], "00000"), rng)


def test_bell_frequencies_within_three_sigma():
    p = Payload.normalized([0.9, 0.3j, -0.2, 0.25])
    c = Channel(*SKEWED)
    g = np.random.default_rng(123)
    n = 100_000
    counts = dict.fromkeys(OUTCOME_ORDER, 0)
    for _ in range(n):
        counts[pr.measure_bell_pairs_for(p, c, g)[0].key] += 1
    for key in OUTCOME_ORDER:
        _, q = pr.collapsed_closed_form(p, c, key)
        sigma = math.sqrt(q * (1 - q) / n)
        assert abs(counts[key] / n - q) <= 3 * sigma, key


def test_sampler_refuses_drifted_probabilities(rng):
    with pytest.raises(NumericalError):
        pr._sample_index(np.array([0.5, 0.5 + 1e-6]), rng)
    # small drift is renormalized
    assert pr._sample_index(np.array([0.0, 1.0 + 1e-10]), rng) == 1


def test_sampler_never_picks_zero_weight():
    g = np.random.default_rng(0)
    probs = np.array([0.0, 0.5, 0.0, 0.5, 0.0])
    picks = {pr._sample_index(probs, g) for _ in range(2000)}
    assert picks == {1, 3}


# ---- Bob's deterministic stage -------------------------------------------


def test_attach_ancilla():
    s = pr.attach_ancilla(sv.basis_state("56", "00"))
    assert s.labels == ("5", "6", "a", "b")
    np.testing.assert_array_equal(s.amps, sv.basis_state("56ab", "0000").amps)
    p, c = random_pairs(1)[0]
    psi0, _ = pr.collapsed_closed_form(p, c, (P, P))
    s = pr.attach_ancilla(psi0)
    assert abs(s.norm2() - 1) < 1e-12
    np.testing.assert_allclose(s.amps[::4], psi0.amps)


def test_cnots_produce_correlated_register():
    p = Payload.normalized([0.3, -0.4j, 0.5, 0.2 + 0.1j])
    c = Channel(*SKEWED)
    psi0, _ = pr.collapsed_closed_form(p, c, (P, P))
    out = pr.apply_cnots(pr.attach_ancilla(psi0))
    expected = np.zeros(16, dtype=complex)
    for k, amp in enumerate(psi0.amps):
        expected[int(f"{k:02b}{k:02b}", 2)] = amp
    np.testing.assert_allclose(out.amps, expected, atol=1e-15)
    zero = pr.apply_cnots(sv.basis_state("56ab", "0000"))
    np.testing.assert_array_equal(zero.amps, sv.basis_state("56ab", "0000").amps)


def test_rearrangement_into_four_product_terms():
    p = Payload.normalized([0.3, -0.4j, 0.5, 0.2 + 0.1j])
    c = Channel(*SKEWED)
    psi0, prob = pr.collapsed_closed_form(p, c, (P, P))
    reg = pr.apply_cnots(pr.attach_ancilla(psi0))
    n = math.sqrt(4 * prob)
    signs = [[1, 1, 1, 1], [1, 1, -1, -1], [1, -1, 1, -1], [1, -1, -1, 1]]
    total = sum(np.kron(np.multiply(s, p.vector()), np.multiply(s, c.coeffs())) for s in signs)
    np.testing.assert_allclose(reg.amps, total / (4 * n), atol=1e-12)


def test_cnots_are_an_involution():
    for p, c in random_pairs(10):
        s0, _ = pr.collapsed_closed_form(p, c, (M, SP))
        reg = pr.attach_ancilla(s0)
        np.testing.assert_allclose(pr.apply_cnots(pr.apply_cnots(reg)).amps, reg.amps, atol=1e-12)


def test_bell_index_tokens():
    assert [str(b) for b in BELL_ORDER] == ["phi+", "phi-", "psi+", "psi-"]
    assert BellIndex.parse(" PSI- ") is SM
    assert str(BellOutcome(P, SM)) == "(phi+,psi-)"
