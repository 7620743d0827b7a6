import math

import numpy as np
import pytest

from conftest import SKEWED, UNIFORM, random_pairs
from telepovm import analysis
from telepovm import povm as pv
from telepovm.errors import InfeasibleX
from telepovm.protocol import OUTCOME_ORDER, Channel, Payload

GENERIC = Payload.normalized([0.2, 0.5j, -0.6, 0.3])


def test_skewed_frozen_probabilities():
    c = Channel(*SKEWED)
    assert analysis.total_success_probability(c) == pytest.approx(0.4, abs=1e-12)
    assert analysis.conditional_success_probability(c) == pytest.approx(0.025, abs=1e-12)


def test_uniform_is_deterministic():
    assert analysis.total_success_probability(Channel(*UNIFORM)) == pytest.approx(1, abs=1e-12)


def test_p_equals_four_min_square_at_x_min():
    for _, c in random_pairs(100, seed=5):
        assert analysis.total_success_probability(c) == pytest.approx(
            4 * np.min(c.coeffs() ** 2), abs=1e-12
        )


def test_p_scales_inversely_with_x():
    c = Channel(*SKEWED)
    x_min = pv.min_valid_x(c)
    p_min = analysis.total_success_probability(c)
    for x in [x_min, 2.0, 3.0, 4.0]:
        assert analysis.total_success_probability(c, x) == pytest.approx(p_min * x_min / x, abs=1e-12)
    with pytest.raises(InfeasibleX):
        analysis.total_success_probability(c, 1.5)


@pytest.mark.parametrize("xfrac", [0.0, 0.5, 1.0])
def test_enumeration_matches_closed_form(xfrac):
    for p, c in random_pairs(10, seed=9):
        x_min = pv.min_valid_x(c)
        x = x_min + xfrac * (4 - x_min)
        enum = analysis.enumerate_all_branches(p, c, x)
        cond = analysis.conditional_success_probability(c, x)
        assert len(enum.reports) == 16
        assert [r.bell_outcome.key for r in enum] == list(OUTCOME_ORDER)
        assert sum(r.bell_probability for r in enum) == pytest.approx(1, abs=1e-12)
        for r in enum:
            assert r.success_probability == pytest.approx(cond, abs=1e-12)
            assert sum(r.povm_probabilities) == pytest.approx(1, abs=1e-12)
        assert enum.total == pytest.approx(analysis.total_success_probability(c, x), abs=1e-12)
        assert enum.min_fidelity() >= 1 - 1e-10


def test_basis_payload_branches():
    p = Payload(1, 0, 0, 0)
    c = Channel(*SKEWED)
    enum = analysis.enumerate_all_branches(p, c)
    assert enum.total == pytest.approx(0.4, abs=1e-12)
    assert enum.min_fidelity() >= 1 - 1e-10
    # one surviving term overlaps every ancilla state equally
    for r in enum:
        np.testing.assert_allclose(r.povm_probabilities[:4], r.povm_probabilities[0], atol=1e-12)
        assert not any(math.isnan(f) for f in r.success_fidelities)


def test_format_table_lists_all_rows():
    text = analysis.format_table(analysis.enumerate_all_branches(GENERIC, Channel(*SKEWED)))
    lines = text.splitlines()
    assert len(lines) == 2 + 16 + 1
    assert lines[-1] == "total success probability: 0.400000000000"
